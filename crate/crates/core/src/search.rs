//! Local search for Arete parameters with small noise and a grid-certified
//! privacy loss.
//!
//! The search is a deterministic coordinate pattern search in log space:
//! each of `α, θ, λ` is multiplied or divided by a step factor, the first
//! neighbor that improves on the incumbent is taken, and the factor shrinks
//! when a whole neighborhood fails. Feasibility means `ε̂ ≤ ε − margin` on a
//! grid whose extent grows with the candidate, and the reported optimum is
//! re-checked on a grid with half the step.

use std::collections::HashMap;

use serde::Serialize;

use crate::density::{arete_density_grid, GridSpec, DEFAULT_STEP};
use crate::distributions::{arete_moments, sample_arete, AreteParams};
use crate::error::{positive, Error, Result};
use crate::mechanisms::{parameterize_arete, Mode};
use crate::privacy::empirical_privacy_loss;
use crate::rng::RngStream;
use crate::stats::Moments;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Objective {
    /// The closed-form bound `2αθ + λ` on `E|Z|`.
    ExpectedAbs,
    /// The exact variance `2αθ² + 2λ²`.
    Variance,
}

impl Objective {
    pub fn value(self, params: &AreteParams) -> f64 {
        let m = arete_moments(params);
        match self {
            Objective::ExpectedAbs => m.expected_abs_upper,
            Objective::Variance => m.variance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchConfig {
    pub eps_target: f64,
    pub sensitivity: f64,
    pub objective: Objective,
    /// Multiplicative move sizes, tried from largest to smallest.
    pub step_factors: Vec<f64>,
    /// Number of neighborhood sweeps.
    pub max_iters: usize,
    /// Minimum grid; each candidate's grid is widened to its default extent.
    pub grid: GridSpec,
    /// Required slack `ε − ε̂`. `None` uses twice the candidate grid's
    /// discretization error.
    pub margin: Option<f64>,
    /// Draws for the final Monte Carlo estimate of `E|Z|`; 0 skips it.
    pub mc_samples: usize,
}

impl SearchConfig {
    /// Defaults: factors {2, 1.25, 1.05}, 200 sweeps, step 0.001, automatic
    /// margin, 10⁵ Monte Carlo draws.
    pub fn new(eps_target: f64, sensitivity: f64, objective: Objective) -> Result<Self> {
        let eps_target = positive("eps_target", eps_target)?;
        let sensitivity = positive("sensitivity", sensitivity)?;
        Ok(Self {
            eps_target,
            sensitivity,
            objective,
            step_factors: vec![2.0, 1.25, 1.05],
            max_iters: 200,
            grid: GridSpec::new(DEFAULT_STEP, 2.0 * sensitivity + 1.0)?,
            margin: None,
            mc_samples: 100_000,
        })
    }

    fn validate(&self) -> Result<()> {
        positive("eps_target", self.eps_target)?;
        positive("sensitivity", self.sensitivity)?;
        if self.step_factors.is_empty() || self.step_factors.iter().any(|f| !(f.is_finite() && *f > 1.0)) {
            return Err(Error::Config("step factors must be finite and greater than 1".into()));
        }
        if let Some(m) = self.margin {
            if !(m.is_finite() && m >= 0.0) {
                return Err(Error::Config("margin must be finite and nonnegative".into()));
            }
        }
        Ok(())
    }

    fn grid_for(&self, params: &AreteParams, step: f64) -> Result<GridSpec> {
        let natural = GridSpec::default_for(params, self.sensitivity, step)?;
        GridSpec::new(step, natural.half_width().max(self.grid.half_width()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluation {
    pub objective_value: f64,
    pub eps_hat: f64,
    pub discretization_error: f64,
    pub margin: f64,
    pub feasible: bool,
}

fn evaluate_on(params: &AreteParams, config: &SearchConfig, step: f64) -> Result<Evaluation> {
    let grid = config.grid_for(params, step)?;
    let density = arete_density_grid(params, &grid)?;
    let loss = empirical_privacy_loss(&density, config.sensitivity)?;
    let margin = config.margin.unwrap_or(2.0 * loss.discretization_error);
    Ok(Evaluation {
        objective_value: config.objective.value(params),
        eps_hat: loss.eps_hat,
        discretization_error: loss.discretization_error,
        margin,
        feasible: loss.eps_hat <= config.eps_target - margin,
    })
}

/// Objective, `ε̂` at shift Δ and feasibility of one parameter triple on the
/// configured grid step. Deterministic.
pub fn evaluate_candidate(params: &AreteParams, config: &SearchConfig) -> Result<Evaluation> {
    evaluate_on(params, config, config.grid.step())
}

/// Search preference: feasible beats infeasible, then lower objective among
/// feasible points and lower `ε̂` among infeasible ones.
fn improves(candidate: &Evaluation, incumbent: &Evaluation) -> bool {
    match (candidate.feasible, incumbent.feasible) {
        (true, false) => true,
        (false, true) => false,
        (true, true) => candidate.objective_value < incumbent.objective_value,
        (false, false) => candidate.eps_hat < incumbent.eps_hat,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub step_factor: f64,
    pub params: AreteParams,
    pub objective_value: f64,
    pub eps_hat: f64,
    pub feasible: bool,
    pub accepted: bool,
}

/// Half-step re-check of the reported optimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verification {
    pub step: f64,
    pub eps_hat: f64,
    pub margin: f64,
    pub passed: bool,
    /// Number of accepted incumbents discarded because they failed the
    /// re-check.
    pub walked_back: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchTrace {
    pub iterations: Vec<TraceEntry>,
    pub seed: AreteParams,
    pub best: AreteParams,
    pub best_objective: f64,
    pub best_eps_hat: f64,
    /// False when no visited point was feasible (then `best` is the seed) or
    /// when no feasible incumbent survived the half-step re-check.
    pub feasible: bool,
    pub verification: Option<Verification>,
    /// Monte Carlo `E|Z|` of `best` with its standard error.
    pub monte_carlo_abs: Option<(f64, f64)>,
    pub evaluations: usize,
}

fn key(p: &AreteParams) -> [u64; 3] {
    [p.alpha().to_bits(), p.theta().to_bits(), p.lambda().to_bits()]
}

/// Neighbors of `p` for `factor`: the six single-coordinate moves in the
/// fixed order α↓ α↑ θ↓ θ↑ λ↓ λ↑, then the twelve moves that scale two
/// coordinates at once. `α` is capped at 1; moves the cap makes void are
/// skipped.
fn neighbors(p: &AreteParams, factor: f64) -> Vec<AreteParams> {
    let base = [p.alpha(), p.theta(), p.lambda()];
    let mut exponents: Vec<[i32; 3]> = Vec::with_capacity(18);
    for coord in 0..3 {
        for dir in [-1, 1] {
            let mut e = [0; 3];
            e[coord] = dir;
            exponents.push(e);
        }
    }
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        for (di, dj) in [(-1, -1), (-1, 1), (1, -1), (1, 1)] {
            let mut e = [0; 3];
            e[i] = di;
            e[j] = dj;
            exponents.push(e);
        }
    }
    let mut out: Vec<AreteParams> = Vec::with_capacity(exponents.len());
    for e in &exponents {
        let scaled: Vec<f64> = (0..3).map(|c| base[c] * factor.powi(e[c])).collect();
        // Clamping α at 1 can map several moves onto one point.
        if let Ok(q) = AreteParams::new(scaled[0].min(1.0), scaled[1], scaled[2]) {
            if q != *p && !out.contains(&q) {
                out.push(q);
            }
        }
    }
    out
}

pub fn local_search(config: &SearchConfig, rng: &mut RngStream) -> Result<SearchTrace> {
    config.validate()?;
    let seed = parameterize_arete(config.eps_target, config.sensitivity, Mode::Permissive)?.params;
    let mut factors = config.step_factors.clone();
    factors.sort_by(|a, b| b.total_cmp(a));

    let mut cache: HashMap<[u64; 3], Evaluation> = HashMap::new();
    let mut evaluate = |p: &AreteParams| -> Result<Evaluation> {
        if let Some(e) = cache.get(&key(p)) {
            return Ok(*e);
        }
        let e = evaluate_candidate(p, config)?;
        cache.insert(key(p), e);
        Ok(e)
    };

    let mut incumbent = seed;
    let mut incumbent_eval = evaluate(&seed)?;
    let mut accepted_path = vec![(seed, incumbent_eval)];
    let mut iterations = Vec::new();
    let mut factor_index = 0;

    for iteration in 0..config.max_iters {
        let factor = factors[factor_index];
        let mut improved = false;
        let mut candidates = neighbors(&incumbent, factor);
        if incumbent_eval.feasible {
            // objectives are closed form, so trying the most promising
            // neighbor first costs nothing and makes first-improvement
            // behave like best-improvement
            candidates.sort_by(|a, b| config.objective.value(a).total_cmp(&config.objective.value(b)));
        }
        for candidate in candidates {
            let eval = evaluate(&candidate)?;
            let accepted = improves(&eval, &incumbent_eval);
            iterations.push(TraceEntry {
                iteration,
                step_factor: factor,
                params: candidate,
                objective_value: eval.objective_value,
                eps_hat: eval.eps_hat,
                feasible: eval.feasible,
                accepted,
            });
            if accepted {
                incumbent = candidate;
                incumbent_eval = eval;
                accepted_path.push((candidate, eval));
                improved = true;
                break;
            }
        }
        if !improved {
            if factor_index + 1 == factors.len() {
                break;
            }
            factor_index += 1;
        }
    }
    let evaluations = cache.len();

    // Re-check the most recent feasible incumbents on a finer grid, walking
    // back along the accepted path until one holds up.
    let mut verification = None;
    let mut chosen = None;
    let fine_step = 0.5 * config.grid.step();
    let mut walked_back = 0;
    for (params, eval) in accepted_path.iter().rev() {
        if !eval.feasible {
            break;
        }
        let fine = evaluate_on(params, config, fine_step)?;
        let passed = fine.eps_hat <= config.eps_target - fine.margin;
        verification = Some(Verification {
            step: fine_step,
            eps_hat: fine.eps_hat,
            margin: fine.margin,
            passed,
            walked_back,
        });
        if passed {
            chosen = Some((*params, *eval));
            break;
        }
        walked_back += 1;
    }
    let feasible = chosen.is_some();
    let (best, best_eval) = chosen.unwrap_or((seed, accepted_path[0].1));

    let monte_carlo_abs = (config.mc_samples >= 2).then(|| {
        let draws: Vec<f64> = (0..config.mc_samples).map(|_| sample_arete(&best, rng)).collect();
        let m = Moments::of(&draws);
        (m.mean_abs, m.mean_abs_se)
    });

    Ok(SearchTrace {
        iterations,
        seed,
        best,
        best_objective: best_eval.objective_value,
        best_eps_hat: best_eval.eps_hat,
        feasible,
        verification,
        monte_carlo_abs,
        evaluations,
    })
}
