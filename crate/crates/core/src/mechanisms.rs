//! Output-perturbation mechanisms: Arete, Laplace and Staircase.
//!
//! Arete parameters follow `α = e^{−ε/4}`, `θ = 4Δ/ε`, `λ = e^{−ε/4}`. That
//! rule is proven ε-DP only for `Δ ≥ 2/e` and `ε ≥ 20 + 4 ln Δ`. Below that
//! threshold [`Mode::Permissive`] still applies the rule but marks the result
//! as unproven; grid-based certification in [`crate::privacy`] is then the
//! way to check it.

use serde::{Deserialize, Serialize};

use crate::distributions::{
    arete_moments, sample_arete, sample_laplace, sample_staircase, AreteParams, LaplaceParams,
    StaircaseParams,
};
use crate::error::{positive, Error, Result};
use crate::rng::RngStream;
use crate::stats::Moments;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MechanismKind {
    Arete,
    Laplace,
    Staircase,
}

/// Whether Arete calibration must stay inside the proven domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Strict,
    Permissive,
}

/// Smallest Δ for which the calibration rule is proven.
pub fn min_strict_sensitivity() -> f64 {
    2.0 / std::f64::consts::E
}

/// Smallest ε for which the calibration rule is proven at sensitivity `Δ`.
pub fn strict_epsilon_threshold(sensitivity: f64) -> f64 {
    20.0 + 4.0 * sensitivity.ln()
}

/// The first violated proven-domain inequality, if any.
pub fn strict_domain_violation(epsilon: f64, sensitivity: f64) -> Option<Error> {
    if sensitivity < min_strict_sensitivity() {
        return Some(Error::Domain {
            inequality: "sensitivity >= 2/e",
            detail: format!("sensitivity = {sensitivity}"),
        });
    }
    let threshold = strict_epsilon_threshold(sensitivity);
    if epsilon < threshold {
        return Some(Error::Domain {
            inequality: "epsilon >= 20 + 4 ln(sensitivity)",
            detail: format!("epsilon = {epsilon} < {threshold}"),
        });
    }
    None
}

/// Calibrated Arete parameters and whether the privacy proof covers them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AreteCalibration {
    pub params: AreteParams,
    /// False for Permissive calibrations outside the proven domain: verify
    /// these empirically.
    pub proof_applies: bool,
}

pub fn parameterize_arete(epsilon: f64, sensitivity: f64, mode: Mode) -> Result<AreteCalibration> {
    let epsilon = positive("epsilon", epsilon)?;
    let sensitivity = positive("sensitivity", sensitivity)?;
    let violation = strict_domain_violation(epsilon, sensitivity);
    if let (Mode::Strict, Some(err)) = (mode, &violation) {
        return Err(err.clone());
    }
    let a = (-epsilon / 4.0).exp();
    Ok(AreteCalibration {
        params: AreteParams::new(a, 4.0 * sensitivity / epsilon, a)?,
        proof_applies: violation.is_none(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MechanismConfig {
    kind: MechanismKind,
    epsilon: f64,
    sensitivity: f64,
    mode: Mode,
}

impl MechanismConfig {
    /// Strict Arete configurations are checked against the proven domain here.
    pub fn new(kind: MechanismKind, epsilon: f64, sensitivity: f64, mode: Mode) -> Result<Self> {
        let epsilon = positive("epsilon", epsilon)?;
        let sensitivity = positive("sensitivity", sensitivity)?;
        if let (MechanismKind::Arete, Mode::Strict) = (kind, mode) {
            if let Some(err) = strict_domain_violation(epsilon, sensitivity) {
                return Err(err);
            }
        }
        Ok(Self {
            kind,
            epsilon,
            sensitivity,
            mode,
        })
    }

    pub fn kind(&self) -> MechanismKind {
        self.kind
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn sensitivity(&self) -> f64 {
        self.sensitivity
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// The noise distribution this configuration adds.
    pub fn noise_law(&self) -> Result<NoiseLaw> {
        Ok(match self.kind {
            MechanismKind::Arete => {
                NoiseLaw::Arete(parameterize_arete(self.epsilon, self.sensitivity, self.mode)?.params)
            }
            MechanismKind::Laplace => {
                NoiseLaw::Laplace(LaplaceParams::new(self.sensitivity / self.epsilon)?)
            }
            MechanismKind::Staircase => NoiseLaw::Staircase(StaircaseParams::with_default_gamma(
                self.epsilon,
                self.sensitivity,
            )?),
        })
    }
}

/// A fully parameterized noise distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum NoiseLaw {
    Arete(AreteParams),
    Laplace(LaplaceParams),
    Staircase(StaircaseParams),
}

impl NoiseLaw {
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        match self {
            NoiseLaw::Arete(p) => sample_arete(p, rng),
            NoiseLaw::Laplace(p) => sample_laplace(p, rng),
            NoiseLaw::Staircase(p) => sample_staircase(p, rng),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QueryResult {
    pub true_value: f64,
    pub noisy_value: f64,
    pub noise: f64,
}

pub fn apply_mechanism(
    config: &MechanismConfig,
    query_value: f64,
    rng: &mut RngStream,
) -> Result<QueryResult> {
    apply_with(config, query_value, |law| law.sample(rng))
}

fn apply_with(
    config: &MechanismConfig,
    query_value: f64,
    draw: impl FnOnce(&NoiseLaw) -> f64,
) -> Result<QueryResult> {
    let law = config.noise_law()?;
    let noise = draw(&law);
    Ok(QueryResult {
        true_value: query_value,
        noisy_value: query_value + noise,
        noise,
    })
}

/// One row of the mechanism error comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorRow {
    pub epsilon: f64,
    /// `E|Laplace noise| = Δ/ε`.
    pub laplace: f64,
    /// Closed-form upper bound `2αθ + λ`.
    pub arete_bound: f64,
    pub arete_mc: f64,
    pub arete_mc_se: f64,
    pub staircase_mc: f64,
    pub staircase_mc_se: f64,
    /// False when ε is below the proven Arete domain; the row is still
    /// computed with the same calibration rule.
    pub strict_domain: bool,
}

/// Expected noise magnitude of each mechanism at every `ε`, with `samples`
/// Monte Carlo draws per mechanism. Row `i` draws from `rng.fork(i)`.
pub fn error_table(
    epsilons: &[f64],
    sensitivity: f64,
    samples: usize,
    rng: &RngStream,
) -> Result<Vec<ErrorRow>> {
    if samples < 2 {
        return Err(Error::InvalidParameter {
            name: "samples",
            value: samples as f64,
            reason: "need at least two Monte Carlo samples",
        });
    }
    epsilons
        .iter()
        .enumerate()
        .map(|(i, &epsilon)| {
            let calibration = parameterize_arete(epsilon, sensitivity, Mode::Permissive)?;
            let stair = StaircaseParams::with_default_gamma(epsilon, sensitivity)?;
            let mut row_rng = rng.fork(i as u64);
            let arete: Vec<f64> = (0..samples)
                .map(|_| sample_arete(&calibration.params, &mut row_rng))
                .collect();
            let staircase: Vec<f64> = (0..samples)
                .map(|_| sample_staircase(&stair, &mut row_rng))
                .collect();
            let (a, s) = (Moments::of(&arete), Moments::of(&staircase));
            Ok(ErrorRow {
                epsilon,
                laplace: sensitivity / epsilon,
                arete_bound: arete_moments(&calibration.params).expected_abs_upper,
                arete_mc: a.mean_abs,
                arete_mc_se: a.mean_abs_se,
                staircase_mc: s.mean_abs,
                staircase_mc_se: s.mean_abs_se,
                strict_domain: calibration.proof_applies,
            })
        })
        .collect()
}
