//! One function per subcommand.

use std::fs;
use std::io::Write;
use std::path::Path;

use arete_core::density::{
    arete_density_grid, cdf_from_density, discretize_laplace, discretize_staircase, Alignment,
    DiscretizedDensity, GridSpec,
};
use arete_core::distributions::{AreteParams, LaplaceParams, StaircaseParams};
use arete_core::divisibility::{all_shares, sum_shares, NoiseShareSpec, ShareTarget};
use arete_core::fedsum::{compare_mechanisms, run_trials, SimConfig};
use arete_core::mechanisms::{
    error_table, parameterize_arete, MechanismConfig, MechanismKind, Mode, NoiseLaw,
};
use arete_core::privacy::{
    analytic_ratio_bound, privacy_loss_curve, staircase_loss, verify_parameter_setting,
    AnalyticBoundReport, ExcludedRange,
};
use arete_core::search::{local_search, Objective, SearchConfig};
use arete_core::RngStream;
use serde::Serialize;

use crate::cli::{
    ErrorsArgs, GridArgs, MechanismArg, NoiseArgs, ObjectiveArg, PrivacyArgs, SampleArgs,
    SearchArgs, ShareTargetArg, SharesArgs, SimulateArgs,
};
use crate::output::{self, json, Csv, Meta};
use crate::CliError;

// Mass allowed outside Laplace and Staircase default grids.
const DEFAULT_TAIL_LN: f64 = 13.815_510_557_964_274; // ln 1e6

fn mode(noise: &NoiseArgs) -> Mode {
    if noise.permissive {
        Mode::Permissive
    } else {
        Mode::Strict
    }
}

fn mode_name(noise: &NoiseArgs) -> &'static str {
    if noise.permissive {
        "permissive"
    } else {
        "strict"
    }
}

fn kind(m: MechanismArg) -> MechanismKind {
    match m {
        MechanismArg::Arete => MechanismKind::Arete,
        MechanismArg::Laplace => MechanismKind::Laplace,
        MechanismArg::Staircase => MechanismKind::Staircase,
    }
}

fn describe_law(meta: &mut Meta, law: &NoiseLaw) {
    match law {
        NoiseLaw::Arete(p) => {
            meta.push("alpha", p.alpha());
            meta.push("theta", p.theta());
            meta.push("lambda", p.lambda());
        }
        NoiseLaw::Laplace(p) => meta.push("scale", p.scale()),
        NoiseLaw::Staircase(p) => meta.push("gamma", p.gamma()),
    }
}

/// Common metadata for ε-calibrated noise; records whether the Arete proof
/// covers the calibration.
fn noise_meta(command: &'static str, mechanism: &str, noise: &NoiseArgs) -> Result<Meta, CliError> {
    let mut meta = Meta::new(command)
        .with("mechanism", mechanism)
        .with("eps", noise.eps)
        .with("sensitivity", noise.sensitivity)
        .with("mode", mode_name(noise));
    if mechanism == "arete" {
        let calibration = parameterize_arete(noise.eps, noise.sensitivity, mode(noise))?;
        meta.push("proof_applies", calibration.proof_applies);
    }
    Ok(meta)
}

pub fn sample(args: &SampleArgs, out: Box<dyn Write>) -> Result<(), CliError> {
    let noise = &args.noise;
    let config = MechanismConfig::new(kind(args.mechanism), noise.eps, noise.sensitivity, mode(noise))?;
    let law = config.noise_law()?;
    let mut meta = noise_meta("sample", mechanism_name(args.mechanism), noise)?;
    describe_law(&mut meta, &law);
    meta.push("n", args.n);
    meta.push("seed", args.seed.seed);

    let mut rng = RngStream::new(args.seed.seed);
    let mut csv = Csv::new(out, &meta, &["index", "value"])?;
    for i in 0..args.n {
        csv.row(&[&i, &law.sample(&mut rng)])?;
    }
    Ok(csv.finish()?)
}

fn mechanism_name(m: MechanismArg) -> &'static str {
    match m {
        MechanismArg::Arete => "arete",
        MechanismArg::Laplace => "laplace",
        MechanismArg::Staircase => "staircase",
    }
}

pub fn shares(args: &SharesArgs, out: Box<dyn Write>) -> Result<(), CliError> {
    let noise = &args.noise;
    let (name, target) = match args.target {
        ShareTargetArg::Arete => (
            "arete",
            ShareTarget::Arete(parameterize_arete(noise.eps, noise.sensitivity, mode(noise))?.params),
        ),
        ShareTargetArg::Laplace => (
            "laplace",
            ShareTarget::Laplace(LaplaceParams::new(noise.sensitivity / noise.eps)?),
        ),
    };
    let spec = NoiseShareSpec::new(args.participants as usize, target)?;
    let drawn = all_shares(&spec, &RngStream::new(args.seed.seed))?;
    let total = sum_shares(&drawn)?;

    let mut meta = noise_meta("shares", name, noise)?;
    meta.push("participants", args.participants);
    meta.push("seed", args.seed.seed);
    meta.push("sum", total);
    let mut csv = Csv::new(out, &meta, &["participant", "value"])?;
    for s in &drawn {
        csv.row(&[&s.participant_index, &s.value])?;
    }
    Ok(csv.finish()?)
}

/// A density grid plus what is needed to describe and certify it.
struct BuiltGrid {
    density: DiscretizedDensity,
    meta: Meta,
    arete: Option<AreteParams>,
    staircase: Option<StaircaseParams>,
    proof_applies: Option<bool>,
}

fn build_grid(command: &'static str, args: &GridArgs) -> Result<BuiltGrid, CliError> {
    let noise = &args.noise;
    let delta = noise.sensitivity;
    let mut meta = Meta::new(command)
        .with("mechanism", mechanism_name(args.mechanism))
        .with("eps", noise.eps)
        .with("sensitivity", delta);
    let override_triple = args.params.triple();
    if override_triple.is_some() && args.mechanism != MechanismArg::Arete {
        return Err(CliError::Usage("--alpha/--theta/--lambda apply only to --mechanism arete".into()));
    }
    let mut built = match args.mechanism {
        MechanismArg::Arete => {
            let (params, proof_applies) = match override_triple {
                Some((a, t, l)) => {
                    meta.push("mode", "custom");
                    (AreteParams::new(a, t, l)?, None)
                }
                None => {
                    let c = parameterize_arete(noise.eps, delta, mode(noise))?;
                    meta.push("mode", mode_name(noise));
                    meta.push("proof_applies", c.proof_applies);
                    (c.params, Some(c.proof_applies))
                }
            };
            describe_law(&mut meta, &NoiseLaw::Arete(params));
            let grid = match args.half_width {
                Some(w) => GridSpec::new(args.step, w)?,
                None => GridSpec::default_for(&params, delta, args.step)?,
            };
            BuiltGrid {
                density: arete_density_grid(&params, &grid)?,
                meta,
                arete: Some(params),
                staircase: None,
                proof_applies,
            }
        }
        MechanismArg::Laplace => {
            let params = LaplaceParams::new(delta / noise.eps)?;
            describe_law(&mut meta, &NoiseLaw::Laplace(params));
            let w = args
                .half_width
                .unwrap_or((2.0 * delta + 1.0).max(params.scale() * DEFAULT_TAIL_LN));
            BuiltGrid {
                density: discretize_laplace(&params, &GridSpec::new(args.step, w)?)?,
                meta,
                arete: None,
                staircase: None,
                proof_applies: Some(true),
            }
        }
        MechanismArg::Staircase => {
            let params = StaircaseParams::with_default_gamma(noise.eps, delta)?;
            describe_law(&mut meta, &NoiseLaw::Staircase(params));
            let w = args
                .half_width
                .unwrap_or((2.0 * delta + 1.0).max(delta * ((DEFAULT_TAIL_LN / noise.eps).ceil() + 1.0)));
            BuiltGrid {
                density: discretize_staircase(&params, &GridSpec::new(args.step, w)?)?,
                meta,
                arete: None,
                staircase: Some(params),
                proof_applies: Some(true),
            }
        }
    };
    let d = &built.density;
    built.meta.push("step", d.step());
    built.meta.push("half_width", d.half_width());
    built.meta.push("alignment", alignment_name(d.alignment()));
    built.meta.push("truncation_tail", d.truncation_tail());
    Ok(built)
}

fn alignment_name(a: Alignment) -> &'static str {
    match a {
        Alignment::Edge => "edge",
        Alignment::Centered => "centered",
    }
}

pub fn density(args: &GridArgs, out: Box<dyn Write>) -> Result<(), CliError> {
    let built = build_grid("density", args)?;
    let d = &built.density;
    let mut csv = Csv::new(out, &built.meta, &["x", "mass", "density"])?;
    for (i, &m) in d.masses().iter().enumerate() {
        csv.row(&[&d.center(i), &m, &(m / d.step())])?;
    }
    Ok(csv.finish()?)
}

pub fn cdf(args: &GridArgs, out: Box<dyn Write>) -> Result<(), CliError> {
    let built = build_grid("cdf", args)?;
    let mut csv = Csv::new(out, &built.meta, &["x", "cdf"])?;
    for p in cdf_from_density(&built.density) {
        csv.row(&[&p.x, &p.cdf])?;
    }
    Ok(csv.finish()?)
}

#[derive(Debug, Serialize)]
struct GridSummary {
    step: f64,
    half_width: f64,
    alignment: &'static str,
    truncation_tail: f64,
}

#[derive(Debug, Serialize)]
struct PrivacyCertificate {
    mechanism: &'static str,
    epsilon: f64,
    sensitivity: f64,
    /// `None` for explicitly supplied Arete parameters.
    proof_applies: Option<bool>,
    params: Option<NoiseLaw>,
    grid: GridSummary,
    eps_hat: f64,
    discretization_error: f64,
    excluded_range: Option<ExcludedRange>,
    eps_hat_within_target: bool,
    /// Closed-form Arete ratio bound and its assumption checks.
    analytic: Option<AnalyticBoundReport>,
    /// Exact Staircase loss at shift Δ.
    exact_loss: Option<f64>,
}

pub fn privacy(args: &PrivacyArgs, out: Box<dyn Write>) -> Result<(), CliError> {
    let built = build_grid("privacy", &args.grid)?;
    let noise = &args.grid.noise;
    let d = &built.density;
    let max_shift = args
        .max_shift
        .unwrap_or((2.0 * noise.sensitivity).min(d.half_width()));
    let curve = privacy_loss_curve(d, noise.sensitivity, max_shift, args.points as usize)?;

    if args.curve {
        let mut meta = built.meta;
        meta.push("eps_hat", curve.eps_hat);
        meta.push("discretization_error", curve.discretization_error);
        let mut header = vec!["shift", "loss"];
        if built.staircase.is_some() {
            header.push("exact_loss");
        }
        let mut csv = Csv::new(out, &meta, &header)?;
        for (s, l) in curve.shifts.iter().zip(&curve.losses) {
            match &built.staircase {
                Some(p) => csv.row(&[s, l, &staircase_loss(p, *s)])?,
                None => csv.row(&[s, l])?,
            }
        }
        return Ok(csv.finish()?);
    }

    let analytic = match (built.arete, args.grid.params.triple()) {
        (Some(p), Some(_)) => Some(analytic_ratio_bound(&p, noise.sensitivity)?),
        (Some(_), None) => Some(verify_parameter_setting(noise.eps, noise.sensitivity)?),
        _ => None,
    };
    let params = match (built.arete, built.staircase, args.grid.mechanism) {
        (Some(p), _, _) => Some(NoiseLaw::Arete(p)),
        (_, Some(p), _) => Some(NoiseLaw::Staircase(p)),
        (_, _, MechanismArg::Laplace) => Some(NoiseLaw::Laplace(LaplaceParams::new(
            noise.sensitivity / noise.eps,
        )?)),
        _ => None,
    };
    let certificate = PrivacyCertificate {
        mechanism: mechanism_name(args.grid.mechanism),
        epsilon: noise.eps,
        sensitivity: noise.sensitivity,
        proof_applies: built.proof_applies,
        params,
        grid: GridSummary {
            step: d.step(),
            half_width: d.half_width(),
            alignment: alignment_name(d.alignment()),
            truncation_tail: d.truncation_tail(),
        },
        eps_hat: curve.eps_hat,
        discretization_error: curve.discretization_error,
        excluded_range: curve.excluded_range,
        eps_hat_within_target: curve.eps_hat <= noise.eps,
        analytic,
        exact_loss: built.staircase.map(|p| staircase_loss(&p, noise.sensitivity)),
    };
    Ok(json(out, &certificate)?)
}

#[derive(Debug, Serialize)]
struct SearchOutput<'a> {
    config: &'a SearchConfig,
    seed: u64,
    trace: &'a arete_core::search::SearchTrace,
}

pub fn search(args: &SearchArgs, out: Box<dyn Write>) -> Result<(), CliError> {
    let objective = match args.objective {
        ObjectiveArg::ExpectedAbs => Objective::ExpectedAbs,
        ObjectiveArg::Variance => Objective::Variance,
    };
    let mut config = SearchConfig::new(args.eps, args.sensitivity, objective)?;
    config.grid = GridSpec::new(args.step, 2.0 * args.sensitivity + 1.0)?;
    config.max_iters = args.max_iters;
    config.step_factors = args.factors.clone();
    config.margin = args.margin;
    config.mc_samples = args.mc_samples;

    let trace = local_search(&config, &mut RngStream::new(args.seed.seed))?;
    if let Some(path) = &args.trace_csv {
        let meta = Meta::new("search")
            .with("eps", args.eps)
            .with("sensitivity", args.sensitivity)
            .with("step", args.step)
            .with("seed", args.seed.seed);
        let mut csv = Csv::new(
            output::open(Some(path))?,
            &meta,
            &["iteration", "step_factor", "alpha", "theta", "lambda", "objective", "eps_hat", "feasible", "accepted"],
        )?;
        for e in &trace.iterations {
            csv.row(&[
                &e.iteration,
                &e.step_factor,
                &e.params.alpha(),
                &e.params.theta(),
                &e.params.lambda(),
                &e.objective_value,
                &e.eps_hat,
                &e.feasible,
                &e.accepted,
            ])?;
        }
        csv.finish()?;
    }
    Ok(json(
        out,
        &SearchOutput {
            config: &config,
            seed: args.seed.seed,
            trace: &trace,
        },
    )?)
}

pub fn errors(args: &ErrorsArgs, out: Box<dyn Write>) -> Result<(), CliError> {
    let rows = error_table(&args.eps, args.sensitivity, args.samples as usize, &RngStream::new(args.seed.seed))?;
    let meta = Meta::new("errors")
        .with("sensitivity", args.sensitivity)
        .with("samples", args.samples)
        .with("seed", args.seed.seed);
    let mut csv = Csv::new(
        out,
        &meta,
        &["epsilon", "laplace", "arete_bound", "arete_mc", "arete_mc_se", "staircase_mc", "staircase_mc_se", "strict_domain"],
    )?;
    for r in &rows {
        csv.row(&[
            &r.epsilon,
            &r.laplace,
            &r.arete_bound,
            &r.arete_mc,
            &r.arete_mc_se,
            &r.staircase_mc,
            &r.staircase_mc_se,
            &r.strict_domain,
        ])?;
    }
    Ok(csv.finish()?)
}

fn read_input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Input {
        path: path.display().to_string(),
        source,
    })
}

fn read_values(path: &Path) -> Result<Vec<f64>, CliError> {
    read_input(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .enumerate()
        .map(|(i, l)| {
            l.parse::<f64>()
                .map_err(|_| CliError::Usage(format!("{}: value {} is not a number: `{l}`", path.display(), i + 1)))
        })
        .collect()
}

fn evenly_spaced(config: &SimConfig) -> Vec<f64> {
    let [lo, hi] = config.value_range;
    if config.n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..config.n)
        .map(|i| lo + (hi - lo) * i as f64 / (config.n - 1) as f64)
        .collect()
}

fn mechanism_label(config: &SimConfig) -> String {
    serde_json::to_value(config.mechanism)
        .ok()
        .and_then(|v| v.as_str().map(String::from))
        .unwrap_or_default()
}

pub fn simulate(args: &SimulateArgs, out: Box<dyn Write>) -> Result<(), CliError> {
    let text = read_input(&args.config)?;
    let bad_config = |e: serde_json::Error| CliError::Usage(format!("{}: {e}", args.config.display()));
    let value: serde_json::Value = serde_json::from_str(&text).map_err(bad_config)?;
    let configs: Vec<SimConfig> = if value.is_array() {
        serde_json::from_value(value).map_err(bad_config)?
    } else {
        vec![serde_json::from_value(value).map_err(bad_config)?]
    };
    let first = configs
        .first()
        .ok_or_else(|| CliError::Usage("config array is empty".into()))?;
    let values = match &args.values {
        Some(path) => read_values(path)?,
        None => evenly_spaced(first),
    };

    if configs.len() > 1 {
        if args.trials_csv.is_some() {
            return Err(CliError::Usage("--trials-csv needs a single config".into()));
        }
        let rows: Vec<_> = compare_mechanisms(&configs, &values)?
            .iter()
            .map(|r| r.row())
            .collect();
        return Ok(json(out, &rows)?);
    }

    let report = run_trials(first, &values)?;
    if let Some(path) = &args.trials_csv {
        let meta = Meta::new("simulate")
            .with("mechanism", mechanism_label(first))
            .with("n", first.n)
            .with("participation", first.participation())
            .with("eps", first.epsilon)
            .with("sensitivity", first.sensitivity())
            .with("trials", first.trials)
            .with("seed", first.seed)
            .with("permissive", first.permissive);
        let mut csv = Csv::new(output::open(Some(path))?, &meta, &["trial", "noisy_sum", "noise"])?;
        for (t, (s, z)) in report.noisy_sums.iter().zip(&report.noises).enumerate() {
            csv.row(&[&t, s, z])?;
        }
        csv.finish()?;
    }
    Ok(json(out, &report)?)
}
