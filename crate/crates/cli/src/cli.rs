//! Command-line flags. Numeric flags are range-checked while parsing so a
//! bad value never reaches the numerics.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Environment variable supplying the default `--seed`.
pub const SEED_ENV: &str = "ARETE_SEED";

#[derive(Debug, Parser)]
#[command(name = "arete", version, about = "Arete, Laplace and Staircase noise: sampling, density grids, privacy loss and simulation")]
pub struct Cli {
    /// Write data output to this file instead of standard output.
    #[arg(long, short, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw noise samples (CSV: index,value).
    Sample(SampleArgs),
    /// Draw one round of per-participant noise shares (CSV: participant,value).
    Shares(SharesArgs),
    /// Discretized density grid (CSV: x,mass,density).
    Density(GridArgs),
    /// Cumulative distribution from the density grid (CSV: x,cdf).
    Cdf(GridArgs),
    /// Privacy-loss certificate (JSON) or loss curve (CSV with --curve).
    Privacy(PrivacyArgs),
    /// Local search for low-error Arete parameters at a target ε (JSON).
    Search(SearchArgs),
    /// Expected error of each mechanism across ε (CSV).
    Errors(ErrorsArgs),
    /// Simulated private summation from a JSON config (JSON report).
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MechanismArg {
    Arete,
    Laplace,
    Staircase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ShareTargetArg {
    Arete,
    Laplace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    /// Closed-form bound 2αθ + λ on E|Z|.
    ExpectedAbs,
    /// Exact variance 2αθ² + 2λ².
    Variance,
}

#[derive(Debug, Clone, Args)]
pub struct NoiseArgs {
    /// Privacy parameter ε (unitless, > 0).
    #[arg(long, allow_negative_numbers = true, value_parser = positive_f64)]
    pub eps: f64,

    /// Query sensitivity Δ, in output units (> 0).
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true, value_parser = positive_f64)]
    pub sensitivity: f64,

    /// Calibrate Arete outside its proven domain (ε < 20 + 4 ln Δ or
    /// Δ < 2/e). Output metadata then records proof_applies=false.
    #[arg(long)]
    pub permissive: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SeedArg {
    /// RNG seed (64-bit). Defaults to $ARETE_SEED, else 0.
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, value_enum, default_value_t = MechanismArg::Arete)]
    pub mechanism: MechanismArg,

    #[command(flatten)]
    pub noise: NoiseArgs,

    /// Number of draws (≥ 1).
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,

    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Args)]
pub struct SharesArgs {
    /// Central noise law the shares add up to.
    #[arg(long, value_enum, default_value_t = ShareTargetArg::Arete)]
    pub target: ShareTargetArg,

    #[command(flatten)]
    pub noise: NoiseArgs,

    /// Number of participants n (≥ 1); each share is 1/n of the noise.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub participants: u64,

    #[command(flatten)]
    pub seed: SeedArg,
}

/// Explicit Arete parameters, bypassing the ε calibration.
#[derive(Debug, Clone, Args)]
pub struct AreteOverride {
    /// Gamma shape α in (0, 1]; requires --theta and --lambda.
    #[arg(long, requires_all = ["theta", "lambda"], value_parser = positive_f64)]
    pub alpha: Option<f64>,

    /// Gamma scale θ (output units, > 0).
    #[arg(long, requires_all = ["alpha", "lambda"], value_parser = positive_f64)]
    pub theta: Option<f64>,

    /// Laplace scale λ (output units, > 0).
    #[arg(long, requires_all = ["alpha", "theta"], value_parser = positive_f64)]
    pub lambda: Option<f64>,
}

impl AreteOverride {
    pub fn triple(&self) -> Option<(f64, f64, f64)> {
        Some((self.alpha?, self.theta?, self.lambda?))
    }
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long, value_enum, default_value_t = MechanismArg::Arete)]
    pub mechanism: MechanismArg,

    #[command(flatten)]
    pub noise: NoiseArgs,

    #[command(flatten)]
    pub params: AreteOverride,

    /// Grid step h, in output units (> 0).
    #[arg(long, default_value_t = 0.001, value_parser = positive_f64)]
    pub step: f64,

    /// Grid half-width, in output units. Default: wide enough that less
    /// than 1e-6 of the mass falls outside.
    #[arg(long, value_parser = positive_f64)]
    pub half_width: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PrivacyArgs {
    #[command(flatten)]
    pub grid: GridArgs,

    /// Largest shift on the loss curve, in output units. Default: 2Δ.
    #[arg(long, value_parser = positive_f64)]
    pub max_shift: Option<f64>,

    /// Number of evenly spaced curve points (≥ 2).
    #[arg(long, default_value_t = 101, value_parser = clap::value_parser!(u64).range(2..))]
    pub points: u64,

    /// Emit the loss curve as CSV (shift,loss) instead of the JSON
    /// certificate.
    #[arg(long)]
    pub curve: bool,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Target privacy parameter ε (> 0).
    #[arg(long, allow_negative_numbers = true, value_parser = positive_f64)]
    pub eps: f64,

    /// Query sensitivity Δ (> 0).
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true, value_parser = positive_f64)]
    pub sensitivity: f64,

    #[arg(long, value_enum, default_value_t = ObjectiveArg::ExpectedAbs)]
    pub objective: ObjectiveArg,

    /// Grid step used to score candidates (> 0); the winner is re-checked
    /// at half this step.
    #[arg(long, default_value_t = 0.001, value_parser = positive_f64)]
    pub step: f64,

    /// Maximum neighborhood sweeps.
    #[arg(long, default_value_t = 200)]
    pub max_iters: usize,

    /// Multiplicative move sizes, each > 1, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [2.0, 1.25, 1.05], value_parser = factor_f64)]
    pub factors: Vec<f64>,

    /// Required slack ε − ε̂. Default: twice the grid discretization error.
    #[arg(long, value_parser = nonnegative_f64)]
    pub margin: Option<f64>,

    /// Monte Carlo draws for the winner's E|Z| (0 skips it).
    #[arg(long, default_value_t = 100_000)]
    pub mc_samples: usize,

    /// Also write every evaluated candidate to this CSV file.
    #[arg(long, value_name = "PATH")]
    pub trace_csv: Option<PathBuf>,

    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Args)]
pub struct ErrorsArgs {
    /// ε values, comma separated (each > 0).
    #[arg(long, value_delimiter = ',', default_values_t = [24.0, 32.0, 40.0], allow_negative_numbers = true, value_parser = positive_f64)]
    pub eps: Vec<f64>,

    /// Query sensitivity Δ (> 0).
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true, value_parser = positive_f64)]
    pub sensitivity: f64,

    /// Monte Carlo draws per mechanism and ε (≥ 2).
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(2..))]
    pub samples: u64,

    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON simulation config. An array of configs runs a comparison and
    /// prints one summary row per config.
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,

    /// Client values, one number per line. Default: n values evenly spaced
    /// over value_range.
    #[arg(long, value_name = "PATH")]
    pub values: Option<PathBuf>,

    /// Also write per-trial results (CSV: trial,noisy_sum,noise). Single
    /// config only.
    #[arg(long, value_name = "PATH")]
    pub trials_csv: Option<PathBuf>,
}

fn parse_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if !v.is_finite() {
        return Err(format!("`{s}` is not finite"));
    }
    Ok(v)
}

fn positive_f64(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v <= 0.0 {
        return Err(format!("must be positive, got {v}"));
    }
    Ok(v)
}

fn nonnegative_f64(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v < 0.0 {
        return Err(format!("must be nonnegative, got {v}"));
    }
    Ok(v)
}

fn factor_f64(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v <= 1.0 {
        return Err(format!("step factors must exceed 1, got {v}"));
    }
    Ok(v)
}
