//! Simulated private summation across many clients.
//!
//! Each of `n` clients holds a value in `[lo, hi]` and, in the distributed
//! modes, adds one infinitely divisible noise share before handing it to an
//! aggregator. The aggregator only ever sees the total. Secure aggregation is
//! modelled as ideal: contributions are summed exactly as received.
//!
//! A sum over `[lo, hi]` has replacement sensitivity `hi − lo`, so Δ is
//! derived from the value range rather than supplied.
//!
//! Trial `t` draws from `root.fork(t)`. Within a trial, client `i` uses
//! `participant(i)` of that stream and the central draw uses its own fork.

use serde::{Deserialize, Serialize};

use crate::distributions::LaplaceParams;
use crate::divisibility::{share, surplus_share, NoiseShareSpec, ShareTarget};
use crate::error::{Error, Result};
use crate::mechanisms::{parameterize_arete, Mode, NoiseLaw};
use crate::rng::RngStream;
use crate::stats::Moments;

const CENTRAL_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMechanism {
    DistributedArete,
    DistributedLaplace,
    CentralArete,
    CentralLaplace,
    NoNoise,
}

impl SimMechanism {
    fn is_distributed(self) -> bool {
        matches!(self, SimMechanism::DistributedArete | SimMechanism::DistributedLaplace)
    }
}

/// Simulation settings, readable from JSON with the same field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub n: usize,
    pub value_range: [f64; 2],
    pub mechanism: SimMechanism,
    pub epsilon: f64,
    pub trials: usize,
    pub seed: u64,
    /// Clients that actually add a share; `None` means all `n`.
    #[serde(default)]
    pub participation: Option<usize>,
    /// Allow Arete calibration outside its proven domain.
    #[serde(default)]
    pub permissive: bool,
}

impl SimConfig {
    pub fn new(n: usize, value_range: [f64; 2], mechanism: SimMechanism, epsilon: f64) -> Self {
        Self {
            n,
            value_range,
            mechanism,
            epsilon,
            trials: 1,
            seed: 0,
            participation: None,
            permissive: false,
        }
    }

    pub fn participation(&self) -> usize {
        self.participation.unwrap_or(self.n)
    }

    pub fn sensitivity(&self) -> f64 {
        self.value_range[1] - self.value_range[0]
    }

    pub fn mode(&self) -> Mode {
        if self.permissive {
            Mode::Permissive
        } else {
            Mode::Strict
        }
    }

    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.value_range;
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::Config(format!("value_range [{lo}, {hi}] needs finite hi > lo")));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.participation() == 0 {
            return Err(Error::Config("participation must be at least 1".into()));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        Ok(())
    }

    /// Noise law of the full central draw, or `None` without noise.
    pub fn noise_law(&self) -> Result<Option<NoiseLaw>> {
        let delta = self.sensitivity();
        Ok(match self.mechanism {
            SimMechanism::DistributedArete | SimMechanism::CentralArete => Some(NoiseLaw::Arete(
                parameterize_arete(self.epsilon, delta, self.mode())?.params,
            )),
            SimMechanism::DistributedLaplace | SimMechanism::CentralLaplace => {
                Some(NoiseLaw::Laplace(LaplaceParams::new(delta / self.epsilon)?))
            }
            SimMechanism::NoNoise => None,
        })
    }

    fn check_values(&self, values: &[f64]) -> Result<()> {
        if values.len() != self.n {
            return Err(Error::Config(format!(
                "expected {} client values, got {}",
                self.n,
                values.len()
            )));
        }
        let [lo, hi] = self.value_range;
        for (index, &value) in values.iter().enumerate() {
            if !(lo..=hi).contains(&value) {
                return Err(Error::Input { index, value, lo, hi });
            }
        }
        Ok(())
    }
}

/// What the aggregator released in one round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Round {
    pub true_sum: f64,
    pub noisy_sum: f64,
    /// Sum of every noise term drawn this round.
    pub noise: f64,
}

struct Plan {
    law: Option<NoiseLaw>,
    shares: Option<NoiseShareSpec>,
    participation: usize,
}

impl Plan {
    fn new(config: &SimConfig) -> Result<Self> {
        config.validate()?;
        let law = config.noise_law()?;
        let shares = match (config.mechanism.is_distributed(), law) {
            (true, Some(NoiseLaw::Arete(p))) => {
                Some(NoiseShareSpec::new(config.n, ShareTarget::Arete(p))?)
            }
            (true, Some(NoiseLaw::Laplace(p))) => {
                Some(NoiseShareSpec::new(config.n, ShareTarget::Laplace(p))?)
            }
            _ => None,
        };
        Ok(Self {
            law,
            shares,
            participation: config.participation(),
        })
    }

    fn round(&self, true_sum: f64, trial: &RngStream) -> Result<Round> {
        let noise = match (&self.shares, &self.law) {
            (Some(spec), _) => {
                let mut noise = 0.0;
                for i in 0..self.participation {
                    let mut rng = trial.participant(i as u64);
                    noise += if i < spec.n() {
                        share(spec, i, &mut rng)?.value
                    } else {
                        surplus_share(spec, &mut rng)?
                    };
                }
                noise
            }
            (None, Some(law)) => law.sample(&mut trial.fork(CENTRAL_STREAM)),
            (None, None) => 0.0,
        };
        Ok(Round {
            true_sum,
            noisy_sum: true_sum + noise,
            noise,
        })
    }
}

fn exact_sum(values: &[f64]) -> f64 {
    values.iter().sum()
}

/// One aggregation round on trial stream `trial_index`.
pub fn run_round(config: &SimConfig, values: &[f64], trial_index: u64) -> Result<Round> {
    let plan = Plan::new(config)?;
    config.check_values(values)?;
    let root = RngStream::new(config.seed);
    plan.round(exact_sum(values), &root.fork(trial_index))
}

/// Aggregate outcome of `trials` independent rounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub mechanism: SimMechanism,
    pub n: usize,
    pub participation: usize,
    pub epsilon: f64,
    pub sensitivity: f64,
    pub trials: usize,
    pub seed: u64,
    pub true_sum: f64,
    pub noisy_sums: Vec<f64>,
    pub noises: Vec<f64>,
    pub mean_abs_error: f64,
    pub mean_abs_error_se: f64,
    pub rmse: f64,
    pub noise_variance: f64,
    /// Central noise law the mechanism reconstructs, `None` without noise.
    pub law: Option<NoiseLaw>,
    /// Whether the calibration is inside a proven privacy domain.
    pub proof_applies: bool,
    /// Set when fewer than `n` clients added shares.
    pub privacy_degraded: bool,
    /// The ε guarantee claimed for this release, if any.
    pub epsilon_claim: Option<f64>,
}

/// One line of a mechanism comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub mechanism: SimMechanism,
    pub epsilon: f64,
    pub mean_abs_error: f64,
    pub mean_abs_error_se: f64,
    pub rmse: f64,
    pub law: Option<NoiseLaw>,
    pub epsilon_claim: Option<f64>,
    pub privacy_degraded: bool,
}

impl SimReport {
    pub fn row(&self) -> ComparisonRow {
        ComparisonRow {
            mechanism: self.mechanism,
            epsilon: self.epsilon,
            mean_abs_error: self.mean_abs_error,
            mean_abs_error_se: self.mean_abs_error_se,
            rmse: self.rmse,
            law: self.law,
            epsilon_claim: self.epsilon_claim,
            privacy_degraded: self.privacy_degraded,
        }
    }
}

pub fn run_trials(config: &SimConfig, values: &[f64]) -> Result<SimReport> {
    let plan = Plan::new(config)?;
    config.check_values(values)?;
    let root = RngStream::new(config.seed);
    let true_sum = exact_sum(values);
    let mut noisy_sums = Vec::with_capacity(config.trials);
    let mut noises = Vec::with_capacity(config.trials);
    for t in 0..config.trials {
        let round = plan.round(true_sum, &root.fork(t as u64))?;
        noisy_sums.push(round.noisy_sum);
        noises.push(round.noise);
    }

    let trials = config.trials as f64;
    let errors: Vec<f64> = noisy_sums.iter().map(|s| (s - true_sum).abs()).collect();
    let mean_abs_error = errors.iter().sum::<f64>() / trials;
    let rmse = (errors.iter().map(|e| e * e).sum::<f64>() / trials).sqrt();
    let (mean_abs_error_se, noise_variance) = if config.trials >= 2 {
        let m = Moments::of(&noises);
        (Moments::of(&errors).mean_se, m.variance)
    } else {
        (0.0, 0.0)
    };

    let proof_applies = match plan.law {
        Some(NoiseLaw::Arete(_)) => {
            parameterize_arete(config.epsilon, config.sensitivity(), Mode::Permissive)?
                .proof_applies
        }
        _ => true,
    };
    let privacy_degraded = plan.shares.is_some() && plan.participation < config.n;
    let epsilon_claim = match plan.law {
        Some(_) if proof_applies && !privacy_degraded => Some(config.epsilon),
        _ => None,
    };

    Ok(SimReport {
        mechanism: config.mechanism,
        n: config.n,
        participation: plan.participation,
        epsilon: config.epsilon,
        sensitivity: config.sensitivity(),
        trials: config.trials,
        seed: config.seed,
        true_sum,
        noisy_sums,
        noises,
        mean_abs_error,
        mean_abs_error_se,
        rmse,
        noise_variance,
        law: plan.law,
        proof_applies,
        privacy_degraded,
        epsilon_claim,
    })
}

/// Runs every config on the same values. The configs must agree on `n`,
/// `value_range`, `trials` and `seed`.
pub fn compare_mechanisms(configs: &[SimConfig], values: &[f64]) -> Result<Vec<SimReport>> {
    let Some(first) = configs.first() else {
        return Err(Error::Config("no configurations to compare".into()));
    };
    for (i, c) in configs.iter().enumerate().skip(1) {
        let field = if c.n != first.n {
            Some("n")
        } else if c.value_range != first.value_range {
            Some("value_range")
        } else if c.trials != first.trials {
            Some("trials")
        } else if c.seed != first.seed {
            Some("seed")
        } else {
            None
        };
        if let Some(field) = field {
            return Err(Error::Config(format!(
                "config {i} differs from config 0 in shared field `{field}`"
            )));
        }
    }
    configs.iter().map(|c| run_trials(c, values)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(mechanism: SimMechanism) -> SimConfig {
        SimConfig {
            trials: 50,
            seed: 3,
            ..SimConfig::new(4, [0.0, 1.0], mechanism, 24.0)
        }
    }

    const VALUES: [f64; 4] = [0.25, 0.5, 1.0, 0.0];

    #[test]
    fn no_noise_is_exact() {
        let r = run_trials(&config(SimMechanism::NoNoise), &VALUES).unwrap();
        assert_eq!(r.mean_abs_error, 0.0);
        assert_eq!(r.rmse, 0.0);
        assert!(r.noisy_sums.iter().all(|&s| s == 1.75));
        assert_eq!(r.law, None);
    }

    #[test]
    fn out_of_range_value_names_client() {
        let err = run_round(&config(SimMechanism::CentralLaplace), &[0.0, 0.5, 1.5, 0.2], 0)
            .unwrap_err();
        assert!(matches!(err, Error::Input { index: 2, .. }));
    }

    #[test]
    fn wrong_value_count_is_rejected() {
        let err = run_trials(&config(SimMechanism::NoNoise), &[0.0]).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn round_matches_trial_entry() {
        let c = config(SimMechanism::DistributedArete);
        let report = run_trials(&c, &VALUES).unwrap();
        let round = run_round(&c, &VALUES, 7).unwrap();
        assert_eq!(round.noisy_sum, report.noisy_sums[7]);
        assert_eq!(round.noise, report.noises[7]);
    }

    #[test]
    fn dropout_is_flagged_without_claim() {
        let mut c = config(SimMechanism::DistributedLaplace);
        c.participation = Some(2);
        let r = run_trials(&c, &VALUES).unwrap();
        assert!(r.privacy_degraded);
        assert_eq!(r.epsilon_claim, None);
        c.participation = None;
        let r = run_trials(&c, &VALUES).unwrap();
        assert!(!r.privacy_degraded);
        assert_eq!(r.epsilon_claim, Some(24.0));
    }

    #[test]
    fn strict_arete_outside_domain_is_rejected() {
        let mut c = config(SimMechanism::CentralArete);
        c.epsilon = 6.0;
        assert!(matches!(run_trials(&c, &VALUES), Err(Error::Domain { .. })));
        c.permissive = true;
        let r = run_trials(&c, &VALUES).unwrap();
        assert!(!r.proof_applies);
        assert_eq!(r.epsilon_claim, None);
    }

    #[test]
    fn compare_rejects_mismatched_seed() {
        let a = config(SimMechanism::NoNoise);
        let mut b = config(SimMechanism::CentralLaplace);
        b.seed = 4;
        let err = compare_mechanisms(&[a, b], &VALUES).unwrap_err();
        assert!(matches!(err, Error::Config(msg) if msg.contains("seed")));
    }
}
