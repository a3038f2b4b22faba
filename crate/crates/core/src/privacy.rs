//! Privacy-loss certificates.
//!
//! Two independent routes:
//! - an empirical estimate `ε̂`, the largest log-ratio of grid masses `Δ`
//!   apart, which approximates `sup_t |ln f(t) − ln f(t+Δ)|`;
//! - a closed-form upper bound on `f_A(t)/f_A(t+Δ)` for Arete densities,
//!   valid under a list of parameter assumptions that are checked and
//!   reported one by one.
//!
//! The grid estimate is only as good as the grid: its error is of order
//! `h · sup |d ln f/dt|`, which is reported next to it. The closed form is a
//! guarantee but usually far from tight.

use std::f64::consts::LN_2;

use serde::Serialize;

use crate::density::special::{incomplete_gamma_pq, ln_gamma_1p, ACCURATE_SHAPE_RANGE};
use crate::density::DiscretizedDensity;
use crate::distributions::{AreteParams, StaircaseParams};
use crate::error::{positive, Error, Result};
use crate::mechanisms::{min_strict_sensitivity, parameterize_arete, strict_epsilon_threshold, Mode};

/// Bins lighter than this fraction of the peak are left out of loss
/// estimates; their logarithms are dominated by rounding.
pub const MASS_FLOOR: f64 = 1e-15;

/// Bins left out of a loss estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExcludedRange {
    /// Absolute mass below which a bin is excluded.
    pub floor: f64,
    pub excluded_bins: usize,
    /// Centers of the outermost bins that were used.
    pub admissible_lo: f64,
    pub admissible_hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossEstimate {
    pub shift: f64,
    pub shift_bins: usize,
    /// `shift_bins · h − shift`, the error introduced by rounding to the grid.
    pub rounding: f64,
    pub eps_hat: f64,
    /// Largest log-ratio between adjacent admissible bins: the resolution
    /// of `eps_hat`.
    pub discretization_error: f64,
    pub excluded: ExcludedRange,
}

/// Log-masses of a grid, with excluded bins set to `NaN`.
struct LogMasses {
    logs: Vec<f64>,
    excluded: ExcludedRange,
    discretization_error: f64,
}

impl LogMasses {
    fn new(density: &DiscretizedDensity) -> Self {
        let masses = density.masses();
        let peak = masses[density.peak_index()];
        let floor = MASS_FLOOR * peak;
        let logs: Vec<f64> = masses
            .iter()
            .map(|&m| if m >= floor && m > 0.0 { m.ln() } else { f64::NAN })
            .collect();
        let first = logs.iter().position(|l| !l.is_nan()).unwrap_or(0);
        let last = logs.iter().rposition(|l| !l.is_nan()).unwrap_or(0);
        let discretization_error = logs
            .windows(2)
            .map(|w| (w[0] - w[1]).abs())
            .filter(|d| !d.is_nan())
            .fold(0.0, f64::max);
        LogMasses {
            excluded: ExcludedRange {
                floor,
                excluded_bins: logs.iter().filter(|l| l.is_nan()).count(),
                admissible_lo: density.center(first),
                admissible_hi: density.center(last),
            },
            logs,
            discretization_error,
        }
    }

    fn loss(&self, shift_bins: usize) -> f64 {
        if shift_bins >= self.logs.len() {
            return 0.0;
        }
        self.logs
            .iter()
            .zip(&self.logs[shift_bins..])
            .map(|(a, b)| (a - b).abs())
            .filter(|d| !d.is_nan())
            .fold(0.0, f64::max)
    }
}

fn shift_bins(density: &DiscretizedDensity, shift: f64) -> Result<(usize, f64)> {
    if !(shift.is_finite() && shift >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "shift",
            value: shift,
            reason: "must be finite and nonnegative",
        });
    }
    let half_width = density.half_width();
    if shift > half_width {
        return Err(Error::ShiftOutOfRange { shift, half_width });
    }
    let bins = (shift / density.step()).round() as usize;
    Ok((bins, bins as f64 * density.step() - shift))
}

/// `ε̂` at one shift: the largest `|ln m(t) − ln m(t + shift)|` over pairs
/// of admissible bins. The shift is rounded to whole bins.
pub fn empirical_privacy_loss(density: &DiscretizedDensity, shift: f64) -> Result<LossEstimate> {
    let (bins, rounding) = shift_bins(density, shift)?;
    if density.truncation_tail() > crate::density::TAIL_WARNING {
        log::warn!(
            "privacy loss on a grid with truncation tail {:.3e}",
            density.truncation_tail()
        );
    }
    let logs = LogMasses::new(density);
    Ok(LossEstimate {
        shift,
        shift_bins: bins,
        rounding,
        eps_hat: logs.loss(bins),
        discretization_error: logs.discretization_error,
        excluded: logs.excluded,
    })
}

/// Worst-case loss as a function of the output shift.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrivacyProfile {
    pub shifts: Vec<f64>,
    pub losses: Vec<f64>,
    /// Loss at shift = sensitivity.
    pub eps_hat: f64,
    pub sensitivity: f64,
    pub discretization_error: f64,
    /// `None` for analytic profiles.
    pub excluded_range: Option<ExcludedRange>,
}

impl PrivacyProfile {
    /// Largest increase between consecutive points.
    pub fn max_jump(&self) -> f64 {
        self.losses
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .fold(0.0, f64::max)
    }
}

fn evenly_spaced(max_shift: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::InvalidParameter {
            name: "points",
            value: points as f64,
            reason: "need at least two curve points",
        });
    }
    let max_shift = positive("max_shift", max_shift)?;
    Ok((0..points)
        .map(|i| max_shift * i as f64 / (points - 1) as f64)
        .collect())
}

/// Losses at `points` evenly spaced shifts in `[0, max_shift]`, plus `ε̂`
/// at `sensitivity`.
pub fn privacy_loss_curve(
    density: &DiscretizedDensity,
    sensitivity: f64,
    max_shift: f64,
    points: usize,
) -> Result<PrivacyProfile> {
    let shifts = evenly_spaced(max_shift, points)?;
    let sensitivity = positive("sensitivity", sensitivity)?;
    let (sens_bins, _) = shift_bins(density, sensitivity)?;
    let logs = LogMasses::new(density);
    let losses = shifts
        .iter()
        .map(|&s| shift_bins(density, s).map(|(b, _)| logs.loss(b)))
        .collect::<Result<Vec<_>>>()?;
    Ok(PrivacyProfile {
        shifts,
        losses,
        eps_hat: logs.loss(sens_bins),
        sensitivity,
        discretization_error: logs.discretization_error,
        excluded_range: Some(logs.excluded),
    })
}

/// Exact Staircase loss `⌈a/Δ⌉ ε`: each further `Δ` of shift crosses one
/// more downward step of the density.
pub fn staircase_loss(params: &StaircaseParams, shift: f64) -> f64 {
    let a = shift.abs();
    if a == 0.0 {
        return 0.0;
    }
    (a / params.delta_sens()).ceil() * params.epsilon()
}

pub fn staircase_loss_curve(
    params: &StaircaseParams,
    max_shift: f64,
    points: usize,
) -> Result<PrivacyProfile> {
    let shifts = evenly_spaced(max_shift, points)?;
    let losses = shifts.iter().map(|&s| staircase_loss(params, s)).collect();
    Ok(PrivacyProfile {
        shifts,
        losses,
        eps_hat: staircase_loss(params, params.delta_sens()),
        sensitivity: params.delta_sens(),
        discretization_error: 0.0,
        excluded_range: None,
    })
}

/// One checked inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionCheck {
    pub inequality: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// Intermediate quantities of the derivation, recorded for reference
    /// and not part of the certification decision.
    pub informational: bool,
}

impl AssumptionCheck {
    fn le(inequality: &str, lhs: f64, rhs: f64) -> Self {
        Self {
            inequality: inequality.to_string(),
            lhs,
            rhs,
            holds: lhs <= rhs,
            informational: false,
        }
    }

    fn note(inequality: &str, lhs: f64, rhs: f64) -> Self {
        Self {
            informational: true,
            ..Self::le(inequality, lhs, rhs)
        }
    }
}

/// Closed-form bound on the density ratio `f_A(t)/f_A(t+Δ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyticBoundReport {
    /// `2e^{(Δ_Γ+Δ)/θ} e^α (αθ+Δ_Γ+Δ) / (α c_{Δ_Γ} c_L λ)` with the exact
    /// `c_{Δ_Γ}`. May overflow to infinity; `ln_bound` does not.
    pub bound_value: f64,
    pub ln_bound: f64,
    /// The same bound with the conservative constant `c_{Δ_Γ} = 1/2`.
    pub bound_value_half_constant: f64,
    /// `Δ_Γ = αθ`, the Gamma mean, used as a median upper bound.
    pub delta_gamma: f64,
    /// `c_{Δ_Γ} = P(α, Δ_Γ/θ)`, or `1/2` when `α` is outside the accurate
    /// range of the incomplete gamma routine.
    pub c_delta_gamma: f64,
    pub c_delta_gamma_exact: bool,
    /// `c_L = 1/4`, the Laplace mass lower bound.
    pub c_laplace: f64,
    pub assumptions_checked: Vec<AssumptionCheck>,
    /// The ε being certified: the requested target for
    /// [`verify_parameter_setting`], `ln_bound` for [`analytic_ratio_bound`].
    pub target_epsilon: f64,
    pub epsilon_certified: bool,
}

impl AnalyticBoundReport {
    pub fn failed(&self) -> impl Iterator<Item = &AssumptionCheck> {
        self.assumptions_checked
            .iter()
            .filter(|a| !a.informational && !a.holds)
    }
}

/// Evaluates the closed-form ratio bound and its assumptions.
///
/// With no target ε, `epsilon_certified` means every assumption holds, so
/// the mechanism is `ln(bound_value)`-DP.
pub fn analytic_ratio_bound(params: &AreteParams, sensitivity: f64) -> Result<AnalyticBoundReport> {
    let delta = positive("sensitivity", sensitivity)?;
    let (alpha, theta, lambda) = (params.alpha(), params.theta(), params.lambda());
    let delta_gamma = alpha * theta;
    let c_laplace: f64 = 0.25;

    let exact = (ACCURATE_SHAPE_RANGE.0..=ACCURATE_SHAPE_RANGE.1).contains(&alpha);
    let c_delta_gamma = if exact {
        incomplete_gamma_pq(alpha, delta_gamma / theta).0
    } else {
        0.5
    };

    let ln_without_c = LN_2 + (delta_gamma + delta) / theta + alpha
        + (alpha * theta + delta_gamma + delta).ln()
        - alpha.ln()
        - c_laplace.ln()
        - lambda.ln();
    let ln_bound = ln_without_c - c_delta_gamma.ln();

    // Γ(α) ≤ 1/α is Γ(1+α) ≤ 1; allow a few ulps of rounding at α = 1.
    let gamma_1p = ln_gamma_1p(alpha).exp();
    let mut checks = vec![
        AssumptionCheck::le("0 < alpha <= 1", alpha, 1.0),
        AssumptionCheck::le("theta <= delta_gamma + sensitivity", theta, delta_gamma + delta),
        AssumptionCheck::le("lambda <= theta / 2", lambda, theta / 2.0),
        AssumptionCheck::le("lambda <= sensitivity / ln 2", lambda, delta / LN_2),
        AssumptionCheck::le("Gamma(alpha) <= 1/alpha", gamma_1p, 1.0 + 4.0 * f64::EPSILON),
    ];
    let c_split = 2.0 * c_delta_gamma;
    checks.push(AssumptionCheck::note(
        "split point delta_u = alpha * theta (lhs), Gamma mean (rhs)",
        delta_gamma,
        alpha * theta,
    ));
    checks.push(AssumptionCheck::note("1 <= c_delta_u <= 2 (lhs = c_delta_u)", c_split, 2.0));

    let all_hold = checks.iter().all(|c| c.informational || c.holds);
    Ok(AnalyticBoundReport {
        bound_value: ln_bound.exp(),
        ln_bound,
        bound_value_half_constant: (ln_without_c - 0.5f64.ln()).exp(),
        delta_gamma,
        c_delta_gamma,
        c_delta_gamma_exact: exact,
        c_laplace,
        assumptions_checked: checks,
        target_epsilon: ln_bound,
        epsilon_certified: all_hold,
    })
}

/// Calibrates Arete for `(ε, Δ)` and checks that the closed-form bound
/// certifies ε: every assumption, the proven-domain inequalities,
/// `α ≤ 1/2`, `θ ≤ Δ/(1−α)` and `bound ≤ e^ε`.
///
/// Domain failures are reported, not returned as errors; only nonpositive
/// inputs are rejected.
pub fn verify_parameter_setting(epsilon: f64, sensitivity: f64) -> Result<AnalyticBoundReport> {
    let calibration = parameterize_arete(epsilon, sensitivity, Mode::Permissive)?;
    let params = calibration.params;
    let mut report = analytic_ratio_bound(&params, sensitivity)?;
    let alpha = params.alpha();
    let extra = [
        AssumptionCheck::le("2/e <= sensitivity", min_strict_sensitivity(), sensitivity),
        AssumptionCheck::le(
            "20 + 4 ln(sensitivity) <= epsilon",
            strict_epsilon_threshold(sensitivity),
            epsilon,
        ),
        AssumptionCheck::le("alpha <= 1/2", alpha, 0.5),
        AssumptionCheck::le("theta <= sensitivity / (1 - alpha)", params.theta(), sensitivity / (1.0 - alpha)),
        AssumptionCheck::le("ln(bound) <= epsilon", report.ln_bound, epsilon),
    ];
    report.assumptions_checked.extend(extra);
    report.target_epsilon = epsilon;
    let certified = report.failed().next().is_none();
    report.epsilon_certified = certified;
    Ok(report)
}
