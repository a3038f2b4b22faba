//! Parameter types, exact samplers and closed-form moments for the Gamma,
//! Laplace, Gamma-difference, Arete and Staircase distributions.
//!
//! All samplers are pure functions of their parameters and the caller's
//! [`RngStream`]; two callers holding distinct streams may sample
//! concurrently.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::density::special::ln_gamma;
use crate::error::{positive, Error, Result};
use crate::rng::RngStream;

/// `Γ(shape, scale)` with density `e^{-t/θ} t^{α-1} / (Γ(α) θ^α)` on `t > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaParams {
    shape: f64,
    scale: f64,
}

impl GammaParams {
    /// Any positive shape is accepted, including values like `1e-300`.
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        Ok(Self {
            shape: positive("shape", shape)?,
            scale: positive("scale", scale)?,
        })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn mean(&self) -> f64 {
        self.shape * self.scale
    }

    pub fn variance(&self) -> f64 {
        self.shape * self.scale * self.scale
    }

    pub fn ln_density(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return f64::NEG_INFINITY;
        }
        -t / self.scale + (self.shape - 1.0) * t.ln()
            - ln_gamma(self.shape)
            - self.shape * self.scale.ln()
    }

    pub fn density(&self, t: f64) -> f64 {
        self.ln_density(t).exp()
    }
}

/// Zero-location Laplace distribution with scale `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LaplaceParams {
    scale: f64,
}

impl LaplaceParams {
    pub fn new(scale: f64) -> Result<Self> {
        Ok(Self {
            scale: positive("scale", scale)?,
        })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn density(&self, t: f64) -> f64 {
        (-t.abs() / self.scale).exp() / (2.0 * self.scale)
    }

    /// `P(X ≥ t)` for `t ≥ 0`.
    pub fn upper_tail(&self, t: f64) -> f64 {
        0.5 * (-t.max(0.0) / self.scale).exp()
    }
}

/// `Arete(α, θ, λ)`: the law of `X₁ − X₂ + Y` with `X₁, X₂ ~ Γ(α, θ)` and
/// `Y ~ Laplace(λ)` independent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AreteParams {
    alpha: f64,
    theta: f64,
    lambda: f64,
}

impl AreteParams {
    /// Rejects `alpha > 1`; only the sub-exponential-shape regime is supported.
    pub fn new(alpha: f64, theta: f64, lambda: f64) -> Result<Self> {
        let alpha = positive("alpha", alpha)?;
        if alpha > 1.0 {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: alpha,
                reason: "must not exceed 1",
            });
        }
        Ok(Self {
            alpha,
            theta: positive("theta", theta)?,
            lambda: positive("lambda", lambda)?,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gamma(&self) -> GammaParams {
        GammaParams {
            shape: self.alpha,
            scale: self.theta,
        }
    }

    pub fn laplace(&self) -> LaplaceParams {
        LaplaceParams { scale: self.lambda }
    }
}

/// Staircase distribution: density `a(γ)` on `[0, γΔ)`, `e^{-ε} a(γ)` on
/// `[γΔ, Δ)`, decaying by `e^{-ε}` per further `Δ`-step and mirrored for
/// negative arguments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StaircaseParams {
    epsilon: f64,
    delta_sens: f64,
    gamma: f64,
}

impl StaircaseParams {
    pub fn new(epsilon: f64, delta_sens: f64, gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidParameter {
                name: "gamma",
                value: gamma,
                reason: "must lie in [0, 1]",
            });
        }
        Ok(Self {
            epsilon: positive("epsilon", epsilon)?,
            delta_sens: positive("sensitivity", delta_sens)?,
            gamma,
        })
    }

    /// Uses `γ = e^{-ε/2}`, a magnitude-oriented default rather than a
    /// proven optimum.
    pub fn with_default_gamma(epsilon: f64, delta_sens: f64) -> Result<Self> {
        let epsilon = positive("epsilon", epsilon)?;
        Self::new(epsilon, delta_sens, (-epsilon / 2.0).exp())
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta_sens(&self) -> f64 {
        self.delta_sens
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    fn decay(&self) -> f64 {
        (-self.epsilon).exp()
    }

    /// The normalizer `a(γ) = (1 − e^{−ε}) / (2Δ(γ + e^{−ε}(1 − γ)))`.
    pub fn normalizer(&self) -> f64 {
        let b = self.decay();
        -(-self.epsilon).exp_m1() / (2.0 * self.delta_sens * (self.gamma + b * (1.0 - self.gamma)))
    }

    pub fn density(&self, t: f64) -> f64 {
        let x = t.abs();
        let k = (x / self.delta_sens).floor();
        let r = x - k * self.delta_sens;
        let level = if r < self.gamma * self.delta_sens {
            1.0
        } else {
            self.decay()
        };
        self.normalizer() * (-k * self.epsilon).exp() * level
    }

    /// Mass of one side (`t ≥ 0`) in segment `[kΔ, (k+1)Δ)`.
    pub fn side_segment_mass(&self, k: u32) -> f64 {
        let b = self.decay();
        self.normalizer()
            * (-(k as f64) * self.epsilon).exp()
            * self.delta_sens
            * (self.gamma + b * (1.0 - self.gamma))
    }

    /// Probability that a segment draw lands in the leading `[kΔ, kΔ+γΔ)`
    /// piece rather than the trailing `[kΔ+γΔ, (k+1)Δ)` one.
    pub fn leading_piece_probability(&self) -> f64 {
        let b = self.decay();
        self.gamma / (self.gamma + b * (1.0 - self.gamma))
    }

    /// Exact probability of `[lo, hi)`, integrated piece by piece.
    pub fn interval_mass(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        if hi <= 0.0 {
            self.positive_mass(-hi, -lo)
        } else if lo >= 0.0 {
            self.positive_mass(lo, hi)
        } else {
            self.positive_mass(0.0, -lo) + self.positive_mass(0.0, hi)
        }
    }

    fn positive_mass(&self, from: f64, to: f64) -> f64 {
        let step = self.delta_sens;
        let mut x = from;
        let mut total = 0.0;
        while x < to {
            let base = (x / step).floor() * step;
            let lead_end = base + self.gamma * step;
            let breakpoint = if x < lead_end { lead_end } else { base + step };
            let mut end = breakpoint.min(to);
            if end <= x {
                end = to.min(base + 2.0 * step);
            }
            total += self.density(0.5 * (x + end)) * (end - x);
            x = end;
        }
        total
    }
}

/// Closed-form moments of an Arete variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AreteMoments {
    /// `2αθ + λ`, an upper bound on `E|Z|`.
    pub expected_abs_upper: f64,
    /// `2αθ² + 2λ²`, exact.
    pub variance: f64,
}

pub fn arete_moments(params: &AreteParams) -> AreteMoments {
    let (a, t, l) = (params.alpha, params.theta, params.lambda);
    AreteMoments {
        expected_abs_upper: 2.0 * a * t + l,
        variance: 2.0 * a * t * t + 2.0 * l * l,
    }
}

/// Marsaglia–Tsang for `shape ≥ 1`, unit scale.
fn sample_gamma_unit_large(shape: f64, rng: &mut RngStream) -> f64 {
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let z: f64 = rng.sample(StandardNormal);
        let v = 1.0 + c * z;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = rng.open01();
        let z2 = z * z;
        if u < 1.0 - 0.0331 * z2 * z2 {
            return d * v;
        }
        if u.ln() < 0.5 * z2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// Natural log of a `Γ(shape, 1)` draw.
///
/// For `shape < 1` this uses `Γ(α) = Γ(α+1)·U^{1/α}` entirely in the log
/// domain, so it stays finite for shapes as small as `1e-300` where the
/// draw itself underflows.
pub fn sample_log_gamma_unit(shape: f64, rng: &mut RngStream) -> f64 {
    if shape >= 1.0 {
        sample_gamma_unit_large(shape, rng).ln()
    } else {
        let boosted = sample_gamma_unit_large(shape + 1.0, rng);
        let u = rng.open01();
        boosted.ln() + u.ln() / shape
    }
}

/// Draw from `Γ(shape, scale)`.
///
/// Draws smaller than `f64::MIN_POSITIVE` (≈ 2.2e-308) are returned as
/// exactly `0.0`. They carry no weight at double precision and, for the
/// shapes used here, flushing them has no measurable effect on any
/// statistic.
pub fn sample_gamma(params: &GammaParams, rng: &mut RngStream) -> f64 {
    let log_x = sample_log_gamma_unit(params.shape, rng) + params.scale.ln();
    if log_x < f64::MIN_POSITIVE.ln() {
        0.0
    } else {
        log_x.exp()
    }
}

pub fn sample_laplace(params: &LaplaceParams, rng: &mut RngStream) -> f64 {
    // inverse CDF on a symmetric uniform
    let u = rng.open01() - 0.5;
    let magnitude = -params.scale * (-2.0 * u.abs()).ln_1p();
    if u < 0.0 {
        -magnitude
    } else {
        magnitude
    }
}

pub fn sample_arete(params: &AreteParams, rng: &mut RngStream) -> f64 {
    let gamma = params.gamma();
    let x1 = sample_gamma(&gamma, rng);
    let x2 = sample_gamma(&gamma, rng);
    let y = sample_laplace(&params.laplace(), rng);
    x1 - x2 + y
}

/// Draws sign, geometric segment index, sub-piece and a uniform offset,
/// which reproduces the piecewise-constant density exactly.
pub fn sample_staircase(params: &StaircaseParams, rng: &mut RngStream) -> f64 {
    let negative = rng.coin();
    let k = (-rng.open01().ln() / params.epsilon).floor();
    let step = params.delta_sens;
    let lead = params.leading_piece_probability();
    let offset = if rng.open01() < lead {
        rng.open01() * params.gamma * step
    } else {
        params.gamma * step + rng.open01() * (1.0 - params.gamma) * step
    };
    let magnitude = k * step + offset;
    if negative {
        -magnitude
    } else {
        magnitude
    }
}
