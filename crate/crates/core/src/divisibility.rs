//! Per-participant noise shares for distributed aggregation.
//!
//! Both Arete and Laplace noise are infinitely divisible: for every `n` the
//! central noise is the sum of `n` i.i.d. shares. Gamma variables divide by
//! shape, `Γ(α, θ) = Σᵢ Γ(α/n, θ)`, and a Laplace variable is a difference of
//! two exponentials, i.e. of two `Γ(1, λ)`.
//!
//! Share shapes `α/n` and `1/n` get small quickly. The Gamma sampler handles
//! them in the log domain and returns exactly 0 for draws below the smallest
//! normal double, which for these shapes is the typical outcome.

use serde::Serialize;

use crate::distributions::{sample_gamma, AreteParams, GammaParams, LaplaceParams};
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Central noise distribution that the shares reconstruct.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ShareTarget {
    Arete(AreteParams),
    Laplace(LaplaceParams),
}

impl ShareTarget {
    fn name(&self) -> &'static str {
        match self {
            ShareTarget::Arete(_) => "arete",
            ShareTarget::Laplace(_) => "laplace",
        }
    }
}

/// Recipe for one participant's share out of `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseShareSpec {
    n: usize,
    target: ShareTarget,
}

impl NoiseShareSpec {
    pub fn new(n: usize, target: ShareTarget) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                value: 0.0,
                reason: "need at least one participant",
            });
        }
        Ok(Self { n, target })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn target(&self) -> ShareTarget {
        self.target
    }

    fn check_index(&self, index: usize) -> Result<()> {
        if index >= self.n {
            return Err(Error::ParticipantIndex { index, n: self.n });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseShare {
    pub value: f64,
    pub participant_index: usize,
}

fn gamma_difference(params: &GammaParams, rng: &mut RngStream) -> f64 {
    let x1 = sample_gamma(params, rng);
    let x2 = sample_gamma(params, rng);
    x1 - x2
}

fn draw(target: &ShareTarget, n: usize, rng: &mut RngStream) -> Result<f64> {
    let n = n as f64;
    Ok(match target {
        ShareTarget::Arete(params) => {
            let x = GammaParams::new(params.alpha() / n, params.theta())?;
            let y = GammaParams::new(1.0 / n, params.lambda())?;
            gamma_difference(&x, rng) + gamma_difference(&y, rng)
        }
        ShareTarget::Laplace(params) => {
            let y = GammaParams::new(1.0 / n, params.scale())?;
            gamma_difference(&y, rng)
        }
    })
}

/// `X₁ − X₂ + Y₁ − Y₂` with `X ~ Γ(α/n, θ)` and `Y ~ Γ(1/n, λ)`.
pub fn arete_share(spec: &NoiseShareSpec, index: usize, rng: &mut RngStream) -> Result<NoiseShare> {
    if !matches!(spec.target, ShareTarget::Arete(_)) {
        return Err(Error::WrongTarget {
            expected: "arete",
            found: spec.target.name(),
        });
    }
    spec.check_index(index)?;
    Ok(NoiseShare {
        value: draw(&spec.target, spec.n, rng)?,
        participant_index: index,
    })
}

/// `X − Y` with `X, Y ~ Γ(1/n, λ)`.
pub fn laplace_share(spec: &NoiseShareSpec, index: usize, rng: &mut RngStream) -> Result<NoiseShare> {
    if !matches!(spec.target, ShareTarget::Laplace(_)) {
        return Err(Error::WrongTarget {
            expected: "laplace",
            found: spec.target.name(),
        });
    }
    spec.check_index(index)?;
    Ok(NoiseShare {
        value: draw(&spec.target, spec.n, rng)?,
        participant_index: index,
    })
}

/// A share built for divisor `n` but drawn by a participant beyond the
/// first `n`. Sums of more than `n` such shares carry extra noise, which
/// keeps the release private.
pub fn surplus_share(spec: &NoiseShareSpec, rng: &mut RngStream) -> Result<f64> {
    draw(&spec.target, spec.n, rng)
}

/// Share for whichever target `spec` names.
pub fn share(spec: &NoiseShareSpec, index: usize, rng: &mut RngStream) -> Result<NoiseShare> {
    match spec.target {
        ShareTarget::Arete(_) => arete_share(spec, index, rng),
        ShareTarget::Laplace(_) => laplace_share(spec, index, rng),
    }
}

/// All `n` shares, participant `i` drawing from `root.participant(i)`.
pub fn all_shares(spec: &NoiseShareSpec, root: &RngStream) -> Result<Vec<NoiseShare>> {
    (0..spec.n)
        .map(|i| share(spec, i, &mut root.participant(i as u64)))
        .collect()
}

/// Sum in list order.
pub fn sum_shares(shares: &[NoiseShare]) -> Result<f64> {
    if shares.is_empty() {
        return Err(Error::EmptyShares);
    }
    Ok(shares.iter().map(|s| s.value).sum())
}
