//! Uniform-grid probability-mass approximations of continuous densities.
//!
//! Every bin stores the exact probability of its interval, never a point
//! evaluation: the Gamma density diverges at 0 for shapes below one, so point
//! values are meaningless there. Mass that falls off the grid is carried in
//! [`DiscretizedDensity::truncation_tail`] instead of being dropped.
//!
//! Two lattice alignments occur. Grids built from a distribution directly use
//! [`Alignment::Edge`] bins `[kh, (k+1)h)`, so 0 sits on a bin boundary.
//! Convolving two edge-aligned grids shifts the lattice by half a step and
//! yields [`Alignment::Centered`] bins `[kh − h/2, kh + h/2)`. Tracking this
//! keeps symmetric inputs exactly symmetric after convolution.

pub mod special;

use log::warn;
use serde::Serialize;

use crate::distributions::{AreteParams, GammaParams, LaplaceParams, StaircaseParams};
use crate::error::{positive, Error, Result};
use special::{incomplete_gamma_pq, mass_between};

pub use special::{regularized_lower_incomplete_gamma, regularized_upper_incomplete_gamma};

/// Default grid spacing, matching the resolution used for the published
/// density plots.
pub const DEFAULT_STEP: f64 = 0.001;

/// Grids are widened until at most this much mass falls outside.
pub const DEFAULT_TAIL_TARGET: f64 = 1e-6;

/// A grid step above this multiple of a distribution's scale is rejected.
pub const RESOLUTION_FACTOR: f64 = 10.0;

/// Gamma tail mass below which [`gamma_difference_grid`] stops pairing bins.
const DIFFERENCE_CUTOFF: f64 = 1e-25;

/// Consumers warn when handed a grid with more truncated mass than this.
pub const TAIL_WARNING: f64 = 1e-4;

/// Spacing and extent of a grid spanning `[−half_width, half_width]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    step: f64,
    half_width: f64,
}

impl GridSpec {
    pub fn new(step: f64, half_width: f64) -> Result<Self> {
        let step = positive("step", step)?;
        let half_width = positive("half_width", half_width)?;
        if half_width < 10.0 * step {
            return Err(Error::InvalidParameter {
                name: "half_width",
                value: half_width,
                reason: "must be at least 10 grid steps",
            });
        }
        Ok(Self { step, half_width })
    }

    /// `half_width = max(20θ, 20λ, 2Δ + 1)`, widened by half until the
    /// estimated mass outside the grid drops below [`DEFAULT_TAIL_TARGET`].
    pub fn default_for(params: &AreteParams, sensitivity: f64, step: f64) -> Result<Self> {
        let sensitivity = positive("sensitivity", sensitivity)?;
        let mut half_width = (20.0 * params.theta())
            .max(20.0 * params.lambda())
            .max(2.0 * sensitivity + 1.0);
        while arete_tail_estimate(params, half_width) >= DEFAULT_TAIL_TARGET {
            half_width *= 1.5;
        }
        Self::new(step, half_width.max(10.0 * step))
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Same extent with a different spacing.
    pub fn with_step(&self, step: f64) -> Result<Self> {
        Self::new(step, self.half_width)
    }

    /// Bins per side.
    fn bins_per_side(&self) -> usize {
        (self.half_width / self.step).ceil() as usize
    }
}

// |X₁ − X₂ + Y| ≤ max(X₁, X₂) + |Y|, so a union bound over X₁, X₂ and |Y|
// exceeding w/2 bounds P(|Z| > w).
fn arete_tail_estimate(params: &AreteParams, w: f64) -> f64 {
    let q = incomplete_gamma_pq(params.alpha(), 0.5 * w / params.theta()).1;
    2.0 * q + (-0.5 * w / params.lambda()).exp()
}

/// Placement of bin centers relative to multiples of the step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Alignment {
    /// Bin `k` is `[kh, (k+1)h)`; the origin bin is `[0, h)`.
    Edge,
    /// Bin `k` is centered on `kh`; the origin bin straddles 0.
    Centered,
}

impl Alignment {
    fn phase(self) -> f64 {
        match self {
            Alignment::Edge => 0.5,
            Alignment::Centered => 0.0,
        }
    }
}

/// Probability masses on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscretizedDensity {
    step: f64,
    origin_index: usize,
    alignment: Alignment,
    masses: Vec<f64>,
    truncation_tail: f64,
}

impl DiscretizedDensity {
    /// Builds a grid from raw masses; `origin_index` is the bin containing 0.
    pub fn from_masses(
        step: f64,
        origin_index: usize,
        alignment: Alignment,
        masses: Vec<f64>,
        truncation_tail: f64,
    ) -> Result<Self> {
        let step = positive("step", step)?;
        if origin_index >= masses.len() {
            return Err(Error::InvalidParameter {
                name: "origin_index",
                value: origin_index as f64,
                reason: "must index a bin of the grid",
            });
        }
        if masses.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::InvalidParameter {
                name: "masses",
                value: f64::NAN,
                reason: "must be finite and nonnegative",
            });
        }
        let total: f64 = masses.iter().sum::<f64>() + truncation_tail;
        if !(truncation_tail >= 0.0 && (total - 1.0).abs() <= 1e-9) {
            return Err(Error::InvalidParameter {
                name: "truncation_tail",
                value: truncation_tail,
                reason: "masses plus tail must sum to 1",
            });
        }
        Ok(Self {
            step,
            origin_index,
            alignment,
            masses,
            truncation_tail,
        })
    }

    /// All mass in a single centered bin at 0: the identity for [`convolve`].
    pub fn point_mass(step: f64) -> Result<Self> {
        Self::from_masses(step, 0, Alignment::Centered, vec![1.0], 0.0)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn origin_index(&self) -> usize {
        self.origin_index
    }

    pub fn alignment(&self) -> Alignment {
        self.alignment
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn truncation_tail(&self) -> f64 {
        self.truncation_tail
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// Center of bin `index`.
    pub fn center(&self, index: usize) -> f64 {
        (index as f64 - self.origin_index as f64 + self.alignment.phase()) * self.step
    }

    /// Left edge of bin `index`.
    pub fn lower_edge(&self, index: usize) -> f64 {
        self.center(index) - 0.5 * self.step
    }

    /// Smallest distance from 0 to either end of the grid.
    pub fn half_width(&self) -> f64 {
        let left = -self.lower_edge(0);
        let right = self.lower_edge(self.len() - 1) + self.step;
        left.min(right)
    }

    /// Sum of in-grid masses.
    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        let first: f64 = self
            .masses
            .iter()
            .enumerate()
            .map(|(i, m)| m * self.center(i))
            .sum();
        first / self.total_mass()
    }

    /// Variance of the in-grid masses treated as point masses at bin centers.
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        let second: f64 = self
            .masses
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let d = self.center(i) - mean;
                m * d * d
            })
            .sum();
        second / self.total_mass()
    }

    /// Index of the bin that mirrors `index` through 0, if it is on the grid.
    pub fn mirror_index(&self, index: usize) -> Option<usize> {
        let o = self.origin_index as isize;
        let i = index as isize;
        let mirrored = match self.alignment {
            Alignment::Centered => 2 * o - i,
            Alignment::Edge => 2 * o - 1 - i,
        };
        (0..self.len() as isize)
            .contains(&mirrored)
            .then_some(mirrored as usize)
    }

    /// Largest `|m(t) − m(−t)|` over bins whose mirror is on the grid.
    pub fn max_asymmetry(&self) -> f64 {
        (0..self.len())
            .filter_map(|i| self.mirror_index(i).map(|j| (self.masses[i] - self.masses[j]).abs()))
            .fold(0.0, f64::max)
    }

    /// Index of the largest mass.
    pub fn peak_index(&self) -> usize {
        self.masses
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bm), (i, &m)| if m > bm { (i, m) } else { (bi, bm) })
            .0
    }

    /// Mass of the bin containing 0 (for centered grids) or the two bins
    /// touching 0 (for edge grids), averaged so both alignments compare.
    pub fn central_mass(&self) -> f64 {
        match self.alignment {
            Alignment::Centered => self.masses[self.origin_index],
            Alignment::Edge => {
                let right = self.masses[self.origin_index];
                let left = if self.origin_index > 0 {
                    self.masses[self.origin_index - 1]
                } else {
                    0.0
                };
                0.5 * (left + right)
            }
        }
    }

    /// Law of `−X`.
    pub fn reflect(&self) -> DiscretizedDensity {
        let len = self.len();
        let origin_index = match self.alignment {
            Alignment::Edge => len - self.origin_index,
            Alignment::Centered => len - 1 - self.origin_index,
        };
        let mut masses = self.masses.clone();
        masses.reverse();
        // An edge grid whose origin bin is its last bin reflects to an origin
        // one past the end; pad so the origin stays addressable.
        if origin_index >= len {
            masses.push(0.0);
        }
        DiscretizedDensity {
            step: self.step,
            origin_index,
            alignment: self.alignment,
            masses,
            truncation_tail: self.truncation_tail,
        }
    }

    fn warn_if_truncated(&self, context: &str) {
        if self.truncation_tail > TAIL_WARNING {
            warn!(
                "{context}: grid has truncation tail {:.3e}; results near the grid edge are unreliable",
                self.truncation_tail
            );
        }
    }
}

// A grid that puts essentially the whole distribution into one bin still has
// exact masses but cannot resolve its shape.
fn check_resolution(grid: &GridSpec, scale: f64) -> Result<()> {
    let limit = RESOLUTION_FACTOR * scale;
    if grid.step > limit {
        return Err(Error::Resolution {
            step: grid.step,
            scale,
            limit,
        });
    }
    Ok(())
}

/// Edge-aligned `Γ(α, θ)` grid on `[−Nh, Nh)` with `N = ⌈half_width/h⌉`.
/// Bins below 0 are present but empty.
pub fn discretize_gamma(params: &GammaParams, grid: &GridSpec) -> Result<DiscretizedDensity> {
    check_resolution(grid, params.scale())?;
    let n = grid.bins_per_side();
    let h = grid.step / params.scale();
    let shape = params.shape();
    let mut masses = vec![0.0; 2 * n];
    let mut lo = (0.0, 1.0);
    for k in 0..n {
        let hi = incomplete_gamma_pq(shape, (k + 1) as f64 * h);
        masses[n + k] = mass_between(lo, hi);
        if hi.1 == 0.0 {
            break;
        }
        lo = hi;
    }
    let tail = incomplete_gamma_pq(shape, n as f64 * h).1;
    Ok(DiscretizedDensity {
        step: grid.step,
        origin_index: n,
        alignment: Alignment::Edge,
        masses,
        truncation_tail: tail,
    })
}

/// Edge-aligned Laplace grid from the exact CDF; bins `k` and `−k−1` carry
/// identical masses.
pub fn discretize_laplace(params: &LaplaceParams, grid: &GridSpec) -> Result<DiscretizedDensity> {
    check_resolution(grid, params.scale())?;
    let n = grid.bins_per_side();
    let h = grid.step / params.scale();
    let width = -(-h).exp_m1();
    let mut masses = vec![0.0; 2 * n];
    for k in 0..n {
        let m = 0.5 * (-(k as f64) * h).exp() * width;
        masses[n + k] = m;
        masses[n - 1 - k] = m;
    }
    Ok(DiscretizedDensity {
        step: grid.step,
        origin_index: n,
        alignment: Alignment::Edge,
        masses,
        truncation_tail: (-(n as f64) * h).exp(),
    })
}

/// Edge-aligned Staircase grid with exact piecewise integrals.
pub fn discretize_staircase(params: &StaircaseParams, grid: &GridSpec) -> Result<DiscretizedDensity> {
    check_resolution(grid, params.delta_sens())?;
    let n = grid.bins_per_side();
    let h = grid.step;
    let mut masses = vec![0.0; 2 * n];
    for k in 0..n {
        let m = params.interval_mass(k as f64 * h, (k + 1) as f64 * h);
        masses[n + k] = m;
        masses[n - 1 - k] = m;
    }
    let edge = n as f64 * h;
    let whole_steps = (edge / params.delta_sens()).floor();
    let side_tail = 0.5 * (-whole_steps * params.epsilon()).exp()
        - params.interval_mass(whole_steps * params.delta_sens(), edge);
    Ok(DiscretizedDensity {
        step: h,
        origin_index: n,
        alignment: Alignment::Edge,
        masses,
        truncation_tail: (2.0 * side_tail).max(0.0),
    })
}

fn same_step(a: f64, b: f64) -> Result<()> {
    if (a - b).abs() > 1e-12 * a.max(b) {
        return Err(Error::StepMismatch { left: a, right: b });
    }
    Ok(())
}

/// Direct discrete convolution: the grid of `A + B` for independent `A`, `B`.
///
/// The tail `1 − (1 − t_a)(1 − t_b)` is an upper bound on the mass of the
/// sum that is not represented on the grid.
pub fn convolve(a: &DiscretizedDensity, b: &DiscretizedDensity) -> Result<DiscretizedDensity> {
    same_step(a.step, b.step)?;
    a.warn_if_truncated("convolve");
    b.warn_if_truncated("convolve");
    let mut masses = vec![0.0; a.len() + b.len() - 1];
    for (i, &ma) in a.masses.iter().enumerate() {
        if ma == 0.0 {
            continue;
        }
        for (j, &mb) in b.masses.iter().enumerate() {
            masses[i + j] += ma * mb;
        }
    }
    let origin = a.origin_index + b.origin_index;
    let (alignment, mut origin_index) = match (a.alignment, b.alignment) {
        (Alignment::Edge, Alignment::Edge) => (Alignment::Centered, origin as isize - 1),
        (Alignment::Centered, Alignment::Centered) => (Alignment::Centered, origin as isize),
        _ => (Alignment::Edge, origin as isize),
    };
    if origin_index < 0 {
        masses.insert(0, 0.0);
        origin_index = 0;
    }
    Ok(DiscretizedDensity {
        step: a.step,
        origin_index: origin_index as usize,
        alignment,
        masses,
        truncation_tail: 1.0 - (1.0 - a.truncation_tail) * (1.0 - b.truncation_tail),
    })
}

/// Grid of `X₁ − X₂` for i.i.d. `X₁, X₂ ~ Γ(α, θ)`, centered-aligned and
/// mirrored exactly.
///
/// Equivalent to `convolve(g, &g.reflect())` but computes each lag once.
pub fn gamma_difference_grid(params: &GammaParams, grid: &GridSpec) -> Result<DiscretizedDensity> {
    let gamma = discretize_gamma(params, grid)?;
    let n = gamma.origin_index;
    let g = &gamma.masses[n..];
    // Bins beyond which less than DIFFERENCE_CUTOFF of the Gamma mass
    // remains are moved into the tail; the lag sum is quadratic in their
    // number and they sit far below any mass a loss estimate looks at.
    let mut remaining = gamma.truncation_tail;
    let mut used = g.len();
    while used > 0 && remaining + g[used - 1] < DIFFERENCE_CUTOFF {
        used -= 1;
        remaining += g[used];
    }
    let mut masses = vec![0.0; 2 * n - 1];
    for s in 0..used {
        let lag: f64 = g[s..used].iter().zip(&g[..used - s]).map(|(x, y)| x * y).sum();
        masses[n - 1 + s] = lag;
        masses[n - 1 - s] = lag;
    }
    let keep = 1.0 - remaining;
    Ok(DiscretizedDensity {
        step: grid.step,
        origin_index: n - 1,
        alignment: Alignment::Centered,
        masses,
        truncation_tail: 1.0 - keep * keep,
    })
}

/// Convolves a centered grid that is symmetric about 0 with the centered
/// `Laplace(λ)` grid, keeping the same extent.
///
/// Off-center Laplace bin masses form two geometric sequences, so the sum
/// over the input collapses to one forward and one backward recursion. Mass
/// pushed past the output edges is added to the tail exactly.
fn convolve_symmetric_with_laplace(x: &DiscretizedDensity, lambda: f64) -> DiscretizedDensity {
    debug_assert_eq!(x.alignment, Alignment::Centered);
    let len = x.len();
    let o = x.origin_index;
    let ratio = x.step / lambda;
    let r = (-ratio).exp();
    let center = -(-0.5 * ratio).exp_m1();
    let off_center = (0.5 * ratio).sinh();

    // backward[i] = Σ_{j ≥ i} x_j r^{j-i}
    let mut backward = vec![0.0; len + 1];
    for i in (0..len).rev() {
        backward[i] = x.masses[i] + r * backward[i + 1];
    }
    // forward[i] = Σ_{j ≤ i} x_j r^{i-j}
    let mut forward = vec![0.0; len];
    let mut acc = 0.0;
    for i in 0..len {
        acc = x.masses[i] + r * acc;
        forward[i] = acc;
    }

    let mut masses = vec![0.0; len];
    for i in o..len {
        let xi = x.masses[i];
        let y = center * xi + off_center * (forward[i] - xi + backward[i] - xi);
        masses[i] = y.max(0.0);
        masses[2 * o - i] = masses[i];
    }

    // Σ_{u > last} y_u = off_center · r · forward[last] / (1 − r) per side.
    let beyond = off_center * r * forward[len - 1] / -(-ratio).exp_m1();
    DiscretizedDensity {
        step: x.step,
        origin_index: o,
        alignment: Alignment::Centered,
        masses,
        truncation_tail: x.truncation_tail + 2.0 * beyond,
    }
}

/// Grid of the Arete density: two Gamma grids convolved with each other's
/// reflection, then with a centered Laplace grid.
///
/// The result is centered-aligned, so the mode at 0 is a bin center, and
/// exactly symmetric.
pub fn arete_density_grid(params: &AreteParams, grid: &GridSpec) -> Result<DiscretizedDensity> {
    check_resolution(grid, params.lambda().min(params.theta()))?;
    let difference = gamma_difference_grid(&params.gamma(), grid)?;
    Ok(convolve_symmetric_with_laplace(&difference, params.lambda()))
}

/// One point of a grid CDF: `F(x)` at the right edge `x` of a bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CdfPoint {
    pub x: f64,
    pub cdf: f64,
}

/// Cumulative sums at bin right edges. The last value is `1 − tail`.
pub fn cdf_from_density(d: &DiscretizedDensity) -> Vec<CdfPoint> {
    let mut acc = 0.0;
    d.masses
        .iter()
        .enumerate()
        .map(|(i, m)| {
            acc += m;
            CdfPoint {
                x: d.lower_edge(i) + d.step,
                cdf: acc,
            }
        })
        .collect()
}
