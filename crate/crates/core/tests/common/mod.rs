//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls into the library's numerics: incomplete gamma values
//! come from adaptive Gauss–Legendre quadrature and densities are written
//! out from their closed forms.

#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::OnceLock;

const GL_ORDER: usize = 20;

/// Gauss–Legendre nodes and weights on [−1, 1], by Newton iteration on P_n.
fn gauss_legendre() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_ORDER;
        (0..n)
            .map(|i| {
                let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
                let mut dp = 0.0;
                for _ in 0..100 {
                    let (mut p0, mut p1) = (1.0, x);
                    for k in 2..=n {
                        let k = k as f64;
                        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                        p0 = p1;
                        p1 = p2;
                    }
                    dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                    let dx = p1 / dp;
                    x -= dx;
                    if dx.abs() < 1e-16 {
                        break;
                    }
                }
                (x, 2.0 / ((1.0 - x * x) * dp * dp))
            })
            .collect()
    })
}

fn panel(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    half * gauss_legendre().iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>()
}

/// Bisects until each panel agrees with its two halves to `floor`
/// absolute or 1e-15 relative error.
fn adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, whole: f64, floor: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (left, right) = (panel(f, a, m), panel(f, m, b));
    let diff = (left + right - whole).abs();
    if diff <= floor.max(1e-15 * (left + right).abs()) || depth == 0 {
        return left + right;
    }
    adaptive(f, a, m, left, floor, depth - 1) + adaptive(f, m, b, right, floor, depth - 1)
}

/// Integral of a nonnegative integrand to roughly 1e-15 relative accuracy.
fn integrate_positive(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let whole = panel(&f, a, b);
    let rough = adaptive(&f, a, b, whole, 0.0, 8);
    if rough == 0.0 {
        return 0.0;
    }
    adaptive(&f, a, b, whole, rough * 1e-17, 200)
}

/// `Γ(a + 1) = ∫₀^∞ tᵃ e^{−t} dt` for `0 < a ≤ 10`.
pub fn gamma_1p(a: f64) -> f64 {
    let f = move |t: f64| t.powf(a) * (-t).exp();
    [0.0, 1.0, 4.0, 16.0, 64.0, 400.0]
        .windows(2)
        .map(|w| integrate_positive(f, w[0], w[1]))
        .sum()
}

/// Regularized lower incomplete gamma `P(a, x)` by quadrature.
///
/// For `a < 1` the integrand `t^{a−1} e^{−t}` is singular at 0, so the
/// singular part is integrated in closed form:
/// `γ(a, x) = xᵃ/a − ∫₀ˣ t^{a−1}(1 − e^{−t}) dt`, and `P = a·γ/Γ(a+1)`.
pub fn lower_incomplete_gamma(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if a < 1.0 {
        let g = move |t: f64| t.powf(a) * (-(-t).exp_m1() / t);
        (x.powf(a) - a * integrate_positive(g, 0.0, x)) / gamma_1p(a)
    } else {
        let f = move |t: f64| t.powf(a - 1.0) * (-t).exp();
        a * integrate_positive(f, 0.0, x) / gamma_1p(a)
    }
}

/// Gamma density with shape `a` and scale `s`, written out directly.
pub fn gamma_density(a: f64, s: f64, t: f64) -> f64 {
    if t < 0.0 {
        return 0.0;
    }
    let z = t / s;
    (z.powf(a - 1.0) * (-z).exp()) / (s * gamma_1p(a) / a)
}

/// Probability that a Gamma(a, s) variable lands in `[lo, hi)`. Away from 0
/// the density is integrated directly, avoiding the cancellation in
/// `P(hi) − P(lo)`.
pub fn gamma_interval_mass(a: f64, s: f64, lo: f64, hi: f64) -> f64 {
    if lo <= 0.0 {
        return lower_incomplete_gamma(a, hi / s);
    }
    let norm = a / gamma_1p(a);
    norm * integrate_positive(move |t: f64| t.powf(a - 1.0) * (-t).exp(), lo / s, hi / s)
}

/// Laplace probability of the centered bin `(−h/2, h/2)`.
pub fn laplace_central_bin(scale: f64, h: f64) -> f64 {
    -(-h / (2.0 * scale)).exp_m1()
}

pub fn relative_error(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}
