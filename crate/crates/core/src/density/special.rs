//! Log-gamma and the regularized incomplete gamma functions.
//!
//! Shapes far below one matter here: the calibrated Arete parameters use
//! Gamma shapes like `e^{-6}` and divisible shares go down to `e^{-6}/100`.
//! Both `P(a, x)` and its complement `Q(a, x)` are therefore computed
//! directly, never as `1 - other`, wherever the complement would cancel.

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;
const MAX_ITER: usize = 1000;
const EPS: f64 = 1e-17;
const TINY: f64 = 1e-300;

/// Shapes for which the incomplete gamma routines meet their stated
/// 1e-12 relative accuracy.
pub const ACCURATE_SHAPE_RANGE: (f64, f64) = (1e-9, 10.0);

// zeta(k) for k = 2..=25.
const ZETA: [f64; 24] = [
    1.644_934_066_848_226_4,
    1.202_056_903_159_594_3,
    1.082_323_233_711_138_2,
    1.036_927_755_143_370,
    1.017_343_061_984_449_1,
    1.008_349_277_381_922_8,
    1.004_077_356_197_944_3,
    1.002_008_392_826_082_2,
    1.000_994_575_127_818_1,
    1.000_494_188_604_119_5,
    1.000_246_086_553_308,
    1.000_122_713_347_578_5,
    1.000_061_248_135_058_7,
    1.000_030_588_236_307,
    1.000_015_282_259_408_7,
    1.000_007_637_197_637_9,
    1.000_003_817_293_265,
    1.000_001_908_212_716_6,
    1.000_000_953_962_033_9,
    1.000_000_476_932_986_8,
    1.000_000_238_450_502_7,
    1.000_000_119_219_926,
    1.000_000_059_608_189,
    1.000_000_029_803_503_5,
];

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(1 + a)` with full relative accuracy for small `|a|`.
pub fn ln_gamma_1p(a: f64) -> f64 {
    if a.abs() <= 0.2 {
        // ln Γ(1+a) = -γ a + Σ_{k≥2} (-1)^k ζ(k) a^k / k
        let mut sum = 0.0;
        let mut power = -a;
        for (i, z) in ZETA.iter().enumerate() {
            power *= -a;
            let k = (i + 2) as f64;
            sum += z * power / k;
        }
        -EULER_GAMMA * a + sum
    } else {
        ln_gamma(1.0 + a)
    }
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < 0.5 {
        if x <= 0.2 {
            return ln_gamma_1p(x) - x.ln();
        }
        return ln_gamma(x + 1.0) - x.ln();
    }
    if (x - 1.0).abs() <= 0.2 {
        return ln_gamma_1p(x - 1.0);
    }
    if (x - 2.0).abs() <= 0.2 {
        // Γ(x) = (x-1) Γ(x-1)
        return (x - 1.0).ln() + ln_gamma_1p(x - 2.0);
    }
    let z = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    HALF_LN_2PI + (z + 0.5) * t.ln() - t + acc.ln()
}

fn check_args(shape: f64, x: f64) -> Result<()> {
    if !(shape.is_finite() && shape > 0.0) {
        return Err(Error::InvalidParameter {
            name: "shape",
            value: shape,
            reason: "must be finite and strictly positive",
        });
    }
    if x.is_nan() || x < 0.0 {
        return Err(Error::InvalidParameter {
            name: "x",
            value: x,
            reason: "must be nonnegative",
        });
    }
    Ok(())
}

/// Regularized lower incomplete gamma `P(shape, x)`.
///
/// Series expansion for `x < shape + 1`, Lentz continued fraction for the
/// complement otherwise.
pub fn regularized_lower_incomplete_gamma(shape: f64, x: f64) -> Result<f64> {
    check_args(shape, x)?;
    Ok(incomplete_gamma_pq(shape, x).0)
}

/// Regularized upper incomplete gamma `Q(shape, x) = 1 - P(shape, x)`,
/// computed without cancellation.
pub fn regularized_upper_incomplete_gamma(shape: f64, x: f64) -> Result<f64> {
    check_args(shape, x)?;
    Ok(incomplete_gamma_pq(shape, x).1)
}

/// `(P(a, x), Q(a, x))` for validated arguments.
pub(crate) fn incomplete_gamma_pq(a: f64, x: f64) -> (f64, f64) {
    if x == 0.0 {
        return (0.0, 1.0);
    }
    if x.is_infinite() {
        return (1.0, 0.0);
    }
    if x < a + 1.0 {
        let p = lower_series(a, x);
        let q = if a < 1.0 { upper_small_shape(a, x) } else { 1.0 - p };
        (p, q)
    } else {
        let q = upper_continued_fraction(a, x);
        (1.0 - q, q)
    }
}

// P(a,x) = x^a e^{-x} / Γ(a+1) · Σ_{n≥0} x^n / ((a+1)…(a+n))
fn lower_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..MAX_ITER {
        term *= x / (a + n as f64);
        sum += term;
        if term < sum * EPS {
            break;
        }
    }
    let log_prefactor = a * x.ln() - x - ln_gamma_1p(a);
    (log_prefactor.exp() * sum).min(1.0)
}

// Q(a,x) = 1 - x^a/Γ(1+a) · (1 + a Σ_{n≥1} (-x)^n / (n! (a+n)))
// The leading 1 - x^a/Γ(1+a) goes through expm1 so Q keeps relative
// accuracy when it is tiny (small a, moderate x).
fn upper_small_shape(a: f64, x: f64) -> f64 {
    let mut sum = 0.0;
    let mut factor = 1.0; // (-x)^n / n!
    for n in 1..MAX_ITER {
        factor *= -x / n as f64;
        let term = factor / (a + n as f64);
        sum += term;
        if term.abs() < EPS * sum.abs().max(TINY) {
            break;
        }
    }
    let log_lead = a * x.ln() - ln_gamma_1p(a);
    let q = -log_lead.exp_m1() - log_lead.exp() * a * sum;
    q.clamp(0.0, 1.0)
}

// Q(a,x) = e^{-x} x^a / Γ(a) · 1/(x+1-a- 1(1-a)/(x+3-a- ...))
fn upper_continued_fraction(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    let log_prefactor = a * x.ln() - x - ln_gamma(a);
    (log_prefactor.exp() * h).clamp(0.0, 1.0)
}

/// Mass between two points given `(P, Q)` at each, without catastrophic
/// cancellation: differences of `P` below the median, of `Q` above it.
pub(crate) fn mass_between(lo: (f64, f64), hi: (f64, f64)) -> f64 {
    if hi.0 <= 0.5 {
        (hi.0 - lo.0).max(0.0)
    } else {
        (lo.1 - hi.1).max(0.0)
    }
}

/// Probability mass of `Γ(shape, 1)` on `[lo, hi)`.
#[cfg(test)]
fn gamma_interval_mass(shape: f64, lo: f64, hi: f64) -> f64 {
    mass_between(incomplete_gamma_pq(shape, lo), incomplete_gamma_pq(shape, hi))
}
