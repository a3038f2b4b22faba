//! Sample statistics used by Monte Carlo reports and the distribution-equality
//! checks: moments with standard errors and the two-sample
//! Kolmogorov–Smirnov test.

use serde::Serialize;

/// Sample moments with their standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub mean_abs: f64,
    pub mean_se: f64,
    pub mean_abs_se: f64,
    /// Large-sample standard error of `variance`, `√((m₄ − s⁴)/n)`.
    pub variance_se: f64,
}

impl Moments {
    /// Two-pass computation; needs at least two samples.
    pub fn of(xs: &[f64]) -> Moments {
        let n = xs.len();
        assert!(n >= 2, "need at least two samples");
        let nf = n as f64;
        let mean = xs.iter().sum::<f64>() / nf;
        let mean_abs = xs.iter().map(|x| x.abs()).sum::<f64>() / nf;
        let (mut m2, mut m4, mut abs_dev2) = (0.0, 0.0, 0.0);
        for &x in xs {
            let d = x - mean;
            let d2 = d * d;
            m2 += d2;
            m4 += d2 * d2;
            let a = x.abs() - mean_abs;
            abs_dev2 += a * a;
        }
        let variance = m2 / (nf - 1.0);
        let m4 = m4 / nf;
        let pop_var = m2 / nf;
        Moments {
            n,
            mean,
            variance,
            mean_abs,
            mean_se: (variance / nf).sqrt(),
            mean_abs_se: (abs_dev2 / (nf - 1.0) / nf).sqrt(),
            variance_se: ((m4 - pop_var * pop_var).max(0.0) / nf).sqrt(),
        }
    }
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_a − F_b|`.
///
/// Ties, within or across samples, are stepped over together so the
/// statistic is evaluated only where both empirical CDFs are defined.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "samples must be nonempty");
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic critical value `√(−ln(α/2)/2) · √((n+m)/(nm))` at
/// significance `alpha`.
pub fn ks_critical_value(alpha: f64, n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    (-(alpha / 2.0).ln() / 2.0).sqrt() * ((n + m) / (n * m)).sqrt()
}

/// Outcome of a two-sample KS test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsTest {
    pub statistic: f64,
    pub critical_value: f64,
    pub passed: bool,
}

pub fn ks_test(a: &[f64], b: &[f64], alpha: f64) -> KsTest {
    let statistic = ks_statistic(a, b);
    let critical_value = ks_critical_value(alpha, a.len(), b.len());
    KsTest {
        statistic,
        critical_value,
        passed: statistic < critical_value,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_of_identical_samples_is_zero() {
        let a = [3.0, 1.0, 2.0, 2.0];
        assert_eq!(ks_statistic(&a, &a), 0.0);
    }

    #[test]
    fn ks_of_disjoint_samples_is_one() {
        assert_eq!(ks_statistic(&[0.0, 1.0], &[5.0, 6.0, 7.0]), 1.0);
    }

    #[test]
    fn ks_handles_ties_across_samples() {
        // F_a jumps to 1 at 0; F_b reaches 1/2 at 0 and 1 at 1.
        assert_eq!(ks_statistic(&[0.0, 0.0], &[0.0, 1.0]), 0.5);
    }

    #[test]
    fn critical_value_at_large_samples() {
        let c = ks_critical_value(1e-3, 100_000, 100_000);
        assert!((c - 0.008_719).abs() < 1e-5, "{c}");
    }

    #[test]
    fn moments_of_small_sample() {
        let m = Moments::of(&[1.0, -1.0, 3.0, -3.0]);
        assert_eq!(m.mean, 0.0);
        assert!((m.variance - 20.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.mean_abs, 2.0);
    }
}
