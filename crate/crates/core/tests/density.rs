mod common;

use arete_core::density::{
    arete_density_grid, cdf_from_density, convolve, discretize_gamma, discretize_laplace,
    discretize_staircase, gamma_difference_grid, Alignment, DiscretizedDensity, GridSpec,
};
use arete_core::distributions::{
    arete_moments, sample_arete, AreteParams, GammaParams, LaplaceParams, StaircaseParams,
};
use arete_core::Error;
use arete_core::RngStream;
use proptest::prelude::*;

#[test]
fn gamma_bins_match_quadrature() {
    let grid = GridSpec::new(0.01, 5.0).unwrap();
    for (shape, scale) in [(1e-5, 0.5), (0.02, 1.0), (0.7, 0.3)] {
        let d = discretize_gamma(&GammaParams::new(shape, scale).unwrap(), &grid).unwrap();
        let o = d.origin_index();
        for k in [0usize, 1, 2, 10, 100, 400] {
            let lo = k as f64 * 0.01;
            let want = common::gamma_interval_mass(shape, scale, lo, lo + 0.01);
            let got = d.masses()[o + k];
            assert!(common::relative_error(got, want) < 1e-9, "shape {shape} bin {k}: {got} vs {want}");
        }
        assert!(d.masses()[..o].iter().all(|&m| m == 0.0));
        assert!((d.total_mass() + d.truncation_tail() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn laplace_bins_are_exact() {
    let b = 0.4;
    let h = 0.01;
    let d = discretize_laplace(&LaplaceParams::new(b).unwrap(), &GridSpec::new(h, 3.0).unwrap()).unwrap();
    let o = d.origin_index();
    for k in 0..50 {
        let lo = k as f64 * h;
        let want = 0.5 * ((-lo / b).exp() - (-(lo + h) / b).exp());
        assert!(common::relative_error(d.masses()[o + k], want) < 1e-12);
        assert_eq!(d.masses()[o + k], d.masses()[o - 1 - k]);
    }
}

#[test]
fn staircase_grid_conserves_mass() {
    let p = StaircaseParams::with_default_gamma(2.0, 1.0).unwrap();
    let d = discretize_staircase(&p, &GridSpec::new(0.001, 10.0).unwrap()).unwrap();
    assert!((d.total_mass() + d.truncation_tail() - 1.0).abs() < 1e-9);
    assert_eq!(d.max_asymmetry(), 0.0);
}

#[test]
fn coarse_grid_is_rejected() {
    let p = AreteParams::new(0.1, 0.05, 0.001).unwrap();
    let err = arete_density_grid(&p, &GridSpec::new(0.1, 5.0).unwrap()).unwrap_err();
    assert!(matches!(err, Error::Resolution { .. }), "{err}");
}

#[test]
fn convolution_origin_bookkeeping() {
    let g = GridSpec::new(0.1, 1.0).unwrap();
    let lap = discretize_laplace(&LaplaceParams::new(0.2).unwrap(), &g).unwrap();
    let ee = convolve(&lap, &lap).unwrap();
    assert_eq!(ee.alignment(), Alignment::Centered);
    assert!(ee.mean().abs() < 1e-12);
    assert!(ee.max_asymmetry() < 1e-15);
    let point = DiscretizedDensity::point_mass(0.1).unwrap();
    let same = convolve(&ee, &point).unwrap();
    assert_eq!(same.alignment(), Alignment::Centered);
    assert_eq!(same.center(same.peak_index()), 0.0);
    assert!(convolve(&lap, &DiscretizedDensity::point_mass(0.2).unwrap()).is_err());
}

#[test]
fn difference_grid_agrees_with_direct_convolution() {
    let params = GammaParams::new(0.3, 0.2).unwrap();
    let grid = GridSpec::new(0.01, 3.0).unwrap();
    let gamma = discretize_gamma(&params, &grid).unwrap();
    let direct = convolve(&gamma, &gamma.reflect()).unwrap();
    let fast = gamma_difference_grid(&params, &grid).unwrap();
    let (oa, ob) = (direct.origin_index() as isize, fast.origin_index() as isize);
    for (i, &m) in fast.masses().iter().enumerate() {
        let j = i as isize - ob + oa;
        let want = if j >= 0 { direct.masses().get(j as usize).copied().unwrap_or(0.0) } else { 0.0 };
        assert!((m - want).abs() <= 1e-15 + 1e-12 * want, "bin {i}: {m} vs {want}");
    }
}

fn arete_grid(p: &AreteParams) -> DiscretizedDensity {
    arete_density_grid(p, &GridSpec::default_for(p, 1.0, 0.001).unwrap()).unwrap()
}

#[test]
fn arete_grid_moments_converge() {
    let p = AreteParams::new(0.2, 0.5, 0.1).unwrap();
    let v = arete_moments(&p).variance;
    // Flooring Gamma draws to bin edges biases the variance by O(h^{1+α});
    // a grid this wide has no visible truncation.
    let error = |h: f64| {
        let d = arete_density_grid(&p, &GridSpec::new(h, 40.0).unwrap()).unwrap();
        assert!(d.mean().abs() < 1e-12);
        (d.variance() - v).abs()
    };
    let (coarse, fine) = (error(0.002), error(0.001));
    assert!(fine < 1e-3 * v, "variance error {fine:e}");
    assert!(fine < coarse / 1.8, "{coarse:e} -> {fine:e}");
}

#[test]
fn arete_grid_cdf_matches_samples() {
    let p = AreteParams::new(0.3, 0.4, 0.2).unwrap();
    let d = arete_grid(&p);
    let cdf = cdf_from_density(&d);
    assert!((cdf.last().unwrap().cdf - (1.0 - d.truncation_tail())).abs() < 1e-12);
    assert!(cdf.windows(2).all(|w| w[1].cdf >= w[0].cdf && w[1].x > w[0].x));

    let n = 200_000;
    let mut rng = RngStream::new(12);
    let mut xs: Vec<f64> = (0..n).map(|_| sample_arete(&p, &mut rng)).collect();
    xs.sort_by(f64::total_cmp);
    for x in [-1.0, -0.2, -0.01, 0.0005, 0.05, 0.3, 1.5] {
        let point = cdf.iter().find(|c| c.x >= x - 1e-12).unwrap();
        let emp = xs.partition_point(|&v| v < point.x) as f64 / n as f64;
        let sd = (emp * (1.0 - emp) / n as f64).sqrt();
        assert!((emp - point.cdf).abs() < 5.0 * sd + 1e-6, "F({}) grid {} vs sample {emp}", point.x, point.cdf);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn arete_grid_invariants(a in 0.01f64..=1.0, t in 0.05f64..1.0, l in 0.01f64..0.5) {
        let p = AreteParams::new(a, t, l).unwrap();
        let grid = GridSpec::default_for(&p, 1.0, 0.002).unwrap();
        let d = arete_density_grid(&p, &grid).unwrap();
        prop_assert_eq!(d.alignment(), Alignment::Centered);
        prop_assert!(d.max_asymmetry() <= 1e-12);
        prop_assert!((d.total_mass() + d.truncation_tail() - 1.0).abs() < 1e-9);
        prop_assert_eq!(d.peak_index(), d.origin_index());
        prop_assert!(d.masses().iter().all(|&m| m >= 0.0));
    }
}
