mod common;

use arete_core::density::{arete_density_grid, discretize_laplace, discretize_staircase, GridSpec};
use arete_core::distributions::{AreteParams, LaplaceParams, StaircaseParams};
use arete_core::mechanisms::{parameterize_arete, Mode};
use arete_core::privacy::{
    analytic_ratio_bound, empirical_privacy_loss, privacy_loss_curve, staircase_loss,
    staircase_loss_curve, verify_parameter_setting,
};
use proptest::prelude::*;

/// `ln(2 e^{(Δ_Γ+Δ)/θ} e^α (αθ + Δ_Γ + Δ) / (α c λ / 4))` with `Δ_Γ = αθ`
/// and `c = P(α, α)` from quadrature.
fn ln_ratio_bound(p: &AreteParams, delta: f64) -> f64 {
    let (a, t, l) = (p.alpha(), p.theta(), p.lambda());
    let dg = a * t;
    let c = common::lower_incomplete_gamma(a, a);
    2f64.ln() + (dg + delta) / t + a + (a * t + dg + delta).ln() - (a * c * l / 4.0).ln()
}

#[test]
fn analytic_bound_matches_independent_evaluation() {
    for (eps, delta) in [(20.0, 1.0), (24.0, 1.0), (30.0, 2.0), (12.0, 1.0)] {
        let p = parameterize_arete(eps, delta, Mode::Permissive).unwrap().params;
        let r = analytic_ratio_bound(&p, delta).unwrap();
        let want = ln_ratio_bound(&p, delta);
        assert!((r.ln_bound - want).abs() < 1e-9 * want, "({eps}, {delta}): {} vs {want}", r.ln_bound);
        assert!(r.c_delta_gamma_exact);
        // P(α, α) exceeds 1/2 for α ≤ 1, so the fixed constant is looser.
        assert!(r.c_delta_gamma > 0.5);
        assert!(r.bound_value_half_constant >= r.bound_value);
    }
}

#[test]
fn certification_fails_below_the_domain() {
    let r = verify_parameter_setting(12.0, 1.0).unwrap();
    assert!(!r.epsilon_certified);
    assert!(r.failed().any(|c| c.inequality.contains("20 + 4 ln")));
    let r = verify_parameter_setting(30.0, 0.5).unwrap();
    assert!(r.failed().any(|c| c.inequality.contains("2/e")));
    assert!(verify_parameter_setting(-1.0, 1.0).is_err());
}

#[test]
fn certified_settings_bound_the_grid_estimate() {
    for (eps, delta) in [(20.0, 1.0), (24.0, 1.0)] {
        let report = verify_parameter_setting(eps, delta).unwrap();
        assert!(report.epsilon_certified);
        let p = parameterize_arete(eps, delta, Mode::Strict).unwrap().params;
        let d = arete_density_grid(&p, &GridSpec::default_for(&p, delta, 0.001).unwrap()).unwrap();
        let est = empirical_privacy_loss(&d, delta).unwrap();
        assert!(est.eps_hat <= report.ln_bound, "{} > {}", est.eps_hat, report.ln_bound);
    }
}

#[test]
fn laplace_loss_is_linear_in_shift() {
    let b = 0.25;
    let d = discretize_laplace(&LaplaceParams::new(b).unwrap(), &GridSpec::new(0.001, 8.0).unwrap()).unwrap();
    let curve = privacy_loss_curve(&d, 1.0, 2.0, 21).unwrap();
    for (s, l) in curve.shifts.iter().zip(&curve.losses) {
        assert!((l - s / b).abs() < 1e-8, "shift {s}: {l}");
    }
    assert!((curve.eps_hat - 4.0).abs() < 1e-8);
}

#[test]
fn staircase_grid_reproduces_step_curve() {
    let p = StaircaseParams::with_default_gamma(2.0, 1.0).unwrap();
    let d = discretize_staircase(&p, &GridSpec::new(0.001, 6.0).unwrap()).unwrap();
    for a in [0.5, 1.0, 1.5, 2.5] {
        let brute = empirical_privacy_loss(&d, a).unwrap().eps_hat;
        let exact = staircase_loss(&p, a);
        assert!((brute - exact).abs() < 1e-6, "a = {a}: grid {brute} vs {exact}");
    }
    let curve = staircase_loss_curve(&p, 3.0, 7).unwrap();
    assert_eq!(curve.losses, vec![0.0, 2.0, 2.0, 4.0, 4.0, 6.0, 6.0]);
    assert!(curve.excluded_range.is_none());
}

#[test]
fn arete_curve_starts_at_zero_and_grows() {
    let p = AreteParams::new(0.05, 0.25, 0.05).unwrap();
    let d = arete_density_grid(&p, &GridSpec::default_for(&p, 1.0, 0.001).unwrap()).unwrap();
    let curve = privacy_loss_curve(&d, 1.0, 2.0, 41).unwrap();
    assert_eq!(curve.losses[0], 0.0);
    assert!(curve.losses.windows(2).all(|w| w[1] >= w[0]));
    assert_eq!(curve.losses[20], curve.eps_hat);
    // One bin of shift moves the loss by at most the largest adjacent-bin
    // log ratio, so the 50-bin spacing bounds each jump.
    assert!(curve.max_jump() <= 50.0 * curve.discretization_error + 1e-12);
    let range = curve.excluded_range.unwrap();
    assert!(range.admissible_lo < 0.0 && range.admissible_hi > 0.0);
}

#[test]
fn halving_the_step_barely_moves_the_estimate() {
    let p = parameterize_arete(24.0, 1.0, Mode::Strict).unwrap().params;
    let grid = GridSpec::default_for(&p, 1.0, 0.001).unwrap();
    let coarse = empirical_privacy_loss(&arete_density_grid(&p, &grid).unwrap(), 1.0).unwrap();
    let fine = empirical_privacy_loss(&arete_density_grid(&p, &grid.with_step(0.0005).unwrap()).unwrap(), 1.0).unwrap();
    assert!((fine.eps_hat - coarse.eps_hat).abs() < 0.01 * fine.eps_hat);
    // Finer bins resolve more of the continuous supremum.
    assert!(fine.eps_hat >= coarse.eps_hat);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn loss_is_monotone_in_shift(a in 0.02f64..=1.0, t in 0.1f64..1.0, l in 0.02f64..0.5) {
        let p = AreteParams::new(a, t, l).unwrap();
        let d = arete_density_grid(&p, &GridSpec::default_for(&p, 1.0, 0.002).unwrap()).unwrap();
        let curve = privacy_loss_curve(&d, 1.0, 2.0, 21).unwrap();
        prop_assert_eq!(curve.losses[0], 0.0);
        prop_assert!(curve.losses.windows(2).all(|w| w[1] >= w[0]));
    }
}
