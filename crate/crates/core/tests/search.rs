use arete_core::density::GridSpec;
use arete_core::distributions::arete_moments;
use arete_core::search::{evaluate_candidate, local_search, Objective, SearchConfig};
use arete_core::RngStream;

fn quick_config(eps: f64) -> SearchConfig {
    let mut c = SearchConfig::new(eps, 1.0, Objective::ExpectedAbs).unwrap();
    c.grid = GridSpec::new(0.002, 3.0).unwrap();
    c.max_iters = 15;
    c.mc_samples = 1000;
    c
}

#[test]
fn search_is_deterministic() {
    let c = quick_config(8.0);
    let a = local_search(&c, &mut RngStream::new(1)).unwrap();
    let b = local_search(&c, &mut RngStream::new(1)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn accepted_objective_never_increases_once_feasible() {
    let c = quick_config(8.0);
    let trace = local_search(&c, &mut RngStream::new(2)).unwrap();
    let accepted: Vec<_> = trace.iterations.iter().filter(|e| e.accepted).collect();
    assert!(!accepted.is_empty());
    let mut last = f64::INFINITY;
    let mut seen_feasible = false;
    for e in accepted {
        if seen_feasible {
            assert!(e.feasible);
            assert!(e.objective_value < last);
        }
        if e.feasible {
            seen_feasible = true;
            last = e.objective_value;
        }
    }
}

#[test]
fn feasible_result_passed_verification() {
    let c = quick_config(8.0);
    let trace = local_search(&c, &mut RngStream::new(3)).unwrap();
    assert!(trace.feasible);
    let v = trace.verification.unwrap();
    assert!(v.passed && v.step == 0.001);
    assert!(v.eps_hat <= 8.0 - v.margin);
    assert!(trace.best_objective <= Objective::ExpectedAbs.value(&trace.seed));
    assert_eq!(trace.best_objective, arete_moments(&trace.best).expected_abs_upper);
    let (mc, se) = trace.monte_carlo_abs.unwrap();
    assert!(mc <= trace.best_objective + 4.0 * se);
}

#[test]
fn candidate_evaluation_is_repeatable() {
    let c = quick_config(8.0);
    let p = arete_core::mechanisms::parameterize_arete(8.0, 1.0, arete_core::mechanisms::Mode::Permissive)
        .unwrap()
        .params;
    assert_eq!(evaluate_candidate(&p, &c).unwrap(), evaluate_candidate(&p, &c).unwrap());
}

#[test]
fn variance_objective_is_closed_form() {
    let p = arete_core::distributions::AreteParams::new(0.1, 0.5, 0.2).unwrap();
    assert_eq!(Objective::Variance.value(&p), 2.0 * 0.1 * 0.25 + 2.0 * 0.04);
}
