use gptsteer_core::approx;
use gptsteer_core::steering;
use gptsteer_core::{choquet, GptSystem, Guards};

#[test]
fn qubit_orthogonal_pair_bracket() {
    let guards = Guards { vertices: 4096, subsets: 50_000_000, ..Guards::default() };
    let bracket = guards.scoped(|| {
        let pts = approx::equator_points(3, 32).unwrap();
        let inner = approx::inscribed(&pts).unwrap();
        let outer = approx::circumscribed(&pts).unwrap();
        let sigma = [1.0, 0.0, 0.0, 0.0];
        let (x, y) = ([0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]);
        steering::robustness_bracket(&inner.system, &outer.system, &sigma, &[&x, &y]).unwrap()
    });
    let r = std::f64::consts::FRAC_1_SQRT_2;
    assert!(bracket.lower <= bracket.upper + 1e-12);
    assert!((bracket.lower - r).abs() <= 1e-7, "{}", bracket.lower);
    assert!((bracket.upper - r).abs() <= 1e-7, "{}", bracket.upper);
}

#[test]
fn degree_estimate_respects_the_lower_bound() {
    for sys in [GptSystem::square(), GptSystem::simplex(3).unwrap()] {
        let sigma = sys.barycenter();
        for g in 1..=3 {
            let e = steering::degree_estimate(&sys, &sigma, g, 30, 7).unwrap();
            assert!(e.infimum_reading >= e.lower_bound - 1e-9);
            assert!(e.infimum_reading <= e.supremum_reading);
            assert!(e.supremum_reading <= 1.0 + 1e-9);
            let again = steering::degree_estimate(&sys, &sigma, g, 30, 7).unwrap();
            assert_eq!(e, again);
        }
    }
}

#[test]
fn monte_carlo_matches_closed_forms() {
    let n3 = choquet::c_mu_monte_carlo(3, 200_000, 1).unwrap();
    assert!((n3.estimate - 0.5).abs() <= 0.01, "{}", n3.estimate);
    let n2 = choquet::c_mu_monte_carlo(2, 200_000, 1).unwrap();
    assert!((n2.estimate - 2.0 / std::f64::consts::PI).abs() <= 0.01, "{}", n2.estimate);
}
