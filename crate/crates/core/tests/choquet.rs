use gptsteer_core::choquet::{self, ChoquetVerdict, SimpleMeasure};
use gptsteer_core::{sampling, BallNorm, GptSystem, Vector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn setup(seed: u64) -> (ChaCha8Rng, GptSystem, Vector, SimpleMeasure) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.random_range(2..=4);
    let sys = sampling::random_polytope_system(&mut rng, d).unwrap();
    let sigma = sampling::random_interior_state(&mut rng, &sys);
    let w = sampling::random_vertex_measure_at(&mut rng, &sys, &sigma).unwrap();
    let mu = SimpleMeasure::on_vertices(&sys, &w).unwrap();
    let sigma = mu.barycenter().clone();
    (rng, sys, sigma, mu)
}

/// Each atom replaced by a random two-point split of itself.
fn refine(rng: &mut ChaCha8Rng, sys: &GptSystem, nu: &SimpleMeasure) -> SimpleMeasure {
    let mut atoms = Vec::new();
    for (w, rho) in nu.atoms() {
        let s = sampling::random_split(rng, sys, rho).unwrap();
        atoms.extend(s.atoms().iter().map(|(v, r)| (w * v, r.clone())));
    }
    SimpleMeasure::new(sys, atoms).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn dirac_at_the_barycenter_is_below_everything(seed in any::<u64>()) {
        let (_, sys, sigma, mu) = setup(seed);
        let nu = SimpleMeasure::dirac(&sys, sigma).unwrap();
        prop_assert!(choquet::choquet_below(&sys, &nu, &mu).unwrap().is_below());
    }

    #[test]
    fn below_responses_reconstruct_nu(seed in any::<u64>()) {
        let (mut rng, sys, sigma, mu) = setup(seed);
        let nu = sampling::random_split(&mut rng, &sys, &sigma).unwrap();
        if let ChoquetVerdict::Below { response } = choquet::choquet_below(&sys, &nu, &mu).unwrap() {
            for row in &response {
                prop_assert!(row.iter().all(|q| *q >= -1e-9));
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-7);
            }
            for (a, (lam, sa)) in nu.atoms().iter().enumerate() {
                for r in 0..sys.dim() {
                    let s: f64 = mu.atoms().iter().zip(&response).map(|((w, rho), q)| w * q[a] * rho.coords()[r]).sum();
                    prop_assert!((s - lam * sa.coords()[r]).abs() <= 1e-7);
                }
            }
        }
    }

    #[test]
    fn not_below_comes_with_a_positive_dual_gap(seed in any::<u64>()) {
        let (mut rng, sys, sigma, mu) = setup(seed);
        let nu = sampling::random_split(&mut rng, &sys, &sigma).unwrap();
        let nu = refine(&mut rng, &sys, &nu);
        if let ChoquetVerdict::NotBelow { functionals } = choquet::choquet_below(&sys, &nu, &mu).unwrap() {
            let gs: Vec<Vec<f64>> = functionals.iter().map(|f| f.coords().to_vec()).collect();
            prop_assert!(choquet::dual_gap(&nu, &mu, &gs) > 0.0);
        }
    }

    #[test]
    fn zonotope_check_agrees_with_the_response_lp(seed in any::<u64>()) {
        let (mut rng, sys, sigma, mu) = setup(seed);
        let nu = sampling::random_split(&mut rng, &sys, &sigma).unwrap();
        let below = choquet::choquet_below(&sys, &nu, &mu).unwrap().is_below();
        match choquet::dichotomic_violation(&sys, &nu, &mu).unwrap() {
            None => prop_assert!(below),
            Some(h) => {
                prop_assert!(!below);
                prop_assert!(nu.integral_abs(h.coords()) > mu.integral_abs(h.coords()));
            }
        }
    }

    #[test]
    fn refinement_is_transitive(seed in any::<u64>()) {
        let (mut rng, sys, sigma, _) = setup(seed);
        let nu = sampling::random_split(&mut rng, &sys, &sigma).unwrap();
        let finer = refine(&mut rng, &sys, &nu);
        let dirac = SimpleMeasure::dirac(&sys, sigma).unwrap();
        prop_assert!(choquet::choquet_below(&sys, &dirac, &nu).unwrap().is_below());
        prop_assert!(choquet::choquet_below(&sys, &nu, &finer).unwrap().is_below());
        prop_assert!(choquet::choquet_below(&sys, &dirac, &finer).unwrap().is_below());
    }
}

fn symmetric_systems() -> Vec<GptSystem> {
    vec![
        GptSystem::square(),
        GptSystem::centrally_symmetric(BallNorm::L1, 3).unwrap(),
        GptSystem::centrally_symmetric(BallNorm::Linf, 3).unwrap(),
    ]
}

#[test]
fn symmetrization_is_idempotent_and_raises_c_mu() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for sys in symmetric_systems() {
        let sigma = sys.center();
        let group = sys.symmetries(&sigma).unwrap();
        for _ in 0..5 {
            let w = sampling::random_vertex_measure_at(&mut rng, &sys, &sigma).unwrap();
            let mu = SimpleMeasure::on_vertices(&sys, &w).unwrap();
            let sym = choquet::symmetrize(&sys, &mu, &group).unwrap();
            let twice = choquet::symmetrize(&sys, &sym, &group).unwrap();
            assert!(sym.approx_eq(&twice, 1e-9));
            let before = choquet::c_mu(&sys, &sigma, &mu).unwrap().value;
            let after = choquet::c_mu(&sys, &sigma, &sym).unwrap().value;
            assert!(after >= before - 1e-7, "{after} < {before}");
        }
    }
}

#[test]
fn c_mu_of_the_uniform_square_measure() {
    let sq = GptSystem::square();
    let mu = SimpleMeasure::on_vertices(&sq, &[0.25; 4]).unwrap();
    let c = choquet::c_mu(&sq, &sq.center(), &mu).unwrap();
    assert!((c.value - 0.5).abs() <= 1e-9, "{}", c.value);
}

#[test]
fn dirac_measure_has_zero_c_mu() {
    let sq = GptSystem::square();
    let mu = SimpleMeasure::dirac(&sq, sq.center()).unwrap();
    assert!(choquet::c_mu(&sq, &sq.center(), &mu).unwrap().value.abs() <= 1e-9);
}

#[test]
fn monte_carlo_on_the_segment_is_one() {
    let est = choquet::c_mu_monte_carlo(1, 2000, 5).unwrap();
    assert!((est.estimate - 1.0).abs() <= 1e-9, "{}", est.estimate);
}
