use gptsteer_core::tensor::{self, TensorElement};
use gptsteer_core::{sampling, steering, ConeMembership, GptSystem, Measurement};
use gptsteer_lp::{solve, LpProblem, LpStatus};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn system(rng: &mut ChaCha8Rng) -> GptSystem {
    let d = rng.random_range(2..=4);
    sampling::random_polytope_system(rng, d).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cone_membership_certificates_check_out(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sys = system(&mut rng);
        let v: Vec<f64> = (0..sys.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v = sys.vector(v).unwrap();
        match sys.cone_member(&v).unwrap() {
            ConeMembership::Member { coefficients } => {
                prop_assert!(coefficients.iter().all(|c| *c >= -1e-9));
                for r in 0..sys.dim() {
                    let s: f64 = coefficients.iter().zip(sys.vertices()).map(|(c, w)| c * w[r]).sum();
                    prop_assert!((s - v.coords()[r]).abs() <= 1e-7);
                }
            }
            ConeMembership::NotMember { separator } => {
                for w in sys.vertices() {
                    prop_assert!(dot(separator.coords(), w) >= -1e-9);
                }
                prop_assert!(dot(separator.coords(), v.coords()) < 0.0);
            }
        }
    }

    #[test]
    fn base_norm_is_the_max_over_extreme_effects(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sys = system(&mut rng);
        let v: Vec<f64> = (0..sys.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let u = sys.unit_coords().to_vec();
        let brute = sys
            .extreme_effects()
            .unwrap()
            .iter()
            .map(|f| f.coords().iter().zip(&u).zip(&v).map(|((f, u), v)| (2.0 * f - u) * v).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        let n = sys.base_norm(&sys.vector(v).unwrap()).unwrap();
        prop_assert!((n - brute).abs() <= 1e-7, "{} vs {}", n, brute);
    }

    #[test]
    fn sigma_norm_matches_its_lp(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sys = system(&mut rng);
        let sigma = sampling::random_interior_state(&mut rng, &sys);
        let y = sys.vector(sampling::random_component(&mut rng, &sys, &sigma, 1.5)).unwrap();
        let a = sys.sigma_norm(&y, &sigma).unwrap();
        let b = sys.sigma_norm_lp(&y, &sigma).unwrap();
        prop_assert!((a - b).abs() <= 1e-7, "{} vs {}", a, b);
    }

    #[test]
    fn separable_states_lie_in_the_max_cone(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = system(&mut rng);
        let b = system(&mut rng);
        let st = sampling::random_separable_state(&mut rng, &a, &b).unwrap();
        prop_assert!(tensor::max_cone_member(&a, &b, st.tensor()).unwrap());
        prop_assert!(tensor::min_cone_member(&a, &b, st.tensor()).unwrap().is_separable());
    }

    #[test]
    fn compatibility_matches_a_joint_measurement_lp(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sys = GptSystem::square();
        let extreme = sys.extreme_effects().unwrap();
        let ms: Vec<Measurement> = (0..2)
            .map(|_| sampling::random_measurement(&mut rng, &sys, &extreme, 2).unwrap())
            .collect();
        let (dual, asm) = steering::measurements_to_assemblage(&sys, &sys.center(), &ms).unwrap();
        let classical = steering::lhs_check(&dual, &asm).unwrap().is_classical();
        prop_assert_eq!(classical, joint_measurement_exists(&sys, &ms));
    }
}

/// Brute force: effects `G_ab` nonnegative on every vertex with
/// `Σ_b G_ab = f_a|0` and `Σ_a G_ab = f_b|1`.
fn joint_measurement_exists(sys: &GptSystem, ms: &[Measurement]) -> bool {
    let d = sys.dim();
    let (k0, k1) = (ms[0].outcomes(), ms[1].outcomes());
    let var = |a: usize, b: usize, r: usize| (a * k1 + b) * d + r;
    let mut p = LpProblem::new(k0 * k1 * d);
    for i in 0..p.num_vars() {
        p.set_free(i);
    }
    for a in 0..k0 {
        for b in 0..k1 {
            for v in sys.vertices() {
                let e: Vec<_> = (0..d).map(|r| (var(a, b, r), -v[r])).collect();
                p.add_le_sparse(&e, 0.0);
            }
        }
    }
    for r in 0..d {
        for a in 0..k0 {
            let e: Vec<_> = (0..k1).map(|b| (var(a, b, r), 1.0)).collect();
            p.add_eq_sparse(&e, ms[0].effects[a].coords()[r]);
        }
        for b in 0..k1 {
            let e: Vec<_> = (0..k0).map(|a| (var(a, b, r), 1.0)).collect();
            p.add_eq_sparse(&e, ms[1].effects[b].coords()[r]);
        }
    }
    solve(&p).unwrap().status == LpStatus::Optimal
}

#[test]
fn simplex_measurements_are_always_compatible() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sys = GptSystem::simplex(3).unwrap();
    let extreme = sys.extreme_effects().unwrap();
    let sigma = sys.barycenter();
    for _ in 0..20 {
        let ms: Vec<Measurement> = (0..3)
            .map(|_| sampling::random_measurement(&mut rng, &sys, &extreme, 2).unwrap())
            .collect();
        let (dual, asm) = steering::measurements_to_assemblage(&sys, &sigma, &ms).unwrap();
        assert!(steering::lhs_check(&dual, &asm).unwrap().is_classical());
    }
}

#[test]
fn square_coordinate_measurements_are_incompatible() {
    let sys = GptSystem::square();
    let ms: Vec<Measurement> = (0..2)
        .map(|x| {
            let mut f = vec![0.5, 0.0, 0.0];
            f[x + 1] = 0.5;
            Measurement::dichotomic(&sys, sys.functional(f).unwrap()).unwrap()
        })
        .collect();
    let (dual, asm) = steering::measurements_to_assemblage(&sys, &sys.center(), &ms).unwrap();
    assert!(!steering::lhs_check(&dual, &asm).unwrap().is_classical());
    assert!(!joint_measurement_exists(&sys, &ms));
}

#[test]
fn product_tensors_are_separable() {
    let sq = GptSystem::square();
    let t = TensorElement::product(&sq.vertex(0), &sq.center());
    assert!(tensor::min_cone_member(&sq, &sq, &t).unwrap().is_separable());
}
