use gptsteer_core::bipartite::{self, BipartiteState, Direction, SearchOutcome};
use gptsteer_core::tensor::{self, TensorElement};
use gptsteer_core::{sampling, GptSystem, Measurement};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn pair(rng: &mut ChaCha8Rng, dmax: usize) -> (GptSystem, GptSystem) {
    let da = rng.random_range(2..=dmax);
    let db = rng.random_range(2..=dmax);
    (
        sampling::random_polytope_system(rng, da).unwrap(),
        sampling::random_polytope_system(rng, db).unwrap(),
    )
}

fn gaussianish(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pairing_matches_both_steering_maps(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = pair(&mut rng, 4);
        let st = sampling::random_separable_state(&mut rng, &a, &b).unwrap();
        let ab = bipartite::steering_map(&a, &b, &st, Direction::AToB).unwrap();
        let ba = bipartite::steering_map(&a, &b, &st, Direction::BToA).unwrap();
        let ha = gaussianish(&mut rng, a.dim());
        let hb = gaussianish(&mut rng, b.dim());
        let p = bipartite::pairing(&st, &ha, &hb);
        prop_assert!((p - dot(&hb, &ab.apply(&ha))).abs() <= 1e-10);
        prop_assert!((p - dot(&ha, &ba.apply(&hb))).abs() <= 1e-10);
    }

    #[test]
    fn conditional_assemblage_applies_the_steering_map(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = pair(&mut rng, 4);
        let st = sampling::random_separable_state(&mut rng, &a, &b).unwrap();
        let extreme = a.extreme_effects().unwrap();
        let ms: Vec<Measurement> = (0..2)
            .map(|_| sampling::random_measurement(&mut rng, &a, &extreme, 2).unwrap())
            .collect();
        let asm = bipartite::conditional_assemblage(&a, &b, &st, &ms).unwrap();
        let map = bipartite::steering_map(&a, &b, &st, Direction::AToB).unwrap();
        for (m, row) in ms.iter().zip(asm.entries()) {
            for (f, rho) in m.effects.iter().zip(row) {
                let expect = map.apply(f.coords());
                for (x, y) in expect.iter().zip(rho.coords()) {
                    prop_assert!((x - y).abs() <= 1e-10);
                }
            }
        }
        for (x, y) in asm.sigma().coords().iter().zip(st.marginal_b().coords()) {
            prop_assert!((x - y).abs() <= 1e-10);
        }
    }

    #[test]
    fn product_states_are_unsteerable(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = pair(&mut rng, 4);
        let ra = sampling::random_interior_state(&mut rng, &a);
        let rb = sampling::random_interior_state(&mut rng, &b);
        let st = BipartiteState::product(&a, &b, &ra, &rb).unwrap();
        prop_assert!(bipartite::unsteerable_dichotomic(&a, &b, &st).unwrap().is_unsteerable());
    }

    #[test]
    fn adding_noise_preserves_unsteerability(seed in any::<u64>(), lambda in 0.05f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = pair(&mut rng, 3);
        let t = sampling::random_max_cone_state(&mut rng, &a, &b).unwrap();
        let st = BipartiteState::new(&a, &b, t).unwrap();
        prop_assume!(a.is_interior(st.marginal_a()) && b.is_interior(st.marginal_b()));
        let at = st.with_noise(&a, &b, lambda).unwrap();
        if bipartite::unsteerable_dichotomic(&a, &b, &at).unwrap().is_unsteerable() {
            let less = st.with_noise(&a, &b, 0.5 * lambda).unwrap();
            prop_assert!(bipartite::unsteerable_dichotomic(&a, &b, &less).unwrap().is_unsteerable());
        }
    }
}

fn canonical() -> (GptSystem, GptSystem, BipartiteState) {
    let sq = GptSystem::square();
    let v = |c: [f64; 3]| sq.vector(c.to_vec()).unwrap();
    let diag = tensor::DichotomicTensor::new(&sq, sq.center(), vec![v([0.0, 1.0, 1.0]), v([0.0, 1.0, -1.0])]).unwrap();
    let (cube, xi) = BipartiteState::from_dichotomic(&sq, &diag).unwrap();
    (cube, sq, xi)
}

#[test]
fn search_finds_the_canonical_state_steerable() {
    let (cube, sq, xi) = canonical();
    match bipartite::steerability_search(&cube, &sq, &xi, &[2, 2], 50, 0).unwrap() {
        SearchOutcome::SteerableBy { trial, .. } => assert_eq!(trial, 0),
        other => panic!("search came back {other:?}"),
    }
}

#[test]
fn fully_mixed_canonical_state_is_unsteerable() {
    let (cube, sq, xi) = canonical();
    let noisy = xi.with_noise(&cube, &sq, 0.0).unwrap();
    assert!(bipartite::unsteerable_dichotomic(&cube, &sq, &noisy).unwrap().is_unsteerable());
    assert!(!bipartite::unsteerable_dichotomic(&cube, &sq, &xi).unwrap().is_unsteerable());
}

#[test]
fn states_outside_the_max_cone_are_rejected() {
    let sq = GptSystem::square();
    let mut coeffs = vec![vec![0.0; 3]; 3];
    coeffs[0][0] = 1.0;
    coeffs[1][1] = 3.0;
    coeffs[2][2] = 3.0;
    let t = TensorElement::new(&sq, &sq, coeffs).unwrap();
    assert!(BipartiteState::new(&sq, &sq, t).is_err());
}
