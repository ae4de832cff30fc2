use gptsteer_core::tensor::{self, DichotomicTensor};
use gptsteer_core::{sampling, steering, Assemblage, GptSystem};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn instance(seed: u64, gmax: usize) -> (GptSystem, DichotomicTensor) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.random_range(2..=4);
    let sys = sampling::random_polytope_system(&mut rng, d).unwrap();
    let sigma = sampling::random_interior_state(&mut rng, &sys);
    let g = rng.random_range(1..=gmax);
    let ys = sampling::random_components(&mut rng, &sys, &sigma, g);
    let t = DichotomicTensor::new(&sys, sigma, ys).unwrap();
    (sys, t)
}

fn norm(sys: &GptSystem, t: &DichotomicTensor) -> f64 {
    tensor::steering_norm(sys, t).unwrap().value
}

fn rebuild(sys: &GptSystem, t: &DichotomicTensor, ys: Vec<Vec<f64>>) -> DichotomicTensor {
    let ys = ys.into_iter().map(|y| sys.vector(y).unwrap()).collect();
    DichotomicTensor::new(sys, t.sigma().clone(), ys).unwrap()
}

fn coords(t: &DichotomicTensor) -> Vec<Vec<f64>> {
    t.components().iter().map(|y| y.coords().to_vec()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn invariant_under_sign_flips(seed in any::<u64>(), which in 0usize..3) {
        let (sys, t) = instance(seed, 3);
        let mut ys = coords(&t);
        let x = which % ys.len();
        ys[x].iter_mut().for_each(|v| *v = -*v);
        let flipped = rebuild(&sys, &t, ys);
        prop_assert!((norm(&sys, &t) - norm(&sys, &flipped)).abs() <= 1e-7);
    }

    #[test]
    fn invariant_under_permutation(seed in any::<u64>()) {
        let (sys, t) = instance(seed, 3);
        let mut ys = coords(&t);
        ys.reverse();
        let permuted = rebuild(&sys, &t, ys);
        prop_assert!((norm(&sys, &t) - norm(&sys, &permuted)).abs() <= 1e-7);
    }

    #[test]
    fn appending_a_zero_component_changes_nothing(seed in any::<u64>()) {
        let (sys, t) = instance(seed, 3);
        let mut ys = coords(&t);
        ys.push(vec![0.0; sys.dim()]);
        let padded = rebuild(&sys, &t, ys);
        prop_assert!((norm(&sys, &t) - norm(&sys, &padded)).abs() <= 1e-7);
    }

    #[test]
    fn convex_in_the_components(seed in any::<u64>()) {
        let (sys, t) = instance(seed, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let other = sampling::random_components(&mut rng, &sys, t.sigma(), t.g());
        let u = rebuild(&sys, &t, other.iter().map(|y| y.coords().to_vec()).collect());
        let mid: Vec<Vec<f64>> = coords(&t)
            .iter()
            .zip(coords(&u))
            .map(|(a, b)| a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect())
            .collect();
        let m = rebuild(&sys, &t, mid);
        prop_assert!(norm(&sys, &m) <= 0.5 * (norm(&sys, &t) + norm(&sys, &u)) + 1e-7);
    }

    #[test]
    fn bounded_by_the_injective_norm_and_g(seed in any::<u64>()) {
        let (sys, t) = instance(seed, 4);
        let inj = tensor::injective_norm_dichotomic(&sys, &t).unwrap();
        let st = norm(&sys, &t);
        prop_assert!(inj <= st + 1e-7);
        prop_assert!(st <= t.g() as f64 * inj + 1e-7);
    }

    #[test]
    fn decomposition_reconstructs_the_tensor(seed in any::<u64>()) {
        let (sys, t) = instance(seed, 3);
        let sn = tensor::steering_norm(&sys, &t).unwrap();
        let d = sys.dim();
        let mut total = vec![0.0; d];
        let mut ys = vec![vec![0.0; d]; t.g()];
        for c in &sn.decomposition {
            prop_assert!(sys.in_cone(c.phi.coords(), 1e-8));
            for r in 0..d {
                total[r] += c.phi.coords()[r];
                for (x, y) in ys.iter_mut().enumerate() {
                    y[r] += c.signs[x] as f64 * c.phi.coords()[r];
                }
            }
        }
        for r in 0..d {
            prop_assert!((total[r] - sn.value * t.sigma().coords()[r]).abs() <= 1e-7);
            for (x, y) in ys.iter().enumerate() {
                prop_assert!((y[r] - t.components()[x].coords()[r]).abs() <= 1e-7);
            }
        }
    }

    #[test]
    fn witness_is_tight_and_valid(seed in any::<u64>()) {
        let (sys, t) = instance(seed, 3);
        let sn = tensor::steering_norm(&sys, &t).unwrap();
        prop_assume!(sn.value > 1e-6);
        prop_assert!((sn.witness.value(&t) - (1.0 - sn.value)).abs() <= 1e-7);
        prop_assert!(sn.witness.max_violation(&sys).unwrap() <= 1e-8);
    }

    #[test]
    fn lhs_verdict_matches_the_norm(seed in any::<u64>()) {
        let (sys, t) = instance(seed, 3);
        let asm = Assemblage::from_dichotomic(&sys, &t).unwrap();
        let st = norm(&sys, &t);
        let classical = steering::lhs_check(&sys, &asm).unwrap().is_classical();
        prop_assert_eq!(classical, st <= 1.0 + 1e-7);
    }

    #[test]
    fn mixing_with_the_trivial_assemblage_scales_the_norm(seed in any::<u64>(), s in 0.05f64..1.0) {
        let (sys, t) = instance(seed, 3);
        let asm = Assemblage::from_dichotomic(&sys, &t).unwrap();
        let mixed = asm.mixed_with_trivial(s).to_dichotomic_tensor(&sys).unwrap();
        prop_assert!((norm(&sys, &mixed) - s * norm(&sys, &t)).abs() <= 1e-7);
    }

    #[test]
    fn robustness_is_the_largest_classical_mixing(seed in any::<u64>()) {
        let (sys, t) = instance(seed, 3);
        let asm = Assemblage::from_dichotomic(&sys, &t).unwrap();
        let r = steering::robustness(&sys, &asm).unwrap().value;
        prop_assert!(steering::lhs_check(&sys, &asm.mixed_with_trivial(r * (1.0 - 1e-6))).unwrap().is_classical());
        if r < 1.0 - 1e-6 {
            let above = (r * (1.0 + 1e-3)).min(1.0);
            prop_assert!(!steering::lhs_check(&sys, &asm.mixed_with_trivial(above)).unwrap().is_classical());
        }
    }
}

#[test]
fn zero_tensor_has_zero_norm() {
    let sq = GptSystem::square();
    let t = DichotomicTensor::new(&sq, sq.center(), vec![sq.zero_vector(), sq.zero_vector()]).unwrap();
    assert_eq!(norm(&sq, &t), 0.0);
}

#[test]
fn general_shape_robustness_uses_bisection() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let sq = GptSystem::square();
    let extreme = sq.extreme_effects().unwrap();
    let ms: Vec<_> = (0..2)
        .map(|_| sampling::random_measurement(&mut rng, &sq, &extreme, 3).unwrap())
        .collect();
    let (dual, asm) = steering::measurements_to_assemblage(&sq, &sq.center(), &ms).unwrap();
    let r = steering::robustness(&dual, &asm).unwrap();
    assert_eq!(r.method, steering::RobustnessMethod::Bisection);
    assert!(r.value > 0.0 && r.value <= 1.0);
    let at = asm.mixed_with_trivial(r.value * (1.0 - 1e-5));
    assert!(steering::lhs_check(&dual, &at).unwrap().is_classical());
}
