//! Seeded random instances: systems, states, tensors, measurements, measures.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::geometry::{self, dot};
use crate::gpt::{Functional, GptSystem, Measurement, Vector};
use crate::Result;

fn gaussian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// A random polytopic system of dimension `d ∈ {2, 3, 4}`: a segment, a
/// polygon with 3 to 7 vertices on a circle, or 4 to 8 points on a sphere.
pub fn random_polytope_system<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Result<GptSystem> {
    match d {
        2 => GptSystem::simplex(2),
        3 => loop {
            let m = rng.random_range(3..=7usize);
            let mut angles: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
            angles.sort_by(f64::total_cmp);
            let gap_ok = (0..m).all(|i| {
                let next = if i + 1 < m { angles[i + 1] } else { angles[0] + std::f64::consts::TAU };
                next - angles[i] > 0.15 && next - angles[i] < std::f64::consts::PI - 0.05
            });
            if !gap_ok {
                continue;
            }
            let verts = angles.iter().map(|a| vec![1.0, a.cos(), a.sin()]).collect();
            if let Ok(sys) = GptSystem::from_vertices(verts, vec![1.0, 0.0, 0.0]) {
                return Ok(sys);
            }
        },
        4 => loop {
            let m = rng.random_range(4..=8usize);
            let mut verts = Vec::with_capacity(m);
            for _ in 0..m {
                let p = gaussian(rng, 3);
                let r = geometry::norm2(&p);
                verts.push(vec![1.0, p[0] / r, p[1] / r, p[2] / r]);
            }
            // Reject nearly flat configurations, which give ill-conditioned cones.
            let close = (0..m).any(|i| (0..i).any(|j| geometry::dist_inf(&verts[i], &verts[j]) < 0.1));
            if close {
                continue;
            }
            if let Ok(sys) = GptSystem::from_vertices(verts, vec![1.0, 0.0, 0.0, 0.0]) {
                let c = sys.barycenter();
                let inner = sys.facets().iter().map(|f| dot(f, c.coords())).fold(f64::INFINITY, f64::min);
                if inner > 0.05 {
                    return Ok(sys);
                }
            }
        },
        _ => crate::error::invalid("random systems are generated for d in 2..=4"),
    }
}

/// A strictly positive mixture of all vertices.
pub fn random_interior_state<R: Rng + ?Sized>(rng: &mut R, system: &GptSystem) -> Vector {
    let w: Vec<f64> = system.vertices().iter().map(|_| 0.2 + rng.random::<f64>()).collect();
    let total: f64 = w.iter().sum();
    let mut c = vec![0.0; system.dim()];
    for (wi, v) in w.iter().zip(system.vertices()) {
        geometry::axpy(&mut c, wi / total, v);
    }
    system.vector(c).expect("dimension matches")
}

/// A random state: a random mixture of a random subset of vertices.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, system: &GptSystem) -> Vector {
    let m = system.vertices().len();
    let w: Vec<f64> = (0..m)
        .map(|_| if rng.random::<f64>() < 0.5 { rng.random::<f64>() } else { 0.0 })
        .collect();
    let total: f64 = w.iter().sum();
    if total <= 1e-9 {
        return system.vertex(rng.random_range(0..m));
    }
    let mut c = vec![0.0; system.dim()];
    for (wi, v) in w.iter().zip(system.vertices()) {
        geometry::axpy(&mut c, wi / total, v);
    }
    system.vector(c).expect("dimension matches")
}

/// A Gaussian direction rescaled to `||y||_σ = radius`.
pub fn random_component<R: Rng + ?Sized>(rng: &mut R, system: &GptSystem, sigma: &Vector, radius: f64) -> Vec<f64> {
    loop {
        let y = gaussian(rng, system.dim());
        let n = system.sigma_norm_raw(&y, sigma.coords());
        if n > 1e-9 {
            return geometry::scaled(&y, radius / n);
        }
    }
}

/// `g` components with `||y_x||_σ` uniform in `[0.3, 1]`, with a bias
/// towards full length so that steerable instances are common.
pub fn random_components<R: Rng + ?Sized>(rng: &mut R, system: &GptSystem, sigma: &Vector, g: usize) -> Vec<Vector> {
    (0..g)
        .map(|_| {
            let r = if rng.random::<f64>() < 0.5 { 1.0 } else { rng.random_range(0.3..1.0) };
            // Shrink slightly below 1 so the cone test has slack.
            let y = random_component(rng, system, sigma, r * (1.0 - 1e-10));
            system.vector(y).expect("dimension matches")
        })
        .collect()
}

/// A random effect: a jittered extreme effect pulled towards `½·1`.
pub fn jittered_effect<R: Rng + ?Sized>(rng: &mut R, system: &GptSystem, extreme: &[Functional]) -> Functional {
    let e = &extreme[rng.random_range(0..extreme.len())];
    let delta = rng.random_range(0.0..0.1);
    let c = geometry::add(
        &geometry::scaled(e.coords(), 1.0 - delta),
        &geometry::scaled(system.unit_coords(), 0.5 * delta),
    );
    system.functional(c).expect("dimension matches")
}

/// `k` outcomes: `k - 1` jittered extreme effects scaled by `1/(k - 1)`, and
/// the remainder.
pub fn random_measurement<R: Rng + ?Sized>(
    rng: &mut R,
    system: &GptSystem,
    extreme: &[Functional],
    k: usize,
) -> Result<Measurement> {
    if k < 2 {
        return Measurement::new(system, vec![system.unit()]);
    }
    let mut effects = Vec::with_capacity(k);
    let mut rest = system.unit_coords().to_vec();
    for _ in 0..k - 1 {
        let f = jittered_effect(rng, system, extreme).scale(1.0 / (k - 1) as f64);
        rest = geometry::sub(&rest, f.coords());
        effects.push(f);
    }
    effects.push(system.functional(rest)?);
    Measurement::new(system, effects)
}

/// A simple measure with `atoms` random states and random weights.
pub fn random_atoms<R: Rng + ?Sized>(rng: &mut R, system: &GptSystem, atoms: usize) -> Vec<(f64, Vector)> {
    let w: Vec<f64> = (0..atoms).map(|_| 0.1 + rng.random::<f64>()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|wi| (wi / total, random_state(rng, system))).collect()
}

/// A separable state: positive random weights on all vertex pairs, so both
/// marginals are interior.
pub fn random_separable_state<R: Rng + ?Sized>(
    rng: &mut R,
    a: &GptSystem,
    b: &GptSystem,
) -> Result<crate::bipartite::BipartiteState> {
    let (va, vb) = (a.vertices(), b.vertices());
    let mut coeffs = vec![vec![0.0; b.dim()]; a.dim()];
    let mut total = 0.0;
    let weights: Vec<f64> = (0..va.len() * vb.len()).map(|_| 0.05 + rng.random::<f64>()).collect();
    for (k, w) in weights.iter().enumerate() {
        let (u, v) = (&va[k / vb.len()], &vb[k % vb.len()]);
        for (r, row) in coeffs.iter_mut().enumerate() {
            geometry::axpy(row, w * u[r], v);
        }
        total += w;
    }
    for row in &mut coeffs {
        *row = geometry::scaled(row, 1.0 / total);
    }
    let t = crate::tensor::TensorElement::new(a, b, coeffs)?;
    crate::bipartite::BipartiteState::new(a, b, t)
}

/// A normalized max-cone tensor: an extreme point of the max-cone slice,
/// mixed with a random interior product state.
///
/// Half of the draws maximize a random linear objective. The other half
/// maximize a CHSH-type functional built from random extreme effects,
/// retried (up to 8 times) until the optimum beats the best vertex pair,
/// which certifies a non-product extreme point.
pub fn random_max_cone_state<R: Rng + ?Sized>(
    rng: &mut R,
    a: &GptSystem,
    b: &GptSystem,
) -> Result<crate::tensor::TensorElement> {
    use crate::tensor::TensorElement;
    let (da, db) = (a.dim(), b.dim());
    let outer = |f: &[f64], h: &[f64]| -> Vec<f64> { f.iter().flat_map(|x| h.iter().map(move |y| x * y)).collect() };
    let coeffs = if rng.random::<bool>() {
        max_cone_extreme(a, b, gaussian(rng, da * db))?.0
    } else {
        let ea = nontrivial_effects(a)?;
        let eb = nontrivial_effects(b)?;
        let mut last = None;
        for _ in 0..8 {
            let oa: Vec<Vec<f64>> = (0..2).map(|_| observable(rng, a, &ea)).collect();
            let ob: Vec<Vec<f64>> = (0..2).map(|_| observable(rng, b, &eb)).collect();
            // -(A0 B0 + A0 B1 + A1 B0 - A1 B1)
            let mut c = vec![0.0; da * db];
            for (x, u) in oa.iter().enumerate() {
                for (y, w) in ob.iter().enumerate() {
                    let sign = if x * y == 1 { 1.0 } else { -1.0 };
                    geometry::axpy(&mut c, sign, &outer(u, w));
                }
            }
            let separable_min = a
                .vertices()
                .iter()
                .flat_map(|v| b.vertices().iter().map(move |w| (v, w)))
                .map(|(v, w)| dot(&c, &outer(v, w)))
                .fold(f64::INFINITY, f64::min);
            let (t, value) = max_cone_extreme(a, b, c)?;
            let beats = value < separable_min - 1e-6;
            last = Some(t);
            if beats {
                break;
            }
        }
        last.expect("at least one attempt")
    };
    let extreme = TensorElement::new(a, b, coeffs.chunks(db).map(|c| c.to_vec()).collect())?;
    let base = TensorElement::product(&random_interior_state(rng, a), &random_interior_state(rng, b));
    // Biased towards the extreme point, where entanglement lives.
    let s: f64 = rng.random::<f64>().cbrt();
    extreme.scale(s).add(&base.scale(1.0 - s))
}

fn nontrivial_effects(sys: &GptSystem) -> Result<Vec<Functional>> {
    Ok(sys
        .extreme_effects()?
        .into_iter()
        .filter(|f| geometry::max_abs(f.coords()) > 1e-9 && geometry::dist_inf(f.coords(), sys.unit_coords()) > 1e-9)
        .collect())
}

/// `2f - 1` for a random effect `f`.
fn observable<R: Rng + ?Sized>(rng: &mut R, sys: &GptSystem, effects: &[Functional]) -> Vec<f64> {
    let f = effects[rng.random_range(0..effects.len())].coords();
    geometry::sub(&geometry::scaled(f, 2.0), sys.unit_coords())
}

/// Minimizer of `<c, t>` over normalized max-cone tensors, flattened
/// row-major, with the optimal value.
fn max_cone_extreme(a: &GptSystem, b: &GptSystem, c: Vec<f64>) -> Result<(Vec<f64>, f64)> {
    use gptsteer_lp::{solve, LpProblem, LpStatus};
    let n = a.dim() * b.dim();
    let outer = |f: &[f64], h: &[f64]| -> Vec<f64> { f.iter().flat_map(|x| h.iter().map(move |y| x * y)).collect() };
    let mut p = LpProblem::new(n).minimize(c);
    for j in 0..n {
        p.set_free(j);
    }
    // Facet pairs generate the dual of the min cone, so they cut out the
    // max cone with far fewer rows than extreme-effect pairs.
    for f in a.facets() {
        for h in b.facets() {
            p.add_le(outer(f, h).iter().map(|v| -v).collect(), 0.0);
        }
    }
    p.add_eq(outer(a.unit_coords(), b.unit_coords()), 1.0);
    let out = solve(&p)?;
    if out.status != LpStatus::Optimal {
        return Err(crate::error::GptError::Numerical(format!("max-cone sampling LP returned {:?}", out.status)));
    }
    Ok((out.primal, out.objective_value))
}

/// A random vertex measure with barycenter `sigma`: an average of three
/// vertices of `{w >= 0 : Σ w_i v_i = σ}` picked by random objectives.
pub fn random_vertex_measure_at<R: Rng + ?Sized>(rng: &mut R, system: &GptSystem, sigma: &Vector) -> Result<Vec<f64>> {
    use gptsteer_lp::{solve, LpProblem};
    let m = system.vertices().len();
    let mut acc = vec![0.0; m];
    for _ in 0..3 {
        let obj = gaussian(rng, m);
        let mut p = LpProblem::new(m).minimize(obj);
        for r in 0..system.dim() {
            p.add_eq(system.vertices().iter().map(|v| v[r]).collect(), sigma.coords()[r]);
        }
        let out = solve(&p)?;
        if !out.is_optimal() {
            return Err(crate::GptError::Numerical("σ is not a vertex mixture".into()));
        }
        geometry::axpy(&mut acc, 1.0 / 3.0, &out.primal);
    }
    let total: f64 = acc.iter().sum();
    Ok(acc.into_iter().map(|w| (w / total).max(0.0)).collect())
}

/// A two-atom measure `λ δ_{σ+} + (1 - λ) δ_{σ-}` with barycenter `sigma`,
/// splitting along a random direction in the affine hull of `K`. Falls back
/// to `δ_σ` when `σ` admits no split, e.g. at a vertex.
pub fn random_split<R: Rng + ?Sized>(
    rng: &mut R,
    system: &GptSystem,
    sigma: &Vector,
) -> Result<crate::choquet::SimpleMeasure> {
    let s = sigma.coords();
    let unit = system.unit_coords();
    let uu = dot(unit, unit);
    for _ in 0..200 {
        let mut y = gaussian(rng, system.dim());
        // Project onto <1, y> = 0.
        let c = dot(unit, &y) / uu;
        geometry::axpy(&mut y, -c, unit);
        let reach = |dir: f64| {
            system
                .facets()
                .iter()
                .filter_map(|f| {
                    let fy = dir * dot(f, &y);
                    (fy < -1e-12).then(|| dot(f, s) / -fy)
                })
                .fold(f64::INFINITY, f64::min)
        };
        let (ra, rb) = (reach(1.0), reach(-1.0));
        if !ra.is_finite() || !rb.is_finite() || ra < 1e-6 || rb < 1e-6 {
            continue;
        }
        let a = ra * rng.random_range(0.2..1.0);
        let b = rb * rng.random_range(0.2..1.0);
        let plus = geometry::add(s, &geometry::scaled(&y, a));
        let minus = geometry::sub(s, &geometry::scaled(&y, b));
        let lam = b / (a + b);
        return crate::choquet::SimpleMeasure::new(
            system,
            vec![(lam, system.vector(plus)?), (1.0 - lam, system.vector(minus)?)],
        );
    }
    crate::choquet::SimpleMeasure::dirac(system, sigma.clone())
}
