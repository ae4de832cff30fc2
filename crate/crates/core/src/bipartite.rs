//! Bipartite states in `K_A ⊗max K_B`, steering maps, and unsteerability.

use gptsteer_lp::{solve, LpProblem, LpStatus};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::choquet::{BoundaryMeasure, SimpleMeasure};
use crate::choquet::order_interval_vertices;
use crate::error::{invalid, GptError, Result};
use crate::geometry::{self, dot, EPS};
use crate::gpt::{Functional, GptSystem, LinearMap, Measurement, SystemKind, Vector};
use crate::guards::{self, Guards};
use crate::sampling;
use crate::steering::{lhs_check, Assemblage, LhsVerdict};
use crate::tensor::{max_cone_member, DichotomicTensor, TensorElement};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BipartiteState {
    tensor: TensorElement,
    sigma_a: Vector,
    sigma_b: Vector,
}

impl BipartiteState {
    pub fn new(a: &GptSystem, b: &GptSystem, tensor: TensorElement) -> Result<BipartiteState> {
        tensor.check(a, b)?;
        let norm = tensor.pair(a.unit_coords(), b.unit_coords());
        if (norm - 1.0).abs() > EPS {
            return invalid(format!("state is not normalized: <1_A ⊗ 1_B, t> = {norm}"));
        }
        if !max_cone_member(a, b, &tensor)? {
            return invalid("state is not in the max tensor cone");
        }
        let sigma_a = a.vector(tensor.contract_right(b.unit_coords()))?;
        let sigma_b = b.vector(tensor.contract_left(a.unit_coords()))?;
        Ok(BipartiteState { tensor, sigma_a, sigma_b })
    }

    pub fn product(a: &GptSystem, b: &GptSystem, rho_a: &Vector, rho_b: &Vector) -> Result<BipartiteState> {
        a.check_vector(rho_a)?;
        b.check_vector(rho_b)?;
        BipartiteState::new(a, b, TensorElement::product(rho_a, rho_b))
    }

    /// `ξ = e_0 ⊗ σ + Σ_x e_x ⊗ y_x` in `S_g ⊗max K`, with the hypercube
    /// system `S_g` returned alongside.
    pub fn from_dichotomic(system: &GptSystem, t: &DichotomicTensor) -> Result<(GptSystem, BipartiteState)> {
        let cube = GptSystem::hypercube(t.g())?;
        let xi = t.embed(&cube, system)?;
        let state = BipartiteState::new(&cube, system, xi)?;
        Ok((cube, state))
    }

    pub fn tensor(&self) -> &TensorElement {
        &self.tensor
    }

    pub fn marginal_a(&self) -> &Vector {
        &self.sigma_a
    }

    pub fn marginal_b(&self) -> &Vector {
        &self.sigma_b
    }

    /// `λ · self + (1 - λ) · other`.
    pub fn mix(&self, a: &GptSystem, b: &GptSystem, lambda: f64, other: &BipartiteState) -> Result<BipartiteState> {
        let t = self.tensor.scale(lambda).add(&other.tensor.scale(1.0 - lambda))?;
        BipartiteState::new(a, b, t)
    }

    /// `λ · self + (1 - λ) σ_A ⊗ σ_B`.
    pub fn with_noise(&self, a: &GptSystem, b: &GptSystem, lambda: f64) -> Result<BipartiteState> {
        let noise = BipartiteState::product(a, b, &self.sigma_a, &self.sigma_b)?;
        self.mix(a, b, lambda, &noise)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `S_{A→B}: A_A → V_B`, `<h_A ⊗ h_B, σ_AB> = <h_B, S_{A→B}(h_A)>`.
    AToB,
    /// `S_{B→A}: A_B → V_A`, `<h_A ⊗ h_B, σ_AB> = <h_A, S_{B→A}(h_B)>`.
    BToA,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteeringMap {
    pub direction: Direction,
    pub map: LinearMap,
}

impl SteeringMap {
    pub fn apply(&self, h: &[f64]) -> Vec<f64> {
        self.map.apply(h)
    }
}

/// The steering map in the given direction; the marginal on the image side
/// must be interior.
pub fn steering_map(a: &GptSystem, b: &GptSystem, state: &BipartiteState, direction: Direction) -> Result<SteeringMap> {
    state.tensor.check(a, b)?;
    let c = state.tensor.coeffs();
    let matrix = match direction {
        Direction::AToB => {
            if !b.is_interior(&state.sigma_b) {
                return Err(GptError::MarginalNotInterior("σ_B".into()));
            }
            (0..b.dim()).map(|j| (0..a.dim()).map(|i| c[i][j]).collect()).collect()
        }
        Direction::BToA => {
            if !a.is_interior(&state.sigma_a) {
                return Err(GptError::MarginalNotInterior("σ_A".into()));
            }
            c.to_vec()
        }
    };
    Ok(SteeringMap { direction, map: LinearMap { matrix } })
}

/// `ρ_{a|x} = (f_{a|x} ⊗ id)(σ_AB)`, with barycenter `σ_B`.
pub fn conditional_assemblage(
    a: &GptSystem,
    b: &GptSystem,
    state: &BipartiteState,
    measurements: &[Measurement],
) -> Result<Assemblage> {
    state.tensor.check(a, b)?;
    let mut entries = Vec::with_capacity(measurements.len());
    for m in measurements {
        let mut row = Vec::with_capacity(m.outcomes());
        for f in &m.effects {
            a.check_functional(f)?;
            row.push(b.vector(state.tensor.contract_left(f.coords()))?);
        }
        entries.push(row);
    }
    Assemblage::new(b, state.sigma_b.clone(), entries)
}

/// `e = 2f - 1` for the extreme effects `f ∉ {0, 1}` of `A`, one of each
/// pair `±e`.
pub fn dual_ball_extreme_points(a: &GptSystem) -> Result<Vec<Vec<f64>>> {
    let unit = a.unit_coords();
    let mut out: Vec<Vec<f64>> = Vec::new();
    for f in a.extreme_effects()? {
        let e = geometry::sub(&geometry::scaled(f.coords(), 2.0), unit);
        let trivial = geometry::dist_inf(&e, unit) <= EPS || geometry::dist_inf(&e, &geometry::scaled(unit, -1.0)) <= EPS;
        let neg = geometry::scaled(&e, -1.0);
        if trivial || out.iter().any(|o| geometry::dist_inf(o, &neg) <= EPS) {
            continue;
        }
        out.push(e);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum UnsteerableVerdict {
    /// A boundary measure `μ` with `||S_{B→A}(h)||_{V_A} <= ∫ |<h,ρ>| dμ`
    /// for all `h`.
    Unsteerable { measure: BoundaryMeasure },
    /// Dichotomic measurements `(f, 1 - f)` on `A` whose conditional
    /// assemblage is steerable, and for each the functional `h` on `B`
    /// taken from the infeasibility certificate.
    Steerable { measurements: Vec<Measurement>, functionals: Vec<Functional> },
}

impl UnsteerableVerdict {
    pub fn is_unsteerable(&self) -> bool {
        matches!(self, UnsteerableVerdict::Unsteerable { .. })
    }
}

/// Decides unsteerability by all dichotomic measurements: one LP over a
/// vertex measure `μ` and, for each extreme `e` of the dual unit ball of
/// `V_A`, zonotope coefficients `t^e = t^+ - t^-` with `t^+ + t^- <= μ` and
/// `Σ_j t^e_j ρ_j = S_{A→B}(e)`.
pub fn unsteerable_dichotomic(a: &GptSystem, b: &GptSystem, state: &BipartiteState) -> Result<UnsteerableVerdict> {
    a.require_polytope()?;
    b.require_polytope()?;
    b.require_interior(&state.sigma_b, "σ_B")?;
    let s_ab = steering_map(a, b, state, Direction::AToB)?;
    let es = dual_ball_extreme_points(a)?;
    let verts = b.vertices();
    let m = verts.len();
    let d = b.dim();
    let ne = es.len();
    let n = m + 2 * ne * m;
    guards::check("unsteerability LP columns", n, Guards::current().vertices * Guards::current().strategies)?;
    let tp = |e: usize, j: usize| m + 2 * e * m + j;
    let tm = |e: usize, j: usize| m + 2 * e * m + m + j;
    let mut p = LpProblem::new(n);
    for r in 0..d {
        let entries: Vec<(usize, f64)> = (0..m).map(|j| (j, verts[j][r])).collect();
        p.add_eq_sparse(&entries, state.sigma_b.coords()[r]);
    }
    for (k, e) in es.iter().enumerate() {
        let target = s_ab.apply(e);
        for r in 0..d {
            let mut entries = Vec::with_capacity(2 * m);
            for (j, v) in verts.iter().enumerate() {
                if v[r] != 0.0 {
                    entries.push((tp(k, j), v[r]));
                    entries.push((tm(k, j), -v[r]));
                }
            }
            p.add_eq_sparse(&entries, target[r]);
        }
    }
    for k in 0..ne {
        for j in 0..m {
            p.add_le_sparse(&[(tp(k, j), 1.0), (tm(k, j), 1.0), (j, -1.0)], 0.0);
        }
    }
    let out = solve(&p)?;
    match out.status {
        LpStatus::Optimal => {
            let total: f64 = out.primal[..m].iter().sum();
            let weights: Vec<f64> = out.primal[..m].iter().map(|w| w / total).collect();
            let measure = SimpleMeasure::on_vertices(b, &weights)?;
            Ok(UnsteerableVerdict::Unsteerable { measure: BoundaryMeasure::new(b, measure)? })
        }
        LpStatus::Infeasible => {
            let blocks: Vec<&[f64]> = (0..ne).map(|k| &out.dual_equality[d + k * d..d + (k + 1) * d]).collect();
            let scale = blocks.iter().map(|h| geometry::max_abs(h)).fold(0.0, f64::max);
            let mut measurements = Vec::new();
            let mut functionals = Vec::new();
            for (k, h) in blocks.iter().enumerate() {
                if geometry::max_abs(h) <= 1e-9 * scale.max(1e-300) {
                    continue;
                }
                let f = geometry::scaled(&geometry::add(a.unit_coords(), &es[k]), 0.5);
                measurements.push(Measurement::dichotomic(a, a.functional(geometry::clean(f))?)?);
                functionals.push(b.functional(h.to_vec())?);
            }
            Ok(UnsteerableVerdict::Steerable { measurements, functionals })
        }
        LpStatus::Unbounded => Err(GptError::Numerical("feasibility problem reported unbounded".into())),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SufficientCheck {
    pub holds: bool,
    /// `max ||S_{B→A}(h)||_{V_A}` over `{h : s ||h||^σ <= 1, |<h, σ_B>| <= 1}`.
    pub operator_value: f64,
    pub s_lower: f64,
}

/// One-sided test: with `s <= s_{σ_B}` certified, unsteerability follows
/// from `||S_{B→A}(h)||_{V_A} <= max(s ||h||^σ, |<h, σ_B>|)` for all `h`,
/// because the measure attaining `c_μ = s_{σ_B}` integrates `|<h,·>|` to at
/// least both terms.
pub fn unsteerable_sufficient(
    a: &GptSystem,
    b: &GptSystem,
    state: &BipartiteState,
    s_lower: f64,
) -> Result<SufficientCheck> {
    if !(s_lower > 0.0 && s_lower <= 1.0) {
        return invalid("s_lower must lie in (0, 1]");
    }
    a.require_polytope()?;
    let s_ab = steering_map(a, b, state, Direction::AToB)?;
    let ys = order_interval_vertices(b, &state.sigma_b)?;
    let d = b.dim();
    let mut worst = 0.0f64;
    // ||S_{B→A}(h)||_{V_A} = max_e <h, S_{A→B}(e)>, so the maximum over the
    // ball splits into one LP per extreme `e` (and its negative).
    let mut es = dual_ball_extreme_points(a)?;
    es.push(a.unit_coords().to_vec());
    for e in &es {
        let target = s_ab.apply(e);
        let mut p = LpProblem::new(d).minimize(target.iter().map(|v| -v).collect());
        for r in 0..d {
            p.set_free(r);
        }
        for y in &ys {
            p.add_le(y.clone(), 1.0 / s_lower);
        }
        p.add_le(state.sigma_b.coords().to_vec(), 1.0);
        p.add_le(geometry::scaled(state.sigma_b.coords(), -1.0), 1.0);
        let out = solve(&p)?;
        if out.status != LpStatus::Optimal {
            return Err(GptError::Numerical(format!("operator norm LP returned {:?}", out.status)));
        }
        // The ball is symmetric, so the value for -e is the same.
        worst = worst.max(-out.objective_value);
    }
    Ok(SufficientCheck { holds: worst <= 1.0 + 1e-9, operator_value: worst, s_lower })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum SearchOutcome {
    SteerableBy { measurements: Vec<Measurement>, trial: usize, lhs: Box<LhsVerdict> },
    Inconclusive { trials: usize },
}

/// `½(1 ± e_x)` on the first coordinates of a centrally symmetric `A`.
pub fn canonical_measurements(a: &GptSystem, count: usize) -> Result<Vec<Measurement>> {
    if a.kind() != SystemKind::CentrallySymmetric || count >= a.dim() {
        return invalid("canonical measurements need a centrally symmetric system with enough coordinates");
    }
    (0..count)
        .map(|x| {
            let mut f = geometry::scaled(a.unit_coords(), 0.5);
            f[x + 1] += 0.5;
            Measurement::dichotomic(a, a.functional(f)?)
        })
        .collect()
}

/// Falsification search over measurement families on `A` with the given
/// outcome counts; never claims unsteerability.
pub fn steerability_search(
    a: &GptSystem,
    b: &GptSystem,
    state: &BipartiteState,
    shapes: &[usize],
    budget: usize,
    seed: u64,
) -> Result<SearchOutcome> {
    if budget == 0 {
        return invalid("budget must be at least 1");
    }
    if shapes.is_empty() || shapes.iter().any(|&k| k < 2) {
        return invalid("each setting needs at least two outcomes");
    }
    let extreme = a.extreme_effects()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trial = 0;
    let test = |ms: Vec<Measurement>, trial: usize| -> Result<Option<SearchOutcome>> {
        let asm = conditional_assemblage(a, b, state, &ms)?;
        let verdict = lhs_check(b, &asm)?;
        if verdict.is_classical() {
            return Ok(None);
        }
        Ok(Some(SearchOutcome::SteerableBy { measurements: ms, trial, lhs: Box::new(verdict) }))
    };
    if shapes.iter().all(|&k| k == 2) {
        if let Ok(ms) = canonical_measurements(a, shapes.len()) {
            if let Some(found) = test(ms, trial)? {
                return Ok(found);
            }
            trial += 1;
        }
    }
    while trial < budget {
        let ms = shapes
            .iter()
            .map(|&k| sampling::random_measurement(&mut rng, a, &extreme, k))
            .collect::<Result<Vec<_>>>()?;
        if let Some(found) = test(ms, trial)? {
            return Ok(found);
        }
        trial += 1;
    }
    Ok(SearchOutcome::Inconclusive { trials: trial })
}

/// `<h_A ⊗ h_B, σ_AB>`.
pub fn pairing(state: &BipartiteState, h_a: &[f64], h_b: &[f64]) -> f64 {
    dot(&state.tensor.contract_right(h_b), h_a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diagonal_state() -> (GptSystem, GptSystem, BipartiteState) {
        let sq = GptSystem::square();
        let ys = vec![sq.vector(vec![0.0, 1.0, 1.0]).unwrap(), sq.vector(vec![0.0, 1.0, -1.0]).unwrap()];
        let t = DichotomicTensor::new(&sq, sq.center(), ys).unwrap();
        let (cube, st) = BipartiteState::from_dichotomic(&sq, &t).unwrap();
        (cube, sq, st)
    }

    #[test]
    fn canonical_projections_recover_the_assemblage() {
        let (cube, sq, st) = diagonal_state();
        let ms = canonical_measurements(&cube, 2).unwrap();
        let asm = conditional_assemblage(&cube, &sq, &st, &ms).unwrap();
        let y = asm.to_dichotomic_tensor(&sq).unwrap();
        assert!(geometry::dist_inf(y.components()[0].coords(), &[0.0, 1.0, 1.0]) < 1e-12);
        assert!(geometry::dist_inf(y.components()[1].coords(), &[0.0, 1.0, -1.0]) < 1e-12);
    }

    #[test]
    fn diagonal_state_is_steerable() {
        let (cube, sq, st) = diagonal_state();
        match unsteerable_dichotomic(&cube, &sq, &st).unwrap() {
            UnsteerableVerdict::Steerable { measurements, .. } => {
                let asm = conditional_assemblage(&cube, &sq, &st, &measurements).unwrap();
                let r = crate::steering::robustness(&sq, &asm).unwrap();
                assert!((r.value - 0.5).abs() < 1e-6, "{}", r.value);
            }
            other => panic!("{other:?}"),
        }
        let chk = unsteerable_sufficient(&cube, &sq, &st, 0.5).unwrap();
        assert!(!chk.holds);
        let noisy = st.with_noise(&cube, &sq, 0.5).unwrap();
        assert!(unsteerable_sufficient(&cube, &sq, &noisy, 0.5).unwrap().holds);
        assert!(unsteerable_dichotomic(&cube, &sq, &noisy).unwrap().is_unsteerable());
    }

    #[test]
    fn product_states_are_unsteerable() {
        let sq = GptSystem::square();
        let tri = GptSystem::simplex(3).unwrap();
        let st = BipartiteState::product(&sq, &tri, &sq.vertex(0), &tri.barycenter()).unwrap();
        assert!(unsteerable_dichotomic(&sq, &tri, &st).unwrap().is_unsteerable());
        let st = BipartiteState::product(&sq, &sq, &sq.vertex(1), &sq.center()).unwrap();
        assert!(unsteerable_sufficient(&sq, &sq, &st, 1.0).unwrap().holds);
        match steerability_search(&sq, &sq, &st, &[2, 2], 20, 0).unwrap() {
            SearchOutcome::Inconclusive { trials } => assert_eq!(trials, 20),
            other => panic!("{other:?}"),
        }
        assert!(steerability_search(&sq, &sq, &st, &[2, 2], 0, 0).is_err());
    }

    #[test]
    fn steering_map_identities() {
        let (cube, sq, st) = diagonal_state();
        let ab = steering_map(&cube, &sq, &st, Direction::AToB).unwrap();
        let ba = steering_map(&cube, &sq, &st, Direction::BToA).unwrap();
        let ha = [0.3, -0.2, 0.7];
        let hb = [0.1, 0.4, -0.9];
        let p = pairing(&st, &ha, &hb);
        assert!((dot(&hb, &ab.apply(&ha)) - p).abs() < 1e-12);
        assert!((dot(&ha, &ba.apply(&hb)) - p).abs() < 1e-12);
        match steerability_search(&cube, &sq, &st, &[2, 2], 5, 0).unwrap() {
            SearchOutcome::SteerableBy { trial, .. } => assert_eq!(trial, 0),
            other => panic!("{other:?}"),
        }
    }
}
