//! Elements of `V_A ⊗ V_B`, dichotomic tensors in `S_g ⊗ V`, and the
//! injective, steering and projective cross norms.

use gptsteer_lp::{solve, LpProblem, LpStatus};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, GptError, Result};
use crate::geometry::{self, dot, EPS};
use crate::gpt::{Functional, GptSystem, SystemId, Vector};
use crate::guards::{self, Guards};
use crate::steering::Witness;

/// Coefficients of an element of `V_A ⊗ V_B` as a `d_A × d_B` matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorElement {
    a: SystemId,
    b: SystemId,
    coeffs: Vec<Vec<f64>>,
}

impl TensorElement {
    pub fn new(a: &GptSystem, b: &GptSystem, coeffs: Vec<Vec<f64>>) -> Result<TensorElement> {
        if coeffs.len() != a.dim() {
            return invalid(format!("tensor has {} rows, system A has dim {}", coeffs.len(), a.dim()));
        }
        for (i, row) in coeffs.iter().enumerate() {
            if row.len() != b.dim() {
                return invalid(format!("tensor row {i} has length {}, system B has dim {}", row.len(), b.dim()));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return invalid(format!("tensor row {i} has a non-finite entry"));
            }
        }
        Ok(TensorElement { a: a.id(), b: b.id(), coeffs })
    }

    /// `u ⊗ w`.
    pub fn product(u: &Vector, w: &Vector) -> TensorElement {
        TensorElement {
            a: u.system(),
            b: w.system(),
            coeffs: u.coords().iter().map(|x| geometry::scaled(w.coords(), *x)).collect(),
        }
    }

    pub fn systems(&self) -> (SystemId, SystemId) {
        (self.a, self.b)
    }

    pub fn coeffs(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    pub(crate) fn check(&self, a: &GptSystem, b: &GptSystem) -> Result<()> {
        if self.a != a.id() || self.b != b.id() {
            return Err(GptError::TagMismatch("tensor is not over the given pair of systems".into()));
        }
        Ok(())
    }

    pub fn scale(&self, alpha: f64) -> TensorElement {
        TensorElement {
            a: self.a,
            b: self.b,
            coeffs: self.coeffs.iter().map(|r| geometry::scaled(r, alpha)).collect(),
        }
    }

    pub fn add(&self, other: &TensorElement) -> Result<TensorElement> {
        if self.systems() != other.systems() {
            return Err(GptError::TagMismatch("tensors over different systems".into()));
        }
        Ok(TensorElement {
            a: self.a,
            b: self.b,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| geometry::add(x, y)).collect(),
        })
    }

    /// `<f ⊗ g, t>`.
    pub fn pair(&self, f: &[f64], g: &[f64]) -> f64 {
        self.coeffs.iter().zip(f).map(|(row, fi)| fi * dot(row, g)).sum()
    }

    /// `(f ⊗ id)(t)`, an element of `V_B`.
    pub fn contract_left(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.coeffs.first().map_or(0, |r| r.len())];
        for (row, fi) in self.coeffs.iter().zip(f) {
            geometry::axpy(&mut out, *fi, row);
        }
        out
    }

    /// `(id ⊗ g)(t)`, an element of `V_A`.
    pub fn contract_right(&self, g: &[f64]) -> Vec<f64> {
        self.coeffs.iter().map(|row| dot(row, g)).collect()
    }

    pub fn max_abs_diff(&self, other: &TensorElement) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .fold(0.0f64, |m, (x, y)| m.max(geometry::dist_inf(x, y)))
    }
}

/// `(σ, y_1, ..., y_g)`: an element of `S_g ⊗max K` with `σ ± y_x ∈ V+`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DichotomicTensor {
    sigma: Vector,
    components: Vec<Vector>,
}

impl DichotomicTensor {
    pub fn new(system: &GptSystem, sigma: Vector, components: Vec<Vector>) -> Result<DichotomicTensor> {
        system.check_vector(&sigma)?;
        let s = sigma.coords();
        let scale = 1.0 + geometry::max_abs(s);
        if (dot(system.unit_coords(), s) - 1.0).abs() > EPS {
            return invalid("σ must be normalized: <1, σ> = 1");
        }
        if !system.in_cone(s, EPS * scale) {
            return invalid("σ must lie in the cone");
        }
        for (x, y) in components.iter().enumerate() {
            system.check_vector(y)?;
            let plus = geometry::add(s, y.coords());
            let minus = geometry::sub(s, y.coords());
            if !system.in_cone(&plus, EPS * scale) || !system.in_cone(&minus, EPS * scale) {
                return invalid(format!("component {x} violates σ ± y ∈ V+ (||y||_σ > 1)"));
            }
        }
        Ok(DichotomicTensor { sigma, components })
    }

    pub fn sigma(&self) -> &Vector {
        &self.sigma
    }

    pub fn components(&self) -> &[Vector] {
        &self.components
    }

    pub fn g(&self) -> usize {
        self.components.len()
    }

    /// The element `e_0 ⊗ σ + Σ_x e_x ⊗ y_x` of `V_{g+1} ⊗ V`, where the
    /// first factor carries the hypercube system `S_g`.
    pub fn embed(&self, hypercube: &GptSystem, system: &GptSystem) -> Result<TensorElement> {
        if hypercube.dim() != self.g() + 1 {
            return invalid("hypercube dimension must be g + 1");
        }
        let mut rows = vec![self.sigma.coords().to_vec()];
        rows.extend(self.components.iter().map(|y| y.coords().to_vec()));
        TensorElement::new(hypercube, system, rows)
    }
}

pub(crate) fn sign(e: usize, x: usize) -> f64 {
    if (e >> x) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Sign vectors `ε ∈ {±1}^g` in index order: bit `x` of the index set means
/// `ε_x = -1`.
pub fn sign_vectors(g: usize) -> Vec<Vec<i8>> {
    (0..1usize << g)
        .map(|e| (0..g).map(|x| sign(e, x) as i8).collect())
        .collect()
}

/// `max_x ||y_x||_σ`.
pub fn injective_norm_dichotomic(system: &GptSystem, t: &DichotomicTensor) -> Result<f64> {
    system.require_interior(&t.sigma, "σ")?;
    let mut best = 0.0f64;
    for y in &t.components {
        best = best.max(system.sigma_norm(y, &t.sigma)?);
    }
    Ok(best)
}

/// One term `ε ⊗ φ_ε` of an optimal steering decomposition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignedComponent {
    pub signs: Vec<i8>,
    pub phi: Vector,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteeringNorm {
    pub value: f64,
    /// `y_x = Σ_ε ε_x φ_ε` with `Σ_ε φ_ε <= value · σ`.
    pub decomposition: Vec<SignedComponent>,
    /// Optimal dual: `<w_0, σ> = 1`, `Σ_x ε_x w_x <= w_0`, and
    /// `<w_0, σ> + Σ_x <w_x, y_x> = 1 - value`.
    pub witness: Witness,
}

/// Steering norm `||y||_{steer,σ}`: the least `λ` with
/// `y_x = Σ_ε ε_x φ_ε`, `φ_ε ∈ V+`, `Σ_ε φ_ε <= λσ`.
pub fn steering_norm(system: &GptSystem, t: &DichotomicTensor) -> Result<SteeringNorm> {
    let ys: Vec<&[f64]> = t.components.iter().map(|y| y.coords()).collect();
    steering_norm_raw(system, &t.sigma, &ys)
}

pub(crate) fn steering_norm_raw(system: &GptSystem, sigma: &Vector, ys: &[&[f64]]) -> Result<SteeringNorm> {
    system.require_polytope()?;
    system.require_interior(sigma, "σ")?;
    let g = ys.len();
    guards::check("components", g, Guards::current().components)?;
    let d = system.dim();
    let verts = system.vertices();
    let m = verts.len();
    let ne = 1usize << g;
    let slack0 = ne * m;
    let lam = slack0 + m;
    let n = lam + 1;
    let mut p = LpProblem::new(n);
    p.set_objective(lam, 1.0);
    for (x, y) in ys.iter().enumerate() {
        for r in 0..d {
            let mut row = vec![0.0; n];
            for e in 0..ne {
                let s = sign(e, x);
                for (i, v) in verts.iter().enumerate() {
                    row[e * m + i] = s * v[r];
                }
            }
            p.add_eq(row, y[r]);
        }
    }
    for r in 0..d {
        let mut row = vec![0.0; n];
        for e in 0..=ne {
            for (i, v) in verts.iter().enumerate() {
                row[e * m + i] = v[r];
            }
        }
        row[lam] = -sigma.coords()[r];
        p.add_eq(row, 0.0);
    }
    let out = solve(&p)?;
    if out.status != LpStatus::Optimal {
        return Err(GptError::Numerical(format!("steering norm LP returned {:?}", out.status)));
    }
    let value = out.objective_value.max(0.0);
    let mut decomposition = Vec::new();
    for e in 0..ne {
        let mut phi = vec![0.0; d];
        for (i, v) in verts.iter().enumerate() {
            geometry::axpy(&mut phi, out.primal[e * m + i], v);
        }
        if geometry::max_abs(&phi) > 1e-12 {
            decomposition.push(SignedComponent {
                signs: (0..g).map(|x| sign(e, x) as i8).collect(),
                phi: system.vector(geometry::clean(phi))?,
            });
        }
    }
    let id = system.id();
    let u0: Vec<f64> = out.dual_equality[g * d..].to_vec();
    let w0: Vec<f64> = u0.iter().map(|v| -v).collect();
    let norm = dot(&w0, sigma.coords());
    let witness = if value <= 1e-12 || norm <= 1e-12 {
        Witness::zero(system, g)
    } else {
        Witness {
            w0: Functional::raw(id, geometry::scaled(&w0, 1.0 / norm)),
            components: (0..g)
                .map(|x| Functional::raw(id, geometry::scaled(&out.dual_equality[x * d..(x + 1) * d], -1.0 / norm)))
                .collect(),
            normalized: true,
        }
    };
    Ok(SteeringNorm { value, decomposition, witness })
}

/// Projective norm of `y` in `l_inf^g ⊗ (V, ||·||_σ)`:
/// `min Σ_ε t_ε` over `y_x = Σ_ε ε_x z_ε`, `||z_ε||_σ <= t_ε`.
///
/// Only one sign vector of each pair `±ε` is needed since
/// `(-ε) ⊗ z = ε ⊗ (-z)`.
pub fn sigma_projective_norm(system: &GptSystem, t: &DichotomicTensor) -> Result<f64> {
    system.require_polytope()?;
    system.require_interior(&t.sigma, "σ")?;
    let g = t.g();
    guards::check("components", g, Guards::current().components)?;
    if g == 0 {
        return Ok(0.0);
    }
    let d = system.dim();
    let ne = 1usize << (g - 1);
    let block = d + 1;
    let n = ne * block;
    let mut p = LpProblem::new(n);
    for e in 0..ne {
        for r in 0..d {
            p.set_free(e * block + r);
        }
        p.set_objective(e * block + d, 1.0);
    }
    for (x, y) in t.components.iter().enumerate() {
        for r in 0..d {
            let mut row = vec![0.0; n];
            for e in 0..ne {
                row[e * block + r] = sign(e, x);
            }
            p.add_eq(row, y.coords()[r]);
        }
    }
    for e in 0..ne {
        for f in system.facets() {
            let fs = dot(f, t.sigma.coords());
            for s in [1.0, -1.0] {
                let mut row = vec![0.0; n];
                for r in 0..d {
                    row[e * block + r] = s * f[r];
                }
                row[e * block + d] = -fs;
                p.add_le(row, 0.0);
            }
        }
    }
    let out = solve(&p)?;
    if out.status != LpStatus::Optimal {
        return Err(GptError::Numerical(format!("projective norm LP returned {:?}", out.status)));
    }
    Ok(out.objective_value)
}

/// Projective norm `π(A, B)` for the base norms of both factors:
/// `min Σ c_p` over `t = Σ_p c_p u_p ⊗ w_p`, `c >= 0`, with `u_p` ranging
/// over `±vertices(K_A)` and `w_p` over `vertices(K_B)`.
pub fn projective_norm(a: &GptSystem, b: &GptSystem, t: &TensorElement) -> Result<f64> {
    t.check(a, b)?;
    a.require_polytope()?;
    b.require_polytope()?;
    let (va, vb) = (a.vertices(), b.vertices());
    let (ma, mb) = (va.len(), vb.len());
    let n = 2 * ma * mb;
    let mut p = LpProblem::new(n).minimize(vec![1.0; n]);
    for r in 0..a.dim() {
        for c in 0..b.dim() {
            let mut row = vec![0.0; n];
            for i in 0..ma {
                for j in 0..mb {
                    let v = va[i][r] * vb[j][c];
                    row[i * mb + j] = v;
                    row[(ma + i) * mb + j] = -v;
                }
            }
            p.add_eq(row, t.coeffs[r][c]);
        }
    }
    let out = solve(&p)?;
    if out.status != LpStatus::Optimal {
        return Err(GptError::Numerical(format!("projective norm LP returned {:?}", out.status)));
    }
    Ok(out.objective_value)
}

/// Injective norm for the base norms of both factors: the maximum of
/// `<f ⊗ g, t>` over extreme points `2e - 1` of the dual unit balls.
pub fn injective_norm(a: &GptSystem, b: &GptSystem, t: &TensorElement) -> Result<f64> {
    t.check(a, b)?;
    let recenter = |sys: &GptSystem| -> Result<Vec<Vec<f64>>> {
        Ok(sys
            .extreme_effects()?
            .iter()
            .map(|e| geometry::sub(&geometry::scaled(e.coords(), 2.0), sys.unit_coords()))
            .collect())
    };
    let (fa, fb) = (recenter(a)?, recenter(b)?);
    let mut best = 0.0f64;
    for f in &fa {
        let row = t.contract_left(f);
        for g in &fb {
            best = best.max(dot(&row, g).abs());
        }
    }
    Ok(best)
}

/// `<f_A ⊗ f_B, t> >= -1e-9` for all pairs of extreme effects.
pub fn max_cone_member(a: &GptSystem, b: &GptSystem, t: &TensorElement) -> Result<bool> {
    t.check(a, b)?;
    let ea = a.extreme_effects()?;
    let eb = b.extreme_effects()?;
    Ok(ea
        .iter()
        .all(|f| eb.iter().all(|g| t.pair(f.coords(), g.coords()) >= -1e-9)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum MinConeMembership {
    /// `t = Σ c_ij v_i ⊗ w_j` with the listed `(i, j, c_ij)`.
    Separable { weights: Vec<(usize, usize, f64)> },
    /// `W` (as a `d_A × d_B` matrix) with `<W, v_i ⊗ w_j> >= 0` for all
    /// vertex pairs and `<W, t> < 0`.
    Entangled { witness: Vec<Vec<f64>> },
}

impl MinConeMembership {
    pub fn is_separable(&self) -> bool {
        matches!(self, MinConeMembership::Separable { .. })
    }
}

/// Separability: `t = Σ c_ij v_i ⊗ w_j` with `c >= 0`.
pub fn min_cone_member(a: &GptSystem, b: &GptSystem, t: &TensorElement) -> Result<MinConeMembership> {
    t.check(a, b)?;
    a.require_polytope()?;
    b.require_polytope()?;
    let (va, vb) = (a.vertices(), b.vertices());
    let (ma, mb) = (va.len(), vb.len());
    let n = ma * mb;
    let mut p = LpProblem::new(n);
    for r in 0..a.dim() {
        for c in 0..b.dim() {
            let mut row = vec![0.0; n];
            for i in 0..ma {
                for j in 0..mb {
                    row[i * mb + j] = va[i][r] * vb[j][c];
                }
            }
            p.add_eq(row, t.coeffs[r][c]);
        }
    }
    let out = solve(&p)?;
    match out.status {
        LpStatus::Optimal => {
            let weights = (0..n)
                .filter(|&k| out.primal[k] > 0.0)
                .map(|k| (k / mb, k % mb, out.primal[k]))
                .collect();
            Ok(MinConeMembership::Separable { weights })
        }
        LpStatus::Infeasible => {
            let db = b.dim();
            let witness = (0..a.dim())
                .map(|r| (0..db).map(|c| -out.dual_equality[r * db + c]).collect())
                .collect();
            Ok(MinConeMembership::Entangled { witness })
        }
        LpStatus::Unbounded => Err(GptError::Numerical("feasibility problem reported unbounded".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_tensor(ys: [[f64; 3]; 2]) -> (GptSystem, DichotomicTensor) {
        let sq = GptSystem::square();
        let comps = ys.iter().map(|y| sq.vector(y.to_vec()).unwrap()).collect();
        let t = DichotomicTensor::new(&sq, sq.center(), comps).unwrap();
        (sq, t)
    }

    #[test]
    fn injective_examples() {
        let (sq, t) = square_tensor([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        assert!((injective_norm_dichotomic(&sq, &t).unwrap() - 1.0).abs() < 1e-9);
        let (sq, t) = square_tensor([[0.0, 1.0, 1.0], [0.0, 1.0, -1.0]]);
        assert!((injective_norm_dichotomic(&sq, &t).unwrap() - 1.0).abs() < 1e-9);
        let (sq, t) = square_tensor([[0.0; 3], [0.0; 3]]);
        assert_eq!(injective_norm_dichotomic(&sq, &t).unwrap(), 0.0);
    }

    #[test]
    fn steering_norm_of_axis_pair_is_one() {
        let (sq, t) = square_tensor([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        let s = steering_norm(&sq, &t).unwrap();
        assert!((s.value - 1.0).abs() < 1e-9);
        // Reconstruct y from the decomposition.
        for (x, y) in t.components().iter().enumerate() {
            let mut acc = vec![0.0; 3];
            for c in &s.decomposition {
                geometry::axpy(&mut acc, c.signs[x] as f64, c.phi.coords());
            }
            assert!(geometry::dist_inf(&acc, y.coords()) < 1e-9);
        }
    }

    #[test]
    fn steering_norm_of_diagonal_pair_is_two() {
        let (sq, t) = square_tensor([[0.0, 1.0, 1.0], [0.0, 1.0, -1.0]]);
        let s = steering_norm(&sq, &t).unwrap();
        assert!((s.value - 2.0).abs() < 1e-9);
        let ys: Vec<&[f64]> = t.components().iter().map(|y| y.coords()).collect();
        let val = s.witness.value_raw(t.sigma().coords(), &ys);
        assert!((val - (1.0 - 2.0)).abs() < 1e-9);
        // The witness is one of ±(½(0,1,1), ½(0,1,-1)).
        let w1 = s.witness.components[0].coords().to_vec();
        let expect = [0.0, 0.5, 0.5];
        assert!(geometry::dist_inf(&w1, &expect) < 1e-9 || geometry::dist_inf(&w1, &[0.0, -0.5, -0.5]) < 1e-9);
    }

    #[test]
    fn zero_tensor_has_zero_norms() {
        let (sq, t) = square_tensor([[0.0; 3], [0.0; 3]]);
        assert_eq!(steering_norm(&sq, &t).unwrap().value, 0.0);
        assert!(sigma_projective_norm(&sq, &t).unwrap().abs() < 1e-12);
        let zero = TensorElement::new(&sq, &sq, vec![vec![0.0; 3]; 3]).unwrap();
        assert!(projective_norm(&sq, &sq, &zero).unwrap().abs() < 1e-12);
    }

    #[test]
    fn product_states() {
        let sq = GptSystem::square();
        let tri = GptSystem::simplex(3).unwrap();
        let t = TensorElement::product(&sq.vertex(1), &tri.barycenter());
        assert!((projective_norm(&sq, &tri, &t).unwrap() - 1.0).abs() < 1e-9);
        assert!(max_cone_member(&sq, &tri, &t).unwrap());
        assert!(min_cone_member(&sq, &tri, &t).unwrap().is_separable());
        let mut bad = t.coeffs().to_vec();
        bad[0][0] -= 2.0;
        let bad = TensorElement::new(&sq, &tri, bad).unwrap();
        assert!(!max_cone_member(&sq, &tri, &bad).unwrap());
    }

    #[test]
    fn embedded_diagonal_pair_is_entangled() {
        let (sq, t) = square_tensor([[0.0, 1.0, 1.0], [0.0, 1.0, -1.0]]);
        let cube = GptSystem::hypercube(2).unwrap();
        let xi = t.embed(&cube, &sq).unwrap();
        assert!(max_cone_member(&cube, &sq, &xi).unwrap());
        match min_cone_member(&cube, &sq, &xi).unwrap() {
            MinConeMembership::Entangled { witness } => {
                for u in cube.vertices() {
                    for w in sq.vertices() {
                        let v: f64 = (0..3).map(|r| u[r] * dot(&witness[r], w)).sum();
                        assert!(v >= -1e-9);
                    }
                }
                let on_xi: f64 = (0..3).map(|r| dot(&witness[r], &xi.coeffs()[r])).sum();
                assert!(on_xi < -1e-9);
            }
            other => panic!("{other:?}"),
        }
        assert!(projective_norm(&cube, &sq, &xi).unwrap() > 1.0 + 1e-6);
    }

    #[test]
    fn sign_vector_order() {
        assert_eq!(sign_vectors(2), vec![vec![1, 1], vec![-1, 1], vec![1, -1], vec![-1, -1]]);
    }
}
