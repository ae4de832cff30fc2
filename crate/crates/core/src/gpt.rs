//! Systems `(V, V+, 1)`, their states, effects and the four order norms.
//!
//! Coordinates are plain `R^d`. Vectors live in `V`, functionals in the dual
//! `A = V*`, and the pairing is the Euclidean dot product. A polytopic
//! system stores both descriptions of its cone: the vertices of the state
//! space `K` (which generate `V+`) and the facet functionals `F_k` with
//! `V+ = {v : <F_k, v> >= 0}`.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use gptsteer_lp::{solve, LpProblem, LpStatus};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, GptError, Result};
use crate::geometry::{self, dot, max_abs, norm2, EPS};
use crate::guards::{self, Guards};

/// Fingerprint of a system, used to tag vectors and functionals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemId(pub u64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    Polytopic,
    CentrallySymmetric,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BallNorm {
    L1,
    L2,
    Linf,
}

impl BallNorm {
    fn eval(self, x: &[f64]) -> f64 {
        match self {
            BallNorm::L1 => x.iter().map(|v| v.abs()).sum(),
            BallNorm::L2 => norm2(x),
            BallNorm::Linf => max_abs(x),
        }
    }

    fn dual(self) -> BallNorm {
        match self {
            BallNorm::L1 => BallNorm::Linf,
            BallNorm::L2 => BallNorm::L2,
            BallNorm::Linf => BallNorm::L1,
        }
    }
}

/// An element of `V`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vector {
    system: SystemId,
    coords: Vec<f64>,
}

/// An element of `A = V*`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Functional {
    system: SystemId,
    coords: Vec<f64>,
}

macro_rules! tagged_impl {
    ($t:ident) => {
        impl $t {
            pub fn system(&self) -> SystemId {
                self.system
            }

            pub fn coords(&self) -> &[f64] {
                &self.coords
            }

            pub fn into_coords(self) -> Vec<f64> {
                self.coords
            }

            pub fn dim(&self) -> usize {
                self.coords.len()
            }

            pub(crate) fn raw(system: SystemId, coords: Vec<f64>) -> Self {
                $t { system, coords }
            }

            fn same(&self, other: &$t) -> Result<()> {
                if self.system != other.system {
                    return Err(GptError::TagMismatch(format!(
                        "{:?} vs {:?}",
                        self.system, other.system
                    )));
                }
                Ok(())
            }

            pub fn add(&self, other: &$t) -> Result<$t> {
                self.same(other)?;
                Ok($t::raw(self.system, geometry::add(&self.coords, &other.coords)))
            }

            pub fn sub(&self, other: &$t) -> Result<$t> {
                self.same(other)?;
                Ok($t::raw(self.system, geometry::sub(&self.coords, &other.coords)))
            }

            pub fn scale(&self, alpha: f64) -> $t {
                $t::raw(self.system, geometry::scaled(&self.coords, alpha))
            }

            pub fn max_abs_diff(&self, other: &$t) -> f64 {
                geometry::dist_inf(&self.coords, &other.coords)
            }
        }
    };
}

tagged_impl!(Vector);
tagged_impl!(Functional);

impl Functional {
    /// The pairing `<f, v>`.
    pub fn pair(&self, v: &Vector) -> Result<f64> {
        if self.system != v.system {
            return Err(GptError::TagMismatch(format!("{:?} vs {:?}", self.system, v.system)));
        }
        Ok(dot(&self.coords, &v.coords))
    }
}

/// A linear map `V -> V` in coordinates (row-major).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearMap {
    pub matrix: Vec<Vec<f64>>,
}

impl LinearMap {
    pub fn identity(d: usize) -> Self {
        LinearMap {
            matrix: (0..d)
                .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.iter().map(|row| dot(row, x)).collect()
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &LinearMap) -> LinearMap {
        let d = self.matrix.len();
        LinearMap {
            matrix: (0..d)
                .map(|i| (0..d).map(|j| (0..d).map(|k| self.matrix[i][k] * other.matrix[k][j]).sum()).collect())
                .collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &LinearMap) -> f64 {
        self.matrix
            .iter()
            .zip(&other.matrix)
            .fold(0.0f64, |m, (a, b)| m.max(geometry::dist_inf(a, b)))
    }
}

/// Outcome of a cone membership test.
#[derive(Clone, Debug, PartialEq)]
pub enum ConeMembership {
    /// Nonnegative coefficients on the vertices reconstructing the vector.
    /// Empty for ball systems, where membership is decided analytically.
    Member { coefficients: Vec<f64> },
    /// A functional nonnegative on the cone and negative on the vector.
    NotMember { separator: Functional },
}

impl ConeMembership {
    pub fn is_member(&self) -> bool {
        matches!(self, ConeMembership::Member { .. })
    }
}

#[derive(Clone, Debug)]
pub struct GptSystem {
    id: SystemId,
    dim: usize,
    kind: SystemKind,
    ball: Option<BallNorm>,
    vertices: Vec<Vec<f64>>,
    facets: Vec<Vec<f64>>,
    unit: Vec<f64>,
}

impl PartialEq for GptSystem {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

fn fingerprint(dim: usize, kind: SystemKind, ball: Option<BallNorm>, vertices: &[Vec<f64>], unit: &[f64]) -> SystemId {
    let mut h = DefaultHasher::new();
    dim.hash(&mut h);
    (kind as u8).hash(&mut h);
    ball.map(|b| b as u8).hash(&mut h);
    for v in vertices {
        for x in v {
            (x + 0.0).to_bits().hash(&mut h);
        }
    }
    for x in unit {
        (x + 0.0).to_bits().hash(&mut h);
    }
    SystemId(h.finish())
}

fn check_finite(what: &str, x: &[f64]) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        invalid(format!("{what} has a non-finite entry"))
    }
}

impl GptSystem {
    /// Builds a polytopic system from the vertices of its state space and the
    /// unit functional. Every point must pair to 1 with the unit, the points
    /// must span `R^d`, and each must be extreme.
    pub fn from_vertices(vertices: Vec<Vec<f64>>, unit: Vec<f64>) -> Result<GptSystem> {
        let d = unit.len();
        let g = Guards::current();
        guards::check("dimension", d, g.dim)?;
        guards::check("vertex count", vertices.len(), g.vertices)?;
        Self::from_vertices_unguarded(vertices, unit)
    }

    fn from_vertices_unguarded(vertices: Vec<Vec<f64>>, unit: Vec<f64>) -> Result<GptSystem> {
        let d = unit.len();
        if d == 0 {
            return invalid("dimension must be positive");
        }
        check_finite("unit", &unit)?;
        for (i, v) in vertices.iter().enumerate() {
            if v.len() != d {
                return invalid(format!("vertex {i} has length {} but dim is {d}", v.len()));
            }
            check_finite(&format!("vertex {i}"), v)?;
            let u = dot(&unit, v);
            if (u - 1.0).abs() > EPS {
                return invalid(format!("vertex {i} pairs to {u} with the unit, expected 1"));
            }
        }
        if geometry::rank(&vertices, d) < d {
            return invalid("vertices do not span the space (cone is not generating)");
        }
        for i in 0..vertices.len() {
            let others: Vec<Vec<f64>> = vertices
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, v)| v.clone())
                .collect();
            if !others.is_empty() && conic_coefficients(&others, &vertices[i])?.is_some() {
                return invalid(format!("vertex {i} is not an extreme point"));
            }
        }
        let facets = if d == 1 {
            vec![vec![1.0f64.copysign(unit[0])]]
        } else {
            geometry::cone_facets(&vertices, d)?
        };
        let id = fingerprint(d, SystemKind::Polytopic, None, &vertices, &unit);
        Ok(GptSystem {
            id,
            dim: d,
            kind: SystemKind::Polytopic,
            ball: None,
            vertices,
            facets,
            unit,
        })
    }

    /// Classical system with `n` perfectly distinguishable states: vertices
    /// `e_i`, unit `(1, ..., 1)`.
    pub fn simplex(n: usize) -> Result<GptSystem> {
        if n == 0 {
            return invalid("simplex needs at least one vertex");
        }
        let vertices = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        GptSystem::from_vertices(vertices, vec![1.0; n])
    }

    /// State space `{(1, x) : ||x|| <= 1}` in `R^{n+1}`.
    pub fn centrally_symmetric(norm: BallNorm, n: usize) -> Result<GptSystem> {
        if n == 0 {
            return invalid("ball dimension must be positive");
        }
        let d = n + 1;
        let mut unit = vec![0.0; d];
        unit[0] = 1.0;
        let signs = |k: usize| -> Vec<Vec<f64>> {
            (0..1usize << k)
                .map(|mask| (0..k).map(|i| if mask >> (k - 1 - i) & 1 == 1 { -1.0 } else { 1.0 }).collect())
                .collect()
        };
        let (vertices, facets) = match norm {
            BallNorm::L2 => (Vec::new(), Vec::new()),
            BallNorm::Linf => {
                guards::check("vertex count", 1usize.checked_shl(n as u32).unwrap_or(usize::MAX), Guards::current().vertices)?;
                let verts = signs(n)
                    .into_iter()
                    .map(|eps| std::iter::once(1.0).chain(eps).collect())
                    .collect();
                let s = 1.0 / 2f64.sqrt();
                let mut facets = Vec::new();
                for i in 0..n {
                    for sign in [-1.0, 1.0] {
                        let mut f = vec![0.0; d];
                        f[0] = s;
                        f[i + 1] = sign * s;
                        facets.push(f);
                    }
                }
                (verts, facets)
            }
            BallNorm::L1 => {
                guards::check("vertex count", 2 * n, Guards::current().vertices)?;
                let mut verts = Vec::new();
                for i in 0..n {
                    for sign in [1.0, -1.0] {
                        let mut v = vec![0.0; d];
                        v[0] = 1.0;
                        v[i + 1] = sign;
                        verts.push(v);
                    }
                }
                let s = 1.0 / (d as f64).sqrt();
                let facets = signs(n)
                    .into_iter()
                    .map(|eps| std::iter::once(s).chain(eps.into_iter().map(|e| e * s)).collect())
                    .collect();
                (verts, facets)
            }
        };
        let id = fingerprint(d, SystemKind::CentrallySymmetric, Some(norm), &vertices, &unit);
        Ok(GptSystem {
            id,
            dim: d,
            kind: SystemKind::CentrallySymmetric,
            ball: Some(norm),
            vertices,
            facets,
            unit,
        })
    }

    /// The square: `l_inf` ball in the plane, vertices `(1, ±1, ±1)`.
    pub fn square() -> GptSystem {
        GptSystem::centrally_symmetric(BallNorm::Linf, 2).expect("square fits default guards")
    }

    /// The hypercube system `S_g` (`l_inf` ball in `R^g`).
    pub fn hypercube(g: usize) -> Result<GptSystem> {
        GptSystem::centrally_symmetric(BallNorm::Linf, g)
    }

    /// Bloch-ball model of the qubit: the Euclidean ball in `R^3`.
    pub fn qubit() -> GptSystem {
        GptSystem::centrally_symmetric(BallNorm::L2, 3).expect("ball construction cannot fail")
    }

    pub fn id(&self) -> SystemId {
        self.id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    pub fn ball_norm(&self) -> Option<BallNorm> {
        self.ball
    }

    /// Whether the state space is described by finitely many vertices.
    pub fn is_polytopic(&self) -> bool {
        !self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn facets(&self) -> &[Vec<f64>] {
        &self.facets
    }

    pub fn unit_coords(&self) -> &[f64] {
        &self.unit
    }

    pub fn unit(&self) -> Functional {
        Functional::raw(self.id, self.unit.clone())
    }

    pub fn vector(&self, coords: Vec<f64>) -> Result<Vector> {
        if coords.len() != self.dim {
            return invalid(format!("vector has length {} but dim is {}", coords.len(), self.dim));
        }
        check_finite("vector", &coords)?;
        Ok(Vector::raw(self.id, coords))
    }

    pub fn functional(&self, coords: Vec<f64>) -> Result<Functional> {
        if coords.len() != self.dim {
            return invalid(format!("functional has length {} but dim is {}", coords.len(), self.dim));
        }
        check_finite("functional", &coords)?;
        Ok(Functional::raw(self.id, coords))
    }

    pub fn zero_vector(&self) -> Vector {
        Vector::raw(self.id, vec![0.0; self.dim])
    }

    pub fn vertex(&self, i: usize) -> Vector {
        Vector::raw(self.id, self.vertices[i].clone())
    }

    /// `(1, 0, ..., 0)` for ball systems, the vertex average otherwise.
    pub fn center(&self) -> Vector {
        if self.kind == SystemKind::CentrallySymmetric {
            let mut c = vec![0.0; self.dim];
            c[0] = 1.0;
            return Vector::raw(self.id, c);
        }
        self.barycenter()
    }

    /// Uniform average of the vertices.
    pub fn barycenter(&self) -> Vector {
        let mut c = vec![0.0; self.dim];
        for v in &self.vertices {
            geometry::axpy(&mut c, 1.0 / self.vertices.len() as f64, v);
        }
        Vector::raw(self.id, c)
    }

    pub(crate) fn check_vector(&self, v: &Vector) -> Result<()> {
        if v.system != self.id {
            return Err(GptError::TagMismatch(format!("vector tagged {:?}, system is {:?}", v.system, self.id)));
        }
        Ok(())
    }

    pub(crate) fn check_functional(&self, f: &Functional) -> Result<()> {
        if f.system != self.id {
            return Err(GptError::TagMismatch(format!(
                "functional tagged {:?}, system is {:?}",
                f.system, self.id
            )));
        }
        Ok(())
    }

    pub(crate) fn require_polytope(&self) -> Result<()> {
        if self.is_polytopic() {
            Ok(())
        } else {
            Err(GptError::NotPolytopic)
        }
    }

    fn l2_center_only(&self, sigma: &Vector) -> Result<()> {
        if geometry::dist_inf(sigma.coords(), self.center().coords()) > EPS {
            return invalid("ball systems support the order norms only at the center");
        }
        Ok(())
    }

    /// `sigma` is interior iff `<F_k, sigma> >= 1e-9 * scale` for every facet.
    pub fn is_interior(&self, sigma: &Vector) -> bool {
        if sigma.system != self.id {
            return false;
        }
        let x = sigma.coords();
        if let Some(BallNorm::L2) = self.ball {
            return x[0] - norm2(&x[1..]) >= EPS * (1.0 + x[0].abs());
        }
        let scale = 1.0 + max_abs(x);
        self.facets.iter().all(|f| dot(f, x) >= EPS * scale)
    }

    pub(crate) fn require_interior(&self, sigma: &Vector, what: &str) -> Result<()> {
        self.check_vector(sigma)?;
        if self.is_interior(sigma) {
            Ok(())
        } else {
            Err(GptError::NotInterior { what: what.to_string() })
        }
    }

    /// Decides `v ∈ V+`: an LP over vertex coefficients for polytopes, the
    /// defining inequality for ball systems.
    pub fn cone_member(&self, v: &Vector) -> Result<ConeMembership> {
        self.check_vector(v)?;
        let x = v.coords();
        if self.ball == Some(BallNorm::L2) {
            let r = norm2(&x[1..]);
            if r <= x[0] + EPS * (1.0 + x[0].abs()) {
                return Ok(ConeMembership::Member { coefficients: Vec::new() });
            }
            let mut f = vec![0.0; self.dim];
            f[0] = 1.0;
            if r > 0.0 {
                for i in 1..self.dim {
                    f[i] = -x[i] / r;
                }
            }
            return Ok(ConeMembership::NotMember { separator: Functional::raw(self.id, f) });
        }
        let mut p = LpProblem::new(self.vertices.len());
        for r in 0..self.dim {
            p.add_eq(self.vertices.iter().map(|v| v[r]).collect(), x[r]);
        }
        let out = solve(&p)?;
        match out.status {
            LpStatus::Optimal => Ok(ConeMembership::Member { coefficients: out.primal }),
            LpStatus::Infeasible => {
                let sep: Vec<f64> = out.dual_equality.iter().map(|y| -y).collect();
                Ok(ConeMembership::NotMember { separator: Functional::raw(self.id, sep) })
            }
            LpStatus::Unbounded => Err(GptError::Numerical("feasibility problem reported unbounded".into())),
        }
    }

    /// Membership test through the facet inequalities (no LP).
    pub fn in_cone(&self, v: &[f64], tol: f64) -> bool {
        if self.ball == Some(BallNorm::L2) {
            return norm2(&v[1..]) <= v[0] + tol;
        }
        self.facets.iter().all(|f| dot(f, v) >= -tol)
    }

    /// `v ∈ K`: in the cone and normalized.
    pub fn is_state(&self, v: &Vector, tol: f64) -> bool {
        v.system == self.id && self.in_cone(v.coords(), tol) && (dot(&self.unit, v.coords()) - 1.0).abs() <= tol
    }

    /// Whether `0 <= f <= 1` holds on the state space.
    pub fn is_effect(&self, f: &Functional, tol: f64) -> bool {
        if f.system != self.id {
            return false;
        }
        let c = f.coords();
        if self.ball == Some(BallNorm::L2) {
            let r = norm2(&c[1..]);
            return c[0] - r >= -tol && c[0] + r <= 1.0 + tol;
        }
        self.vertices.iter().all(|v| {
            let p = dot(c, v);
            p >= -tol && p <= 1.0 + tol
        })
    }

    /// Base norm `min <1, v+ + v->` over `v = v+ - v-` with `v± ∈ V+`.
    pub fn base_norm(&self, v: &Vector) -> Result<f64> {
        self.check_vector(v)?;
        if let Some(BallNorm::L2) = self.ball {
            return Ok(self.cs_base_norm(v.coords()));
        }
        let m = self.vertices.len();
        let mut p = LpProblem::new(2 * m);
        for (i, vert) in self.vertices.iter().enumerate() {
            let u = dot(&self.unit, vert);
            p.set_objective(i, u);
            p.set_objective(m + i, u);
        }
        for r in 0..self.dim {
            let row = (0..2 * m)
                .map(|j| if j < m { self.vertices[j][r] } else { -self.vertices[j - m][r] })
                .collect();
            p.add_eq(row, v.coords()[r]);
        }
        let out = solve(&p)?;
        if !out.is_optimal() {
            return Err(GptError::Numerical(format!("base norm LP returned {:?}", out.status)));
        }
        Ok(out.objective_value)
    }

    /// Analytic base norm `max(|s|, ||x||)` of a ball system.
    pub fn cs_base_norm(&self, v: &[f64]) -> f64 {
        let norm = self.ball.expect("ball system");
        v[0].abs().max(norm.eval(&v[1..]))
    }

    /// Analytic order unit norm `|t| + ||phi||_*` of a ball system.
    pub fn cs_order_unit_norm(&self, f: &[f64]) -> f64 {
        let norm = self.ball.expect("ball system");
        f[0].abs() + norm.dual().eval(&f[1..])
    }

    /// Analytic `||y||_σ` at the center: `|s| + ||x||`.
    pub fn cs_sigma_norm_at_center(&self, y: &[f64]) -> f64 {
        let norm = self.ball.expect("ball system");
        y[0].abs() + norm.eval(&y[1..])
    }

    /// Analytic `||h||^σ` at the center: `max(|t|, ||phi||_*)`.
    pub fn cs_sigma_base_norm_at_center(&self, h: &[f64]) -> f64 {
        let norm = self.ball.expect("ball system");
        h[0].abs().max(norm.dual().eval(&h[1..]))
    }

    /// Order unit norm of `f` in `A` with respect to the interior functional
    /// `unit`: `min {λ : λ·unit ± f ∈ A+}` = `max_i |<f, v_i>| / <unit, v_i>`.
    pub fn order_unit_norm(&self, f: &Functional, unit: &Functional) -> Result<f64> {
        self.check_functional(f)?;
        self.check_functional(unit)?;
        if self.ball == Some(BallNorm::L2) {
            if geometry::dist_inf(unit.coords(), &self.unit) > EPS {
                return invalid("ball systems support the order unit norm only for the unit functional");
            }
            return Ok(self.cs_order_unit_norm(f.coords()));
        }
        let scale = 1.0 + max_abs(unit.coords());
        let mut best = 0.0f64;
        for v in &self.vertices {
            let u = dot(unit.coords(), v);
            if u < EPS * scale {
                return Err(GptError::NotInterior { what: "order unit".into() });
            }
            best = best.max(dot(f.coords(), v).abs() / u);
        }
        Ok(best)
    }

    /// The same quantity as [`GptSystem::order_unit_norm`] computed by an LP
    /// in the variable `λ`.
    pub fn order_unit_norm_lp(&self, f: &Functional, unit: &Functional) -> Result<f64> {
        self.check_functional(f)?;
        self.check_functional(unit)?;
        self.require_polytope()?;
        let mut p = LpProblem::new(1).minimize(vec![1.0]);
        for v in &self.vertices {
            let u = dot(unit.coords(), v);
            let fv = dot(f.coords(), v);
            // λ u ± f(v) >= 0
            p.add_ge(vec![u], -fv);
            p.add_ge(vec![u], fv);
        }
        let out = solve(&p)?;
        match out.status {
            LpStatus::Optimal => Ok(out.objective_value),
            _ => Err(GptError::NotInterior { what: "order unit".into() }),
        }
    }

    /// Order unit norm `||y||_σ = min {λ : λσ ± y ∈ V+}` on `V`, evaluated as
    /// `max_k |<F_k, y>| / <F_k, σ>`.
    pub fn sigma_norm(&self, y: &Vector, sigma: &Vector) -> Result<f64> {
        self.check_vector(y)?;
        self.require_interior(sigma, "σ")?;
        if self.ball == Some(BallNorm::L2) {
            self.l2_center_only(sigma)?;
            return Ok(self.cs_sigma_norm_at_center(y.coords()));
        }
        Ok(self.sigma_norm_raw(y.coords(), sigma.coords()))
    }

    pub(crate) fn sigma_norm_raw(&self, y: &[f64], sigma: &[f64]) -> f64 {
        self.facets
            .iter()
            .fold(0.0f64, |m, f| m.max(dot(f, y).abs() / dot(f, sigma)))
    }

    /// `||y||_σ` by an LP over vertex coefficients: `λσ + y = Φa`,
    /// `λσ - y = Φb`, `a, b >= 0`.
    pub fn sigma_norm_lp(&self, y: &Vector, sigma: &Vector) -> Result<f64> {
        self.check_vector(y)?;
        self.require_interior(sigma, "σ")?;
        self.require_polytope()?;
        let m = self.vertices.len();
        let n = 2 * m + 1;
        let mut p = LpProblem::new(n);
        p.set_objective(2 * m, 1.0);
        for r in 0..self.dim {
            let s = sigma.coords()[r];
            let mut plus = vec![0.0; n];
            let mut minus = vec![0.0; n];
            for (i, v) in self.vertices.iter().enumerate() {
                plus[i] = v[r];
                minus[m + i] = v[r];
            }
            plus[2 * m] = -s;
            minus[2 * m] = -s;
            p.add_eq(plus, y.coords()[r]);
            p.add_eq(minus, -y.coords()[r]);
        }
        let out = solve(&p)?;
        if !out.is_optimal() {
            return Err(GptError::Numerical(format!("order norm LP returned {:?}", out.status)));
        }
        Ok(out.objective_value)
    }

    /// `||h||^σ = max {<h, y> : -σ <= y <= σ}`, with a maximizer.
    pub fn sigma_base_norm(&self, h: &Functional, sigma: &Vector) -> Result<(f64, Vector)> {
        self.check_functional(h)?;
        self.require_interior(sigma, "σ")?;
        if self.ball == Some(BallNorm::L2) {
            self.l2_center_only(sigma)?;
            let c = h.coords();
            let r = norm2(&c[1..]);
            let mut y = vec![0.0; self.dim];
            if c[0].abs() >= r {
                y[0] = if c[0] >= 0.0 { 1.0 } else { -1.0 };
            } else {
                for i in 1..self.dim {
                    y[i] = c[i] / r;
                }
            }
            return Ok((c[0].abs().max(r), Vector::raw(self.id, y)));
        }
        let d = self.dim;
        let mut p = LpProblem::new(d).minimize(h.coords().iter().map(|c| -c).collect());
        for j in 0..d {
            p.set_free(j);
        }
        for f in &self.facets {
            let s = dot(f, sigma.coords());
            p.add_le(f.clone(), s);
            p.add_le(f.iter().map(|c| -c).collect(), s);
        }
        let out = solve(&p)?;
        if !out.is_optimal() {
            return Err(GptError::Numerical(format!("dual order norm LP returned {:?}", out.status)));
        }
        Ok((-out.objective_value, Vector::raw(self.id, geometry::clean(out.primal))))
    }

    /// Vertices of the effect polytope `{f : 0 <= <f, v_i> <= 1}`.
    pub fn extreme_effects(&self) -> Result<Vec<Functional>> {
        self.require_polytope()?;
        guards::check("dimension", self.dim, Guards::current().dim)?;
        let mut hs = Vec::with_capacity(2 * self.vertices.len());
        for v in &self.vertices {
            hs.push((v.iter().map(|c| -c).collect(), 0.0));
            hs.push((v.clone(), 1.0));
        }
        let pts = geometry::polytope_vertices(&hs, &[], self.dim)?;
        Ok(pts.into_iter().map(|p| Functional::raw(self.id, p)).collect())
    }

    /// All linear maps permuting the vertices and fixing `fix`.
    ///
    /// A basis of `d` vertices is sent to every ordered `d`-tuple of vertices;
    /// each resulting matrix is kept when it permutes the vertex set and fixes
    /// `fix`. Group closure is checked before returning.
    pub fn symmetries(&self, fix: &Vector) -> Result<Vec<LinearMap>> {
        self.check_vector(fix)?;
        self.require_polytope()?;
        let m = self.vertices.len();
        let d = self.dim;
        let mut count: usize = 1;
        for i in 0..d {
            count = count.saturating_mul(m.saturating_sub(i));
        }
        guards::check("candidate vertex maps", count, Guards::current().permutations)?;
        let mut basis: Vec<usize> = Vec::new();
        for i in 0..m {
            let mut trial: Vec<Vec<f64>> = basis.iter().map(|&b| self.vertices[b].clone()).collect();
            trial.push(self.vertices[i].clone());
            if geometry::rank(&trial, d) == trial.len() {
                basis.push(i);
                if basis.len() == d {
                    break;
                }
            }
        }
        // Columns of bmat are the basis vertices; maps are Img · bmat^{-1}.
        let bmat = nalgebra::DMatrix::from_fn(d, d, |r, c| self.vertices[basis[c]][r]);
        let binv = bmat
            .try_inverse()
            .ok_or_else(|| GptError::Numerical("vertex basis is singular".into()))?;
        let mut maps: Vec<LinearMap> = Vec::new();
        let mut images: Vec<usize> = Vec::with_capacity(d);
        let mut used = vec![false; m];
        self.symmetry_search(&binv, &mut images, &mut used, fix.coords(), &mut maps);
        for a in &maps {
            for b in &maps {
                let c = a.compose(b);
                if !maps.iter().any(|x| x.max_abs_diff(&c) <= 1e-8) {
                    return Err(GptError::Numerical("symmetry search did not produce a group".into()));
                }
            }
        }
        Ok(maps)
    }

    fn symmetry_search(
        &self,
        binv: &nalgebra::DMatrix<f64>,
        images: &mut Vec<usize>,
        used: &mut [bool],
        fix: &[f64],
        out: &mut Vec<LinearMap>,
    ) {
        let d = self.dim;
        if images.len() == d {
            let img = nalgebra::DMatrix::from_fn(d, d, |r, c| self.vertices[images[c]][r]);
            let mat = img * binv;
            let map = LinearMap {
                matrix: (0..d).map(|r| geometry::clean((0..d).map(|c| mat[(r, c)]).collect())).collect(),
            };
            if self.permutation_of(&map).is_some() && geometry::dist_inf(&map.apply(fix), fix) <= 1e-8 {
                out.push(map);
            }
            return;
        }
        for j in 0..self.vertices.len() {
            if used[j] {
                continue;
            }
            used[j] = true;
            images.push(j);
            self.symmetry_search(binv, images, used, fix, out);
            images.pop();
            used[j] = false;
        }
    }

    /// The vertex permutation induced by `map`, if it is one.
    pub fn permutation_of(&self, map: &LinearMap) -> Option<Vec<usize>> {
        let mut perm = Vec::with_capacity(self.vertices.len());
        let mut hit = vec![false; self.vertices.len()];
        for v in &self.vertices {
            let w = map.apply(v);
            let j = self.vertices.iter().position(|u| geometry::dist_inf(u, &w) <= 1e-8)?;
            if hit[j] {
                return None;
            }
            hit[j] = true;
            perm.push(j);
        }
        Some(perm)
    }

    /// The system `(A, A+, σ)`: vertices `F_k / <F_k, σ>`, unit `σ`.
    pub fn dual_system(&self, sigma: &Vector) -> Result<GptSystem> {
        self.require_polytope()?;
        self.require_interior(sigma, "σ")?;
        let verts = self
            .facets
            .iter()
            .map(|f| geometry::scaled(f, 1.0 / dot(f, sigma.coords())))
            .collect();
        GptSystem::from_vertices(verts, sigma.coords().to_vec())
    }

    /// Re-checks the structural invariants; reports the first violation.
    pub fn validate(&self) -> Result<()> {
        if !self.is_polytopic() {
            return Ok(());
        }
        let d = self.dim;
        for (i, v) in self.vertices.iter().enumerate() {
            if (dot(&self.unit, v) - 1.0).abs() > EPS {
                return invalid(format!("vertex {i} does not pair to 1 with the unit"));
            }
        }
        if geometry::rank(&self.vertices, d) < d {
            return invalid("vertices do not span the space");
        }
        for (k, f) in self.facets.iter().enumerate() {
            let tight: Vec<Vec<f64>> = self
                .vertices
                .iter()
                .filter(|v| {
                    let p = dot(f, v);
                    if p < -EPS {
                        return false;
                    }
                    p <= EPS
                })
                .cloned()
                .collect();
            if self.vertices.iter().any(|v| dot(f, v) < -EPS) {
                return invalid(format!("facet {k} is negative on a vertex"));
            }
            if geometry::rank(&tight, d) != d - 1 {
                return invalid(format!("facet {k} is not supported by a (d-1)-dimensional face"));
            }
        }
        for (i, v) in self.vertices.iter().enumerate() {
            let tight: Vec<Vec<f64>> = self.facets.iter().filter(|f| dot(f, v).abs() <= EPS).cloned().collect();
            if geometry::rank(&tight, d) != d - 1 && d > 1 {
                return invalid(format!("vertex {i} is not a vertex of the facet description"));
            }
        }
        Ok(())
    }

    /// Builds a polytope from the cone facet functionals `F_k` (with
    /// `<F_k, v> >= 0` on `V+`) and the unit, enumerating its vertices.
    pub fn from_facets(facets: Vec<Vec<f64>>, unit: Vec<f64>) -> Result<GptSystem> {
        let d = unit.len();
        guards::check("dimension", d, Guards::current().dim)?;
        let hs: Vec<(Vec<f64>, f64)> = facets.iter().map(|f| (f.iter().map(|c| -c).collect(), 0.0)).collect();
        let verts = geometry::polytope_vertices(&hs, &[(unit.clone(), 1.0)], d)?;
        guards::check("vertex count", verts.len(), Guards::current().vertices)?;
        GptSystem::from_vertices(verts, unit)
    }

    /// Serializable description of this system.
    pub fn to_spec(&self) -> SystemSpec {
        match self.kind {
            SystemKind::Polytopic => SystemSpec {
                dim: self.dim,
                kind: SystemKind::Polytopic,
                vertices: Some(self.vertices.clone()),
                ball_norm: None,
                unit: Some(self.unit.clone()),
            },
            SystemKind::CentrallySymmetric => SystemSpec {
                dim: self.dim,
                kind: SystemKind::CentrallySymmetric,
                vertices: None,
                ball_norm: self.ball,
                unit: Some(self.unit.clone()),
            },
        }
    }
}

/// Feasibility of `sum_i c_i gens_i = target`, `c >= 0`.
pub(crate) fn conic_coefficients(gens: &[Vec<f64>], target: &[f64]) -> Result<Option<Vec<f64>>> {
    let mut p = LpProblem::new(gens.len());
    for r in 0..target.len() {
        p.add_eq(gens.iter().map(|g| g[r]).collect(), target[r]);
    }
    let out = solve(&p)?;
    Ok(if out.is_optimal() { Some(out.primal) } else { None })
}

/// JSON description of a system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub dim: usize,
    pub kind: SystemKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ball_norm: Option<BallNorm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<Vec<f64>>,
}

impl SystemSpec {
    pub fn build(&self) -> Result<GptSystem> {
        match self.kind {
            SystemKind::Polytopic => {
                let Some(vertices) = self.vertices.clone() else {
                    return invalid("polytopic system needs `vertices`");
                };
                if self.ball_norm.is_some() {
                    return invalid("polytopic system must not set `ball_norm`");
                }
                let Some(unit) = self.unit.clone() else {
                    return invalid("polytopic system needs `unit`");
                };
                if unit.len() != self.dim {
                    return invalid(format!("unit has length {} but dim is {}", unit.len(), self.dim));
                }
                let sys = GptSystem::from_vertices(vertices, unit)?;
                sys.validate()?;
                Ok(sys)
            }
            SystemKind::CentrallySymmetric => {
                let Some(norm) = self.ball_norm else {
                    return invalid("centrally symmetric system needs `ball_norm`");
                };
                if self.vertices.is_some() {
                    return invalid("centrally symmetric system is described by `ball_norm`, not `vertices`");
                }
                if self.dim < 2 {
                    return invalid("centrally symmetric system needs dim >= 2");
                }
                let sys = GptSystem::centrally_symmetric(norm, self.dim - 1)?;
                if let Some(unit) = &self.unit {
                    if unit.len() != self.dim || geometry::dist_inf(unit, sys.unit_coords()) > EPS {
                        return invalid("centrally symmetric system has unit (1, 0, ..., 0)");
                    }
                }
                Ok(sys)
            }
        }
    }
}

/// A measurement: effects summing to the unit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub effects: Vec<Functional>,
    pub labels: Vec<String>,
}

impl Measurement {
    pub fn new(system: &GptSystem, effects: Vec<Functional>) -> Result<Measurement> {
        if effects.is_empty() {
            return invalid("measurement needs at least one effect");
        }
        let mut total = vec![0.0; system.dim()];
        for (a, f) in effects.iter().enumerate() {
            system.check_functional(f)?;
            if !system.is_effect(f, 1e-9) {
                return invalid(format!("outcome {a} is not an effect (0 <= f <= 1 fails)"));
            }
            geometry::axpy(&mut total, 1.0, f.coords());
        }
        if geometry::dist_inf(&total, system.unit_coords()) > 1e-9 {
            return invalid("effects do not sum to the unit");
        }
        let labels = (0..effects.len()).map(|a| a.to_string()).collect();
        Ok(Measurement { effects, labels })
    }

    /// The two-outcome measurement `(f, 1 - f)`, labelled `+` and `-`.
    pub fn dichotomic(system: &GptSystem, f: Functional) -> Result<Measurement> {
        let rest = system.unit().sub(&f)?;
        let mut m = Measurement::new(system, vec![f, rest])?;
        m.labels = vec!["+".into(), "-".into()];
        Ok(m)
    }

    pub fn outcomes(&self) -> usize {
        self.effects.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9
    }

    #[test]
    fn square_membership() {
        let sq = GptSystem::square();
        let c = sq.vector(vec![1.0, 0.0, 0.0]).unwrap();
        match sq.cone_member(&c).unwrap() {
            ConeMembership::Member { coefficients } => {
                let mut recon = vec![0.0; 3];
                for (ci, v) in coefficients.iter().zip(sq.vertices()) {
                    geometry::axpy(&mut recon, *ci, v);
                }
                assert!(geometry::dist_inf(&recon, &[1.0, 0.0, 0.0]) < 1e-9);
            }
            other => panic!("{other:?}"),
        }
        let bad = sq.vector(vec![0.0, 1.0, 0.0]).unwrap();
        match sq.cone_member(&bad).unwrap() {
            ConeMembership::NotMember { separator } => {
                for v in sq.vertices() {
                    assert!(dot(separator.coords(), v) >= -1e-9);
                }
                assert!(separator.pair(&bad).unwrap() < -1e-9);
            }
            other => panic!("{other:?}"),
        }
        assert!(sq.cone_member(&sq.zero_vector()).unwrap().is_member());
    }

    #[test]
    fn base_norm_examples() {
        let d3 = GptSystem::simplex(3).unwrap();
        assert!(close(d3.base_norm(&d3.vector(vec![0.7, -0.3, 0.0]).unwrap()).unwrap(), 1.0));
        let sq = GptSystem::square();
        assert!(close(sq.base_norm(&sq.vector(vec![0.4, 0.9, 0.1]).unwrap()).unwrap(), 0.9));
        for i in 0..4 {
            assert!(close(sq.base_norm(&sq.vertex(i)).unwrap(), 1.0));
        }
    }

    #[test]
    fn order_unit_norm_examples() {
        let sq = GptSystem::square();
        let sigma = sq.center();
        let y = sq.vector(vec![0.0, 0.5, -0.8]).unwrap();
        assert!(close(sq.sigma_norm(&y, &sigma).unwrap(), 0.8));
        assert!(close(sq.sigma_norm_lp(&y, &sigma).unwrap(), 0.8));
        let one = sq.unit();
        assert!(close(sq.order_unit_norm(&one, &one).unwrap(), 1.0));
        let f = sq.functional(vec![0.2, 0.5, -0.8]).unwrap();
        assert!(close(sq.order_unit_norm(&f, &one).unwrap(), 1.5));
        assert!(close(sq.order_unit_norm_lp(&f, &one).unwrap(), 1.5));
        let y2 = sq.vector(vec![0.2, 0.5, -0.8]).unwrap();
        assert!(close(sq.sigma_norm(&y2, &sigma).unwrap(), 1.0));
        assert!(close(sq.sigma_norm_lp(&y2, &sigma).unwrap(), 1.0));
    }

    #[test]
    fn sigma_base_norm_examples() {
        let sq = GptSystem::square();
        let sigma = sq.center();
        for (h, expect) in [(vec![0.0, 0.5, 0.5], 1.0), (vec![0.5, 0.5, 0.0], 0.5), (vec![1.0, 0.0, 0.0], 1.0)] {
            let h = sq.functional(h).unwrap();
            let (v, y) = sq.sigma_base_norm(&h, &sigma).unwrap();
            assert!(close(v, expect));
            assert!(close(h.pair(&y).unwrap(), v));
            assert!(sq.sigma_norm(&y, &sigma).unwrap() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn extreme_effects_of_small_systems() {
        let bit = GptSystem::simplex(2).unwrap();
        let e = bit.extreme_effects().unwrap();
        assert_eq!(e.len(), 4);
        for p in [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]] {
            assert!(e.iter().any(|f| geometry::dist_inf(f.coords(), &p) < 1e-12));
        }
        let sq = GptSystem::square();
        let e = sq.extreme_effects().unwrap();
        assert!(e.iter().any(|f| max_abs(f.coords()) < 1e-12));
        assert!(e.iter().any(|f| geometry::dist_inf(f.coords(), &[1.0, 0.0, 0.0]) < 1e-12));
    }

    #[test]
    fn symmetry_groups() {
        let sq = GptSystem::square();
        assert_eq!(sq.symmetries(&sq.center()).unwrap().len(), 8);
        let bit = GptSystem::simplex(2).unwrap();
        assert_eq!(bit.symmetries(&bit.barycenter()).unwrap().len(), 2);
        let v0 = sq.vertex(0);
        let stab = sq.symmetries(&v0).unwrap();
        assert_eq!(stab.len(), 2);
        for m in &stab {
            assert!(geometry::dist_inf(&m.apply(v0.coords()), v0.coords()) < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(GptSystem::from_vertices(vec![vec![1.0, 0.0], vec![0.5, 0.5], vec![0.0, 1.0]], vec![1.0, 1.0]).is_err());
        assert!(GptSystem::from_vertices(vec![vec![2.0, 0.0], vec![0.0, 1.0]], vec![1.0, 1.0]).is_err());
        assert!(GptSystem::from_vertices(vec![vec![1.0, 0.0, 0.0]], vec![1.0, 0.0, 0.0]).is_err());
        let sq = GptSystem::square();
        let bit = GptSystem::simplex(2).unwrap();
        let v = bit.vector(vec![1.0, 0.0]).unwrap();
        assert!(matches!(sq.base_norm(&v), Err(GptError::TagMismatch(_))));
        let edge = sq.vector(vec![1.0, 1.0, 0.0]).unwrap();
        assert!(matches!(sq.sigma_norm(&v, &edge), Err(GptError::TagMismatch(_))));
        assert!(matches!(
            sq.sigma_norm(&sq.center(), &edge),
            Err(GptError::NotInterior { .. })
        ));
    }

    #[test]
    fn spec_round_trip() {
        let sq = GptSystem::square();
        let spec = sq.to_spec();
        let json = serde_json::to_string(&spec).unwrap();
        let back: SystemSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back.build().unwrap().id(), sq.id());
        let tri: SystemSpec = serde_json::from_str(
            r#"{"dim":3,"kind":"polytopic","vertices":[[1,0,0],[0,1,0],[0,0,1]],"unit":[1,1,1]}"#,
        )
        .unwrap();
        assert_eq!(tri.build().unwrap().facets().len(), 3);
        let bad: SystemSpec =
            serde_json::from_str(r#"{"dim":2,"kind":"polytopic","vertices":[[1,0],[0,2]],"unit":[1,1]}"#).unwrap();
        assert!(bad.build().is_err());
    }

    #[test]
    fn dual_system_of_square() {
        let sq = GptSystem::square();
        let dual = sq.dual_system(&sq.center()).unwrap();
        assert_eq!(dual.vertices().len(), 4);
        assert!(close(dot(dual.unit_coords(), &[1.0, 0.0, 0.0]), 1.0));
        let one = dual.vector(sq.unit_coords().to_vec()).unwrap();
        assert!(dual.is_interior(&one));
    }

    #[test]
    fn measurements_validate() {
        let sq = GptSystem::square();
        let f = sq.functional(vec![0.5, 0.5, 0.0]).unwrap();
        let m = Measurement::dichotomic(&sq, f).unwrap();
        assert_eq!(m.outcomes(), 2);
        let too_big = sq.functional(vec![0.5, 0.5, 0.5]).unwrap();
        assert!(Measurement::dichotomic(&sq, too_big).is_err());
    }
}
