//! Assemblages, LHS certification, steering robustness and witnesses.

use gptsteer_lp::{solve, LpProblem, LpStatus};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, GptError, Result};
use crate::geometry::{self, dot, EPS};
use crate::gpt::{Functional, GptSystem, Measurement, SystemId, Vector};
use crate::guards::{self, Guards};
use crate::sampling;
use crate::tensor::{self, sign, DichotomicTensor};

/// Tolerance on `Σ_a ρ_{a|x} = σ`.
pub const MARGINAL_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assemblage {
    sigma: Vector,
    entries: Vec<Vec<Vector>>,
}

impl Assemblage {
    pub fn new(system: &GptSystem, sigma: Vector, entries: Vec<Vec<Vector>>) -> Result<Assemblage> {
        system.check_vector(&sigma)?;
        let s = sigma.coords();
        if (dot(system.unit_coords(), s) - 1.0).abs() > EPS {
            return invalid("barycenter must be normalized: <1, σ> = 1");
        }
        if entries.is_empty() {
            return invalid("assemblage needs at least one setting");
        }
        let scale = 1.0 + geometry::max_abs(s);
        for (x, row) in entries.iter().enumerate() {
            if row.is_empty() {
                return invalid(format!("setting {x} has no outcomes"));
            }
            let mut total = vec![0.0; system.dim()];
            for (a, rho) in row.iter().enumerate() {
                system.check_vector(rho)?;
                if !system.in_cone(rho.coords(), EPS * scale) {
                    return invalid(format!("entry ({a}|{x}) is not in the cone"));
                }
                geometry::axpy(&mut total, 1.0, rho.coords());
            }
            if geometry::dist_inf(&total, s) > MARGINAL_TOL * scale {
                return invalid(format!("entries of setting {x} do not sum to the barycenter"));
            }
        }
        Ok(Assemblage { sigma, entries })
    }

    /// `ρ_{±|x} = ½(σ ± y_x)`.
    pub fn from_dichotomic(system: &GptSystem, t: &DichotomicTensor) -> Result<Assemblage> {
        let s = t.sigma().coords();
        let entries = t
            .components()
            .iter()
            .map(|y| {
                vec![
                    system.vector(geometry::scaled(&geometry::add(s, y.coords()), 0.5)),
                    system.vector(geometry::scaled(&geometry::sub(s, y.coords()), 0.5)),
                ]
                .into_iter()
                .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Assemblage::new(system, t.sigma().clone(), entries)
    }

    /// `ρ_{a|x} = σ / k_x`.
    pub fn trivial(system: &GptSystem, sigma: Vector, shape: &[usize]) -> Result<Assemblage> {
        let entries = shape
            .iter()
            .map(|&k| vec![sigma.scale(1.0 / k.max(1) as f64); k])
            .collect();
        Assemblage::new(system, sigma, entries)
    }

    pub fn system(&self) -> SystemId {
        self.sigma.system()
    }

    pub fn sigma(&self) -> &Vector {
        &self.sigma
    }

    pub fn entries(&self) -> &[Vec<Vector>] {
        &self.entries
    }

    pub fn shape(&self) -> Vec<usize> {
        self.entries.iter().map(|r| r.len()).collect()
    }

    pub fn is_dichotomic(&self) -> bool {
        self.entries.iter().all(|r| r.len() == 2)
    }

    /// `s ρ_{a|x} + (1 - s) σ / k_x`, unchecked.
    pub fn mixed_with_trivial(&self, s: f64) -> Assemblage {
        let entries = self
            .entries
            .iter()
            .map(|row| {
                let k = row.len() as f64;
                row.iter()
                    .map(|rho| {
                        let c = geometry::add(
                            &geometry::scaled(rho.coords(), s),
                            &geometry::scaled(self.sigma.coords(), (1.0 - s) / k),
                        );
                        Vector::raw(self.sigma.system(), c)
                    })
                    .collect()
            })
            .collect();
        Assemblage { sigma: self.sigma.clone(), entries }
    }

    /// `(σ, y)` with `y_x = ρ_{+|x} - ρ_{-|x}`.
    pub fn to_dichotomic_tensor(&self, system: &GptSystem) -> Result<DichotomicTensor> {
        system.check_vector(&self.sigma)?;
        let bad: Vec<usize> = (0..self.entries.len()).filter(|&x| self.entries[x].len() != 2).collect();
        if !bad.is_empty() {
            return Err(GptError::NotDichotomic(bad));
        }
        let ys = self
            .entries
            .iter()
            .map(|r| Vector::raw(self.sigma.system(), geometry::sub(r[0].coords(), r[1].coords())))
            .collect();
        DichotomicTensor::new(system, self.sigma.clone(), ys)
    }

    pub fn max_abs_diff(&self, other: &Assemblage) -> f64 {
        let mut m = self.sigma.max_abs_diff(&other.sigma);
        for (r, q) in self.entries.iter().zip(&other.entries) {
            for (a, b) in r.iter().zip(q) {
                m = m.max(a.max_abs_diff(b));
            }
        }
        m
    }
}

/// `(w_0, w_1, ..., w_g)` with `Σ_x ε_x w_x <= w_0` for every sign vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub w0: Functional,
    pub components: Vec<Functional>,
    /// `<w_0, σ> = 1` for the barycenter it was built for.
    pub normalized: bool,
}

impl Witness {
    pub fn new(system: &GptSystem, w0: Functional, components: Vec<Functional>) -> Result<Witness> {
        system.check_functional(&w0)?;
        for w in &components {
            system.check_functional(w)?;
        }
        Ok(Witness { w0, components, normalized: false })
    }

    /// `w_0 = 1`, `w_x = 0`.
    pub fn zero(system: &GptSystem, g: usize) -> Witness {
        Witness {
            w0: system.unit(),
            components: vec![Functional::raw(system.id(), vec![0.0; system.dim()]); g],
            normalized: true,
        }
    }

    pub fn g(&self) -> usize {
        self.components.len()
    }

    /// `<w_0, σ> + Σ_x <w_x, y_x>`; negative values certify steering.
    pub fn value_raw(&self, sigma: &[f64], ys: &[&[f64]]) -> f64 {
        dot(self.w0.coords(), sigma) + self.components.iter().zip(ys).map(|(w, y)| dot(w.coords(), y)).sum::<f64>()
    }

    pub fn value(&self, t: &DichotomicTensor) -> f64 {
        let ys: Vec<&[f64]> = t.components().iter().map(|y| y.coords()).collect();
        self.value_raw(t.sigma().coords(), &ys)
    }

    /// Largest violation of `Σ_x ε_x <w_x, v_i> <= <w_0, v_i>` over sign
    /// vectors and vertices; `<= 0` means the stored `w_0` works.
    pub fn max_violation(&self, system: &GptSystem) -> Result<f64> {
        system.require_polytope()?;
        guards::check("components", self.g(), Guards::current().components)?;
        let mut worst = f64::NEG_INFINITY;
        for v in system.vertices() {
            // The worst sign vector is ε_x = sign <w_x, v>.
            let s: f64 = self.components.iter().map(|w| dot(w.coords(), v).abs()).sum();
            worst = worst.max(s - dot(self.w0.coords(), v));
        }
        Ok(worst)
    }
}

/// Witness for a general-shape assemblage: `<W_σ, σ> + Σ <W_{a|x}, ρ_{a|x}>`
/// is negative on the assemblage and nonnegative on every deterministic
/// strategy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralWitness {
    pub sigma_part: Functional,
    pub entries: Vec<Vec<Functional>>,
}

impl GeneralWitness {
    pub fn value(&self, asm: &Assemblage) -> f64 {
        let mut v = dot(self.sigma_part.coords(), asm.sigma.coords());
        for (ws, rs) in self.entries.iter().zip(&asm.entries) {
            for (w, r) in ws.iter().zip(rs) {
                v += dot(w.coords(), r.coords());
            }
        }
        v
    }

    /// Minimum over deterministic strategies and vertices of
    /// `<W_σ, v> + Σ_x <W_{ω_x|x}, v>`.
    pub fn min_on_strategies(&self, system: &GptSystem) -> f64 {
        let mut best = f64::INFINITY;
        for v in system.vertices() {
            // The sum separates over x, so minimize each setting independently.
            let mut s = dot(self.sigma_part.coords(), v);
            for ws in &self.entries {
                s += ws.iter().map(|w| dot(w.coords(), v)).fold(f64::INFINITY, f64::min);
            }
            best = best.min(s);
        }
        best
    }

    /// Dichotomic reduction: `w_0 = W_σ + ½ Σ_x (W_{+|x} + W_{-|x})`,
    /// `w_x = ½ (W_{+|x} - W_{-|x})`, normalized by `<w_0, σ>`.
    pub fn to_dichotomic(&self, sigma: &Vector) -> Option<Witness> {
        if self.entries.iter().any(|r| r.len() != 2) {
            return None;
        }
        let id = self.sigma_part.system();
        let mut w0 = self.sigma_part.coords().to_vec();
        let mut comps = Vec::new();
        for r in &self.entries {
            let (p, m) = (r[0].coords(), r[1].coords());
            geometry::axpy(&mut w0, 0.5, p);
            geometry::axpy(&mut w0, 0.5, m);
            comps.push(geometry::scaled(&geometry::sub(p, m), 0.5));
        }
        let n = dot(&w0, sigma.coords());
        if n <= 1e-12 {
            return None;
        }
        Some(Witness {
            w0: Functional::raw(id, geometry::scaled(&w0, 1.0 / n)),
            components: comps.iter().map(|c| Functional::raw(id, geometry::scaled(c, 1.0 / n))).collect(),
            normalized: true,
        })
    }
}

/// `ρ_{a|x} = Σ_ω q(ω) q(a|x,ω) ρ_ω`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LhsModel {
    /// `(q(ω), ρ_ω)` with `ρ_ω ∈ K`.
    pub ensemble: Vec<(f64, Vector)>,
    /// `response[ω][x][a] = q(a|x,ω)`.
    pub response: Vec<Vec<Vec<f64>>>,
}

impl LhsModel {
    pub fn reconstruct(&self) -> Vec<Vec<Vec<f64>>> {
        let Some((_, first)) = self.ensemble.first() else {
            return Vec::new();
        };
        let d = first.dim();
        let shape: Vec<usize> = self.response[0].iter().map(|r| r.len()).collect();
        let mut out: Vec<Vec<Vec<f64>>> = shape.iter().map(|&k| vec![vec![0.0; d]; k]).collect();
        for ((q, rho), resp) in self.ensemble.iter().zip(&self.response) {
            for (x, row) in resp.iter().enumerate() {
                for (a, p) in row.iter().enumerate() {
                    geometry::axpy(&mut out[x][a], q * p, rho.coords());
                }
            }
        }
        out
    }

    pub fn max_error(&self, asm: &Assemblage) -> f64 {
        let rec = self.reconstruct();
        let mut m = 0.0f64;
        for (rs, qs) in asm.entries.iter().zip(&rec) {
            for (r, q) in rs.iter().zip(qs) {
                m = m.max(geometry::dist_inf(r.coords(), q));
            }
        }
        m
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum LhsVerdict {
    Classical { model: LhsModel },
    Steerable {
        witness: GeneralWitness,
        /// σ-normalized reduction, present for dichotomic shapes.
        dichotomic: Option<Witness>,
    },
}

impl LhsVerdict {
    pub fn is_classical(&self) -> bool {
        matches!(self, LhsVerdict::Classical { .. })
    }
}

/// Digits of `omega` in the mixed radix `shape`, setting 0 least significant.
pub(crate) fn strategy(mut omega: usize, shape: &[usize]) -> Vec<usize> {
    shape
        .iter()
        .map(|&k| {
            let a = omega % k;
            omega /= k;
            a
        })
        .collect()
}

pub(crate) fn strategy_count(shape: &[usize]) -> Result<usize> {
    let limit = Guards::current().strategies;
    let mut n = 1usize;
    for &k in shape {
        n = n.saturating_mul(k);
        guards::check("strategies", n, limit)?;
    }
    Ok(n)
}

/// Decides `ρ_{a|x} = Σ_ω d(a|x,ω) φ_ω` with `φ_ω ∈ V+` over deterministic
/// strategies `ω`.
pub fn lhs_check(system: &GptSystem, asm: &Assemblage) -> Result<LhsVerdict> {
    system.require_polytope()?;
    system.check_vector(&asm.sigma)?;
    let shape = asm.shape();
    let ns = strategy_count(&shape)?;
    let verts = system.vertices();
    let m = verts.len();
    let d = system.dim();
    let n = ns * m;
    let strategies: Vec<Vec<usize>> = (0..ns).map(|o| strategy(o, &shape)).collect();
    // Setting 0 carries all outcomes; the others drop their last outcome,
    // which is implied by the totals. This keeps the rows independent of
    // rounding in the marginals.
    let mut rows_of: Vec<(usize, usize)> = Vec::new();
    for (x, &k) in shape.iter().enumerate() {
        let kept = if x == 0 { k } else { k - 1 };
        rows_of.extend((0..kept).map(|a| (x, a)));
    }
    let mut p = LpProblem::new(n);
    for &(x, a) in &rows_of {
        for r in 0..d {
            let mut entries = Vec::new();
            for (o, w) in strategies.iter().enumerate() {
                if w[x] == a {
                    for (i, v) in verts.iter().enumerate() {
                        if v[r] != 0.0 {
                            entries.push((o * m + i, v[r]));
                        }
                    }
                }
            }
            p.add_eq_sparse(&entries, asm.entries[x][a].coords()[r]);
        }
    }
    let out = solve(&p)?;
    match out.status {
        LpStatus::Optimal => {
            let mut ensemble = Vec::new();
            let mut response = Vec::new();
            for (o, w) in strategies.iter().enumerate() {
                let mut phi = vec![0.0; d];
                for (i, v) in verts.iter().enumerate() {
                    geometry::axpy(&mut phi, out.primal[o * m + i], v);
                }
                let q = dot(system.unit_coords(), &phi);
                if q <= 1e-13 {
                    continue;
                }
                ensemble.push((q, system.vector(geometry::scaled(&phi, 1.0 / q))?));
                response.push(
                    shape
                        .iter()
                        .enumerate()
                        .map(|(x, &k)| (0..k).map(|a| if w[x] == a { 1.0 } else { 0.0 }).collect())
                        .collect(),
                );
            }
            Ok(LhsVerdict::Classical { model: LhsModel { ensemble, response } })
        }
        LpStatus::Infeasible => {
            let id = system.id();
            let zero = Functional::raw(id, vec![0.0; d]);
            let mut entries: Vec<Vec<Functional>> = shape.iter().map(|&k| vec![zero.clone(); k]).collect();
            for (row, &(x, a)) in rows_of.iter().enumerate() {
                let w: Vec<f64> = out.dual_equality[row * d..(row + 1) * d].iter().map(|y| -y).collect();
                entries[x][a] = Functional::raw(id, w);
            }
            let witness = GeneralWitness { sigma_part: zero, entries };
            let dichotomic = witness.to_dichotomic(&asm.sigma);
            Ok(LhsVerdict::Steerable { witness, dichotomic })
        }
        LpStatus::Unbounded => Err(GptError::Numerical("feasibility problem reported unbounded".into())),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobustnessMethod {
    ClosedForm,
    Bisection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Robustness {
    pub value: f64,
    pub method: RobustnessMethod,
    /// Present for dichotomic shapes.
    pub steering_norm: Option<f64>,
}

pub const BISECTION_TOL: f64 = 1e-6;

/// `sup {s ∈ [0,1] : s ρ + (1 - s) σ/k is classical}`.
pub fn robustness(system: &GptSystem, asm: &Assemblage) -> Result<Robustness> {
    system.require_interior(&asm.sigma, "σ")?;
    if asm.is_dichotomic() {
        let t = asm.to_dichotomic_tensor(system)?;
        let norm = tensor::steering_norm(system, &t)?.value;
        let value = if norm <= 1.0 { 1.0 } else { 1.0 / norm };
        return Ok(Robustness { value, method: RobustnessMethod::ClosedForm, steering_norm: Some(norm) });
    }
    if lhs_check(system, asm)?.is_classical() {
        return Ok(Robustness { value: 1.0, method: RobustnessMethod::Bisection, steering_norm: None });
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if lhs_check(system, &asm.mixed_with_trivial(mid))?.is_classical() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Robustness { value: lo, method: RobustnessMethod::Bisection, steering_norm: None })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessCheck {
    pub valid: bool,
    pub strict: bool,
    /// `Σ_x ||w_x||^σ`.
    pub sigma_norm_sum: f64,
    /// A feasible `w_0` with `<w_0, σ> = 1`, when valid.
    pub w0: Option<Functional>,
}

/// Valid iff some `w_0 ∈ A+` with `<w_0, σ> = 1` satisfies
/// `Σ_x ε_x w_x <= w_0` for all `ε`; strict iff also `Σ_x ||w_x||^σ > 1`.
pub fn witness_verify(system: &GptSystem, w: &Witness, sigma: &Vector) -> Result<WitnessCheck> {
    system.require_polytope()?;
    system.require_interior(sigma, "σ")?;
    for c in &w.components {
        system.check_functional(c)?;
    }
    let g = w.g();
    guards::check("components", g, Guards::current().components)?;
    let d = system.dim();
    let mut p = LpProblem::new(d);
    for j in 0..d {
        p.set_free(j);
    }
    p.add_eq(sigma.coords().to_vec(), 1.0);
    for v in system.vertices() {
        // Only the worst sign vector matters at each vertex.
        let s: f64 = w.components.iter().map(|c| dot(c.coords(), v).abs()).sum();
        p.add_ge(v.clone(), s);
    }
    let out = solve(&p)?;
    let valid = out.status == LpStatus::Optimal;
    let mut sum = 0.0;
    for c in &w.components {
        sum += system.sigma_base_norm(c, sigma)?.0;
    }
    Ok(WitnessCheck {
        valid,
        strict: valid && sum > 1.0 + 1e-9,
        sigma_norm_sum: sum,
        w0: valid.then(|| Functional::raw(system.id(), geometry::clean(out.primal))),
    })
}

/// `1 / min(g, d)`, a lower bound on the universal degree `s_{σ,g}`.
pub fn universal_degree_lower(system: &GptSystem, sigma: &Vector, g: usize) -> Result<f64> {
    system.require_interior(sigma, "σ")?;
    if g == 0 {
        return invalid("g must be at least 1");
    }
    Ok(1.0 / g.min(system.dim()) as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeEstimate {
    /// Smallest observed `||y||_ε / ||y||_steer`: an upper estimate of the
    /// infimum of steering degrees.
    pub infimum_reading: f64,
    /// Largest observed ratio (always 1 once a single-component sample is
    /// seen, since the two norms agree there).
    pub supremum_reading: f64,
    pub lower_bound: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Samples `y` with `||y||_{ε,σ} = 1` and reports both the infimum and the
/// supremum of `||y||_ε / ||y||_steer` seen.
pub fn degree_estimate(system: &GptSystem, sigma: &Vector, g: usize, samples: usize, seed: u64) -> Result<DegreeEstimate> {
    let lower_bound = universal_degree_lower(system, sigma, g)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inf = f64::INFINITY;
    let mut sup = 0.0f64;
    for _ in 0..samples {
        let ys: Vec<Vec<f64>> = (0..g).map(|_| sampling::random_component(&mut rng, system, sigma, 1.0)).collect();
        let refs: Vec<&[f64]> = ys.iter().map(|y| y.as_slice()).collect();
        let steer = tensor::steering_norm_raw(system, sigma, &refs)?.value;
        let ratio = 1.0 / steer;
        inf = inf.min(ratio);
        sup = sup.max(ratio);
    }
    Ok(DegreeEstimate { infimum_reading: inf, supremum_reading: sup, lower_bound, samples, seed })
}

/// The assemblage `{f_{a|x}}` on the dual system `(A, A+, σ)` with
/// barycenter `1`; it is classical iff the measurements are compatible.
pub fn measurements_to_assemblage(
    system: &GptSystem,
    sigma: &Vector,
    measurements: &[Measurement],
) -> Result<(GptSystem, Assemblage)> {
    let dual = system.dual_system(sigma)?;
    let mut entries = Vec::new();
    for m in measurements {
        let mut row = Vec::new();
        for f in &m.effects {
            system.check_functional(f)?;
            row.push(dual.vector(f.coords().to_vec())?);
        }
        entries.push(row);
    }
    let bary = dual.vector(system.unit_coords().to_vec())?;
    let asm = Assemblage::new(&dual, bary, entries)?;
    Ok((dual, asm))
}

/// Robustness bracket for a dichotomic assemblage on a ball system, from
/// inscribed and circumscribed polytopes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessBracket {
    pub lower: f64,
    pub upper: f64,
}

/// `lower <= robustness <= upper`, evaluating the steering norm on an
/// inscribed polytope (larger norm) and a circumscribed one (smaller norm).
pub fn robustness_bracket(
    inscribed: &GptSystem,
    circumscribed: &GptSystem,
    sigma: &[f64],
    ys: &[&[f64]],
) -> Result<RobustnessBracket> {
    let to_r = |sys: &GptSystem| -> Result<f64> {
        let s = sys.vector(sigma.to_vec())?;
        let n = tensor::steering_norm_raw(sys, &s, ys)?.value;
        Ok(if n <= 1.0 { 1.0 } else { 1.0 / n })
    };
    Ok(RobustnessBracket { lower: to_r(inscribed)?, upper: to_r(circumscribed)? })
}

/// Sign vector `ε` at index `e` as `±1.0` values.
pub fn signs(e: usize, g: usize) -> Vec<f64> {
    (0..g).map(|x| sign(e, x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_asm(ys: [[f64; 3]; 2]) -> (GptSystem, Assemblage) {
        let sq = GptSystem::square();
        let comps = ys.iter().map(|y| sq.vector(y.to_vec()).unwrap()).collect();
        let t = DichotomicTensor::new(&sq, sq.center(), comps).unwrap();
        let asm = Assemblage::from_dichotomic(&sq, &t).unwrap();
        (sq, asm)
    }

    #[test]
    fn axis_pair_is_classical() {
        let (sq, asm) = square_asm([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        match lhs_check(&sq, &asm).unwrap() {
            LhsVerdict::Classical { model } => assert!(model.max_error(&asm) < 1e-8),
            other => panic!("{other:?}"),
        }
        assert_eq!(robustness(&sq, &asm).unwrap().value, 1.0);
    }

    #[test]
    fn diagonal_pair_is_steerable() {
        let (sq, asm) = square_asm([[0.0, 1.0, 1.0], [0.0, 1.0, -1.0]]);
        match lhs_check(&sq, &asm).unwrap() {
            LhsVerdict::Steerable { witness, dichotomic } => {
                assert!(witness.value(&asm) < -1e-9);
                assert!(witness.min_on_strategies(&sq) >= -1e-9);
                let w = dichotomic.unwrap();
                let t = asm.to_dichotomic_tensor(&sq).unwrap();
                assert!(w.value(&t) < 0.0);
                assert!(w.max_violation(&sq).unwrap() <= 1e-9);
            }
            other => panic!("{other:?}"),
        }
        let r = robustness(&sq, &asm).unwrap();
        assert!((r.value - 0.5).abs() < 1e-9);
    }

    #[test]
    fn bisection_matches_closed_form() {
        let (sq, asm) = square_asm([[0.0, 1.0, 1.0], [0.0, 1.0, -1.0]]);
        // Three outcomes on the first setting force the bisection path;
        // splitting ρ_{+|0} in halves leaves the classical set unchanged.
        let e = asm.entries();
        let split = vec![e[0][0].scale(0.5), e[0][0].scale(0.5), e[0][1].clone()];
        let asm3 = Assemblage::new(&sq, asm.sigma().clone(), vec![split, e[1].clone()]).unwrap();
        let r = robustness(&sq, &asm3).unwrap();
        assert_eq!(r.method, RobustnessMethod::Bisection);
        assert!(lhs_check(&sq, &asm3.mixed_with_trivial(r.value)).unwrap().is_classical());
        assert!(!lhs_check(&sq, &asm3.mixed_with_trivial(r.value + 2e-6)).unwrap().is_classical());
        assert!(r.value > 0.4 && r.value < 0.6);
    }

    #[test]
    fn witness_examples() {
        let sq = GptSystem::square();
        let f = |c: [f64; 3]| sq.functional(c.to_vec()).unwrap();
        let w = Witness::new(&sq, sq.unit(), vec![f([0.0, 0.5, 0.0]), f([0.0, 0.0, 0.5])]).unwrap();
        let c = witness_verify(&sq, &w, &sq.center()).unwrap();
        assert!(c.valid && !c.strict);
        assert!((c.sigma_norm_sum - 1.0).abs() < 1e-9);
        let w = Witness::new(&sq, sq.unit(), vec![f([0.0, 0.5, 0.5]), f([0.0, 0.5, -0.5])]).unwrap();
        let c = witness_verify(&sq, &w, &sq.center()).unwrap();
        assert!(c.valid && c.strict);
        assert!((c.sigma_norm_sum - 2.0).abs() < 1e-9);
        let c = witness_verify(&sq, &Witness::zero(&sq, 2), &sq.center()).unwrap();
        assert!(c.valid && !c.strict);
        let w = Witness::new(&sq, sq.unit(), vec![f([0.0, 1.0, 0.0]), f([0.0, 0.0, 1.0])]).unwrap();
        assert!(!witness_verify(&sq, &w, &sq.center()).unwrap().valid);
    }

    #[test]
    fn universal_lower_bound_values() {
        let sq = GptSystem::square();
        assert_eq!(universal_degree_lower(&sq, &sq.center(), 2).unwrap(), 0.5);
        assert_eq!(universal_degree_lower(&sq, &sq.center(), 1).unwrap(), 1.0);
        let s4 = GptSystem::simplex(4).unwrap();
        assert_eq!(universal_degree_lower(&s4, &s4.barycenter(), 7).unwrap(), 0.25);
    }

    #[test]
    fn invalid_assemblages_are_named() {
        let sq = GptSystem::square();
        let v = |c: [f64; 3]| sq.vector(c.to_vec()).unwrap();
        let err = Assemblage::new(&sq, sq.center(), vec![vec![v([0.5, 0.5, 0.5]), v([0.5, 0.0, 0.0])]]).unwrap_err();
        assert!(err.to_string().contains("sum to the barycenter"), "{err}");
        let err = Assemblage::new(&sq, sq.center(), vec![vec![v([0.0, 1.0, 0.0]), v([1.0, -1.0, 0.0])]]).unwrap_err();
        assert!(err.to_string().contains("not in the cone"), "{err}");
    }

    #[test]
    fn strategy_digits() {
        assert_eq!(strategy(5, &[2, 3]), vec![1, 2]);
        assert_eq!(strategy(0, &[2, 2]), vec![0, 0]);
    }
}
