//! Simple measures on the state space, the Choquet order, and the
//! variational constant `c_μ`.

use gptsteer_lp::{solve, LpProblem, LpStatus};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, GptError, Result};
use crate::geometry::{self, dot, EPS};
use crate::gpt::{BallNorm, Functional, GptSystem, LinearMap, SystemId, Vector};
use crate::guards::{self, Guards};

/// Barycenters closer than this (max-norm) count as equal.
pub const BARYCENTER_TOL: f64 = 1e-8;

/// A finitely supported probability measure on `K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimpleMeasure {
    atoms: Vec<(f64, Vector)>,
    barycenter: Vector,
}

impl SimpleMeasure {
    pub fn new(system: &GptSystem, atoms: Vec<(f64, Vector)>) -> Result<SimpleMeasure> {
        if atoms.is_empty() {
            return invalid("measure needs at least one atom");
        }
        let mut total = 0.0;
        let mut bary = vec![0.0; system.dim()];
        for (j, (w, rho)) in atoms.iter().enumerate() {
            system.check_vector(rho)?;
            if !w.is_finite() || *w < 0.0 {
                return invalid(format!("atom {j} has a negative weight"));
            }
            if !system.is_state(rho, EPS * (1.0 + geometry::max_abs(rho.coords()))) {
                return invalid(format!("atom {j} is not a state"));
            }
            total += w;
            geometry::axpy(&mut bary, *w, rho.coords());
        }
        if (total - 1.0).abs() > EPS {
            return invalid("weights must sum to 1");
        }
        Ok(SimpleMeasure { atoms, barycenter: system.vector(bary)? })
    }

    pub fn dirac(system: &GptSystem, rho: Vector) -> Result<SimpleMeasure> {
        SimpleMeasure::new(system, vec![(1.0, rho)])
    }

    /// Weights on the vertices of a polytopic system (zero weights dropped).
    pub fn on_vertices(system: &GptSystem, weights: &[f64]) -> Result<SimpleMeasure> {
        if weights.len() != system.vertices().len() {
            return invalid("one weight per vertex expected");
        }
        let atoms = weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w != 0.0)
            .map(|(i, w)| (*w, system.vertex(i)))
            .collect();
        SimpleMeasure::new(system, atoms)
    }

    pub fn system(&self) -> SystemId {
        self.barycenter.system()
    }

    pub fn atoms(&self) -> &[(f64, Vector)] {
        &self.atoms
    }

    pub fn barycenter(&self) -> &Vector {
        &self.barycenter
    }

    /// `∫ |<h, ρ>| dμ`.
    pub fn integral_abs(&self, h: &[f64]) -> f64 {
        self.atoms.iter().map(|(w, r)| w * dot(h, r.coords()).abs()).sum()
    }

    /// `∫ (g_1 ∨ ... ∨ g_k) dμ`.
    pub fn integral_max(&self, gs: &[Vec<f64>]) -> f64 {
        self.atoms
            .iter()
            .map(|(w, r)| w * gs.iter().map(|g| dot(g, r.coords())).fold(f64::NEG_INFINITY, f64::max))
            .sum()
    }

    /// Same atoms in a different order and up to `tol` in weights.
    pub fn approx_eq(&self, other: &SimpleMeasure, tol: f64) -> bool {
        if self.atoms.len() != other.atoms.len() {
            return false;
        }
        let mut used = vec![false; other.atoms.len()];
        self.atoms.iter().all(|(w, r)| {
            let hit = other.atoms.iter().enumerate().position(|(k, (v, s))| {
                !used[k] && (w - v).abs() <= tol && r.max_abs_diff(s) <= tol
            });
            match hit {
                Some(k) => {
                    used[k] = true;
                    true
                }
                None => false,
            }
        })
    }
}

/// A simple measure supported on vertices of `K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryMeasure {
    pub measure: SimpleMeasure,
    /// Vertex index of each atom.
    pub vertex_index: Vec<usize>,
}

impl BoundaryMeasure {
    pub fn new(system: &GptSystem, measure: SimpleMeasure) -> Result<BoundaryMeasure> {
        system.require_polytope()?;
        let mut vertex_index = Vec::with_capacity(measure.atoms.len());
        for (j, (_, rho)) in measure.atoms.iter().enumerate() {
            match system.vertices().iter().position(|v| geometry::dist_inf(v, rho.coords()) <= EPS) {
                Some(i) => vertex_index.push(i),
                None => return invalid(format!("atom {j} is not a vertex")),
            }
        }
        Ok(BoundaryMeasure { measure, vertex_index })
    }

    /// Total weight on each vertex.
    pub fn vertex_weights(&self, system: &GptSystem) -> Vec<f64> {
        let mut w = vec![0.0; system.vertices().len()];
        for ((q, _), &i) in self.measure.atoms.iter().zip(&self.vertex_index) {
            w[i] += q;
        }
        w
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ChoquetVerdict {
    /// `response[j][a] = q(a|ρ_j)`.
    Below { response: Vec<Vec<f64>> },
    /// `g_1..g_k` with `Σ_a λ_a <g_a, σ_a> > ∫ (g_1 ∨ ... ∨ g_k) dμ`.
    NotBelow { functionals: Vec<Functional> },
}

impl ChoquetVerdict {
    pub fn is_below(&self) -> bool {
        matches!(self, ChoquetVerdict::Below { .. })
    }
}

fn check_pair(system: &GptSystem, nu: &SimpleMeasure, mu: &SimpleMeasure) -> Result<()> {
    if nu.system() != system.id() || mu.system() != system.id() {
        return Err(GptError::TagMismatch("measures over different systems".into()));
    }
    Ok(())
}

/// Decides `ν ≺ μ` for simple `ν = Σ_a λ_a δ_{σ_a}`: response functions
/// `q(a|j) >= 0`, `Σ_a q(a|j) = 1`, with `Σ_j μ_j q(a|j) ρ_j = λ_a σ_a`.
pub fn choquet_below(system: &GptSystem, nu: &SimpleMeasure, mu: &SimpleMeasure) -> Result<ChoquetVerdict> {
    check_pair(system, nu, mu)?;
    let id = system.id();
    let diff = geometry::sub(nu.barycenter.coords(), mu.barycenter.coords());
    if geometry::max_abs(&diff) > BARYCENTER_TOL {
        // <h, ν̄> > <h, μ̄> for h = ν̄ - μ̄.
        let h = Functional::raw(id, diff);
        return Ok(ChoquetVerdict::NotBelow { functionals: vec![h; nu.atoms.len()] });
    }
    let k = nu.atoms.len();
    let nm = mu.atoms.len();
    let d = system.dim();
    let mut p = LpProblem::new(nm * k);
    for j in 0..nm {
        let entries: Vec<(usize, f64)> = (0..k).map(|a| (j * k + a, 1.0)).collect();
        p.add_eq_sparse(&entries, 1.0);
    }
    for (a, (lam, sa)) in nu.atoms.iter().enumerate() {
        for r in 0..d {
            let entries: Vec<(usize, f64)> = mu
                .atoms
                .iter()
                .enumerate()
                .map(|(j, (w, rho))| (j * k + a, w * rho.coords()[r]))
                .filter(|(_, v)| *v != 0.0)
                .collect();
            p.add_eq_sparse(&entries, lam * sa.coords()[r]);
        }
    }
    let out = solve(&p)?;
    match out.status {
        LpStatus::Optimal => Ok(ChoquetVerdict::Below {
            response: (0..nm).map(|j| out.primal[j * k..(j + 1) * k].to_vec()).collect(),
        }),
        LpStatus::Infeasible => {
            let functionals = (0..k)
                .map(|a| Functional::raw(id, out.dual_equality[nm + a * d..nm + (a + 1) * d].to_vec()))
                .collect();
            Ok(ChoquetVerdict::NotBelow { functionals })
        }
        LpStatus::Unbounded => Err(GptError::Numerical("feasibility problem reported unbounded".into())),
    }
}

/// `Σ_a λ_a <g_a, σ_a> - ∫ (g_1 ∨ ... ∨ g_k) dμ`; positive means `ν ⊀ μ`.
pub fn dual_gap(nu: &SimpleMeasure, mu: &SimpleMeasure, gs: &[Vec<f64>]) -> f64 {
    let lhs: f64 = nu.atoms.iter().zip(gs).map(|((l, s), g)| l * dot(g, s.coords())).sum();
    lhs - mu.integral_max(gs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualCheck {
    /// No sampled functional violated the necessary condition.
    pub passed: bool,
    /// The violating tuple (a single `h` for the `|<h,·>|` test).
    pub violation: Option<Vec<Functional>>,
    pub trials: usize,
    pub seed: u64,
}

fn normalize_sigma(system: &GptSystem, sigma: &Vector, h: Vec<f64>) -> Result<Vec<f64>> {
    let f = system.functional(h)?;
    let (n, _) = system.sigma_base_norm(&f, sigma)?;
    Ok(if n > 0.0 { geometry::scaled(f.coords(), 1.0 / n) } else { f.into_coords() })
}

/// Randomized necessary-condition test for `ν ≺ μ`. Each trial samples a
/// tuple `g_1..g_k` and a single `h`, and checks both
/// `Σ λ_a <g_a, σ_a> <= ∫ ∨ g_a dμ` and `∫|<h,·>| dν <= ∫|<h,·>| dμ`.
/// Sound only for refutation.
pub fn choquet_below_dual_check(
    system: &GptSystem,
    nu: &SimpleMeasure,
    mu: &SimpleMeasure,
    trials: usize,
    seed: u64,
) -> Result<DualCheck> {
    check_pair(system, nu, mu)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = system.dim();
    let sigma = mu.barycenter.clone();
    let interior = system.is_interior(&sigma);
    let k = nu.atoms.len();
    let sample = |rng: &mut ChaCha8Rng| -> Result<Vec<f64>> {
        let g: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        if interior {
            normalize_sigma(system, &sigma, g)
        } else {
            Ok(geometry::scaled(&g, 1.0 / geometry::norm2(&g).max(1e-300)))
        }
    };
    let id = system.id();
    for _ in 0..trials {
        let gs: Vec<Vec<f64>> = (0..k).map(|_| sample(&mut rng)).collect::<Result<_>>()?;
        let gap = dual_gap(nu, mu, &gs);
        if gap > 1e-9 * (1.0 + mu.integral_max(&gs).abs()) {
            return Ok(DualCheck {
                passed: false,
                violation: Some(gs.into_iter().map(|g| Functional::raw(id, g)).collect()),
                trials,
                seed,
            });
        }
        let h = sample(&mut rng)?;
        let (l, r) = (nu.integral_abs(&h), mu.integral_abs(&h));
        if l > r + 1e-9 * (1.0 + r) {
            return Ok(DualCheck { passed: false, violation: Some(vec![Functional::raw(id, h)]), trials, seed });
        }
    }
    Ok(DualCheck { passed: true, violation: None, trials, seed })
}

/// Exact test for two-atom `ν`: with a common barycenter, `ν ≺ μ` iff
/// `λ σ_+ - (1 - λ) σ_-` lies in the zonotope `Σ_j [-μ_j ρ_j, μ_j ρ_j]`.
/// Returns `None` when `ν ≺ μ`, else `h` with
/// `∫|<h,·>| dν > ∫|<h,·>| dμ`.
pub fn dichotomic_violation(system: &GptSystem, nu: &SimpleMeasure, mu: &SimpleMeasure) -> Result<Option<Functional>> {
    check_pair(system, nu, mu)?;
    if nu.atoms.len() > 2 {
        return Err(GptError::NotDichotomic(vec![nu.atoms.len()]));
    }
    let id = system.id();
    let diff = geometry::sub(nu.barycenter.coords(), mu.barycenter.coords());
    if geometry::max_abs(&diff) > BARYCENTER_TOL {
        // h = ±𝟙-shift of the barycenter gap: the affine part separates.
        let mut best = None;
        for s in [1.0, -1.0] {
            let h = geometry::add(&geometry::scaled(&diff, s * 1e3), system.unit_coords());
            if nu.integral_abs(&h) > mu.integral_abs(&h) {
                best = Some(Functional::raw(id, h));
                break;
            }
        }
        return match best {
            Some(h) => Ok(Some(h)),
            None => Err(GptError::Numerical("no separating functional for unequal barycenters".into())),
        };
    }
    if nu.atoms.len() == 1 {
        // A point mass at the common barycenter lies below every measure.
        return Ok(None);
    }
    let (lp, sp) = (&nu.atoms[0].0, nu.atoms[0].1.coords());
    let (lm, sm) = (&nu.atoms[1].0, nu.atoms[1].1.coords());
    let y = geometry::sub(&geometry::scaled(sp, *lp), &geometry::scaled(sm, *lm));
    let nm = mu.atoms.len();
    let mut p = LpProblem::new(nm);
    for (j, (w, _)) in mu.atoms.iter().enumerate() {
        p.set_bounds(j, -w, *w);
    }
    for r in 0..system.dim() {
        p.add_eq(mu.atoms.iter().map(|(_, rho)| rho.coords()[r]).collect(), y[r]);
    }
    let out = solve(&p)?;
    match out.status {
        LpStatus::Optimal => Ok(None),
        LpStatus::Infeasible => {
            for s in [1.0, -1.0] {
                let h = geometry::scaled(&out.dual_equality, s);
                if dot(&h, &y) > mu.integral_abs(&h) + 1e-12 {
                    return Ok(Some(Functional::raw(id, h)));
                }
            }
            Err(GptError::Numerical("zonotope certificate does not separate".into()))
        }
        LpStatus::Unbounded => Err(GptError::Numerical("feasibility problem reported unbounded".into())),
    }
}

/// `||h||^σ` together with a two-atom `ν ∈ P_{2,σ}(K)` attaining
/// `∫ |<h,ρ>| dν = ||h||^σ`, built from `y_± = (σ ± y*)/2`.
pub fn co_norm_max(system: &GptSystem, sigma: &Vector, h: &Functional) -> Result<(f64, SimpleMeasure)> {
    let (value, ystar) = system.sigma_base_norm(h, sigma)?;
    let s = sigma.coords();
    let mut atoms = Vec::new();
    for sgn in [1.0, -1.0] {
        let yp = geometry::scaled(&geometry::add(s, &geometry::scaled(ystar.coords(), sgn)), 0.5);
        let w = dot(system.unit_coords(), &yp);
        if w > 1e-12 {
            atoms.push((w, system.vector(geometry::scaled(&yp, 1.0 / w))?));
        }
    }
    // Renormalize against rounding in the weights.
    let total: f64 = atoms.iter().map(|(w, _)| w).sum();
    for a in &mut atoms {
        a.0 /= total;
    }
    Ok((value, SimpleMeasure::new(system, atoms)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CMu {
    pub value: f64,
    /// A minimizer with `||h||^σ = 1`.
    pub h: Functional,
}

/// Vertices of the order interval `{y : -σ <= y <= σ}`.
pub fn order_interval_vertices(system: &GptSystem, sigma: &Vector) -> Result<Vec<Vec<f64>>> {
    system.require_polytope()?;
    system.require_interior(sigma, "σ")?;
    let mut hs = Vec::with_capacity(2 * system.facets().len());
    for f in system.facets() {
        let b = dot(f, sigma.coords());
        hs.push((f.clone(), b));
        hs.push((geometry::scaled(f, -1.0), b));
    }
    geometry::polytope_vertices(&hs, &[], system.dim())
}

/// `c_μ = min {∫ |<h,ρ>| dμ : ||h||^σ = 1}`, minimized facet by facet over
/// the unit sphere of `||·||^σ`.
pub fn c_mu(system: &GptSystem, sigma: &Vector, mu: &SimpleMeasure) -> Result<CMu> {
    if mu.system() != system.id() {
        return Err(GptError::TagMismatch("measure is not over the given system".into()));
    }
    guards::check("c_mu dimension", system.dim(), Guards::current().cmu_dim)?;
    let ys = order_interval_vertices(system, sigma)?;
    let d = system.dim();
    let na = mu.atoms.len();
    let n = d + na;
    let mut best: Option<(f64, Vec<f64>)> = None;
    // ±y_i give the same subproblem up to h ↦ -h, so one of each pair suffices.
    let mut seen: Vec<Vec<f64>> = Vec::new();
    for yi in &ys {
        if seen.iter().any(|s| geometry::dist_inf(s, &geometry::scaled(yi, -1.0)) <= 1e-9) {
            continue;
        }
        seen.push(yi.clone());
        let mut obj = vec![0.0; n];
        for (j, (w, _)) in mu.atoms.iter().enumerate() {
            obj[d + j] = *w;
        }
        let mut p = LpProblem::new(n).minimize(obj);
        for r in 0..d {
            p.set_free(r);
        }
        let mut row = vec![0.0; n];
        row[..d].copy_from_slice(yi);
        p.add_eq(row, 1.0);
        for yk in &ys {
            let mut row = vec![0.0; n];
            row[..d].copy_from_slice(yk);
            p.add_le(row, 1.0);
        }
        for (j, (_, rho)) in mu.atoms.iter().enumerate() {
            for s in [1.0, -1.0] {
                let mut row = vec![0.0; n];
                for r in 0..d {
                    row[r] = s * rho.coords()[r];
                }
                row[d + j] = -1.0;
                p.add_le(row, 0.0);
            }
        }
        let out = solve(&p)?;
        if out.status != LpStatus::Optimal {
            return Err(GptError::Numerical(format!("c_mu facet LP returned {:?}", out.status)));
        }
        if best.as_ref().is_none_or(|(v, _)| out.objective_value < *v) {
            best = Some((out.objective_value, out.primal[..d].to_vec()));
        }
    }
    let (value, h) = best.ok_or_else(|| GptError::Numerical("order interval has no vertices".into()))?;
    Ok(CMu { value: value.max(0.0), h: Functional::raw(system.id(), geometry::clean(h)) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    pub stderr: f64,
    /// Closed form of `c_μ` for the uniform sphere measure, `n <= 3`.
    pub analytic: Option<f64>,
    /// Minimizing `h = (t, φ)` found by the search.
    pub h: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
}

fn mc_mean(xs: &[f64], n: usize, t: f64, phi: &[f64]) -> f64 {
    let m = xs.len() / n;
    let mut acc = 0.0;
    for p in xs.chunks_exact(n) {
        acc += (t + dot(phi, p)).abs();
    }
    acc / m as f64
}

/// `h = (t, φ)` rescaled onto `max(|t|, |φ|_2) = 1`.
fn onto_sphere(t: f64, phi: &[f64]) -> (f64, Vec<f64>) {
    let s = t.abs().max(geometry::norm2(phi)).max(1e-300);
    (t / s, geometry::scaled(phi, 1.0 / s))
}

fn directions(n: usize) -> Vec<Vec<f64>> {
    match n {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..48)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / 48.0;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        _ => {
            // Fibonacci points on S^2 padded with zeros, plus the axes.
            let m = 96;
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            let mut out: Vec<Vec<f64>> = (0..m)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / m as f64;
                    let r = (1.0 - z * z).sqrt();
                    let a = golden * k as f64;
                    let mut v = vec![r * a.cos(), r * a.sin(), z];
                    v.resize(n, 0.0);
                    v
                })
                .collect();
            for i in 0..n {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                out.push(e);
            }
            out
        }
    }
}

/// Monte Carlo estimate of `c_μ` for the uniform measure on the unit sphere
/// of the `l_2` ball system of dimension `n` (so `d = n + 1`), at the
/// center: a grid search over `max(|t|, |φ|) = 1` on a subsample, then
/// pattern-search descent on all samples.
pub fn c_mu_monte_carlo(n: usize, samples: usize, seed: u64) -> Result<MonteCarloEstimate> {
    if n == 0 {
        return invalid("ball dimension must be at least 1");
    }
    if samples < 2 {
        return invalid("at least two samples are needed");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Antithetic pairs keep the empirical barycenter exactly at the center.
    let samples = samples + samples % 2;
    let mut xs = Vec::with_capacity(samples * n);
    for _ in 0..samples / 2 {
        let g: Vec<f64> = loop {
            let g: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            if geometry::norm2(&g) > 1e-12 {
                break g;
            }
        };
        let r = geometry::norm2(&g);
        xs.extend(g.iter().map(|v| v / r));
        xs.extend(g.iter().map(|v| -v / r));
    }
    let sub = &xs[..n * samples.min(20_000)];
    let dirs = directions(n);
    let mut cands: Vec<(f64, f64, Vec<f64>)> = Vec::new();
    for dir in &dirs {
        for k in 0..=8 {
            let t = -1.0 + 0.25 * k as f64;
            let (t, phi) = onto_sphere(t, dir);
            cands.push((mc_mean(sub, n, t, &phi), t, phi));
        }
        for k in 0..4 {
            let r = 0.25 * k as f64;
            cands.push((mc_mean(sub, n, 1.0, &geometry::scaled(dir, r)), 1.0, geometry::scaled(dir, r)));
        }
    }
    cands.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    for (_, t0, phi0) in cands.into_iter().take(3) {
        let (mut t, mut phi) = (t0, phi0);
        let mut val = mc_mean(&xs, n, t, &phi);
        let mut step = 0.1;
        while step > 1e-3 {
            let mut improved = false;
            for i in 0..=n {
                for s in [1.0, -1.0] {
                    let (mut t2, mut p2) = (t, phi.clone());
                    if i == 0 {
                        t2 += s * step;
                    } else {
                        p2[i - 1] += s * step;
                    }
                    let (t2, p2) = onto_sphere(t2, &p2);
                    let v = mc_mean(&xs, n, t2, &p2);
                    if v < val {
                        (t, phi, val) = (t2, p2, v);
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        if best.as_ref().is_none_or(|b| val < b.0) {
            best = Some((val, t, phi));
        }
    }
    let (estimate, t, phi) = best.expect("at least one candidate");
    // Antithetic partners are correlated, so the error is taken over pair means.
    let pairs = samples / 2;
    let mut sq = 0.0;
    for p in xs.chunks_exact(2 * n) {
        let v = 0.5 * ((t + dot(&phi, &p[..n])).abs() + (t + dot(&phi, &p[n..])).abs()) - estimate;
        sq += v * v;
    }
    let stderr = (sq / (pairs.max(2) - 1) as f64).sqrt() / (pairs as f64).sqrt();
    let analytic = match n {
        1 => Some(1.0),
        2 => Some(2.0 / std::f64::consts::PI),
        3 => Some(0.5),
        _ => None,
    };
    let mut h = vec![t];
    h.extend(phi);
    Ok(MonteCarloEstimate { estimate, stderr, analytic, h, samples, seed })
}

/// `|G|^{-1} Σ_T μ^T`, coincident atoms merged, atoms sorted by coordinates.
pub fn symmetrize(system: &GptSystem, mu: &SimpleMeasure, group: &[LinearMap]) -> Result<SimpleMeasure> {
    if mu.system() != system.id() {
        return Err(GptError::TagMismatch("measure is not over the given system".into()));
    }
    if group.is_empty() {
        return invalid("group must contain at least the identity");
    }
    if system.ball_norm() == Some(BallNorm::L2) {
        return Err(GptError::NotPolytopic);
    }
    for (k, t) in group.iter().enumerate() {
        if system.permutation_of(t).is_none() {
            return Err(GptError::NotASymmetry(format!("group element {k} does not permute the vertices")));
        }
    }
    let mut merged: Vec<(f64, Vec<f64>)> = Vec::new();
    let g = group.len() as f64;
    for t in group {
        for (w, rho) in &mu.atoms {
            let img = t.apply(rho.coords());
            match merged.iter_mut().find(|(_, p)| geometry::dist_inf(p, &img) <= 1e-9) {
                Some(slot) => slot.0 += w / g,
                None => merged.push((w / g, img)),
            }
        }
    }
    merged.sort_by(|a, b| {
        a.1.iter()
            .zip(&b.1)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let atoms = merged
        .into_iter()
        .map(|(w, p)| Ok((w, system.vector(p)?)))
        .collect::<Result<Vec<_>>>()?;
    SimpleMeasure::new(system, atoms)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_vertices(sys: &GptSystem) -> SimpleMeasure {
        let m = sys.vertices().len();
        SimpleMeasure::on_vertices(sys, &vec![1.0 / m as f64; m]).unwrap()
    }

    #[test]
    fn square_choquet_example() {
        let sq = GptSystem::square();
        let nu = SimpleMeasure::new(
            &sq,
            vec![(0.5, sq.vector(vec![1.0, 1.0, 0.0]).unwrap()), (0.5, sq.vector(vec![1.0, -1.0, 0.0]).unwrap())],
        )
        .unwrap();
        let mu = uniform_vertices(&sq);
        match choquet_below(&sq, &nu, &mu).unwrap() {
            ChoquetVerdict::Below { response } => {
                for (j, v) in sq.vertices().iter().enumerate() {
                    let expect = if v[1] > 0.0 { 1.0 } else { 0.0 };
                    assert!((response[j][0] - expect).abs() < 1e-9);
                }
            }
            other => panic!("{other:?}"),
        }
        assert!(dichotomic_violation(&sq, &nu, &mu).unwrap().is_none());
        let delta = SimpleMeasure::dirac(&sq, sq.center()).unwrap();
        assert!(choquet_below(&sq, &delta, &mu).unwrap().is_below());
        assert!(choquet_below(&sq, &mu, &mu).unwrap().is_below());
        match choquet_below(&sq, &mu, &delta).unwrap() {
            ChoquetVerdict::NotBelow { functionals } => {
                let gs: Vec<Vec<f64>> = functionals.iter().map(|f| f.coords().to_vec()).collect();
                assert!(dual_gap(&mu, &delta, &gs) > 1e-9);
            }
            other => panic!("{other:?}"),
        }
        let dc = choquet_below_dual_check(&sq, &mu, &delta, 200, 0).unwrap();
        assert!(!dc.passed);
        assert!(choquet_below_dual_check(&sq, &mu, &mu, 200, 0).unwrap().passed);
    }

    #[test]
    fn c_mu_examples() {
        let sq = GptSystem::square();
        let c = c_mu(&sq, &sq.center(), &uniform_vertices(&sq)).unwrap();
        assert!((c.value - 0.5).abs() < 1e-9, "{}", c.value);
        let (n, _) = sq.sigma_base_norm(&c.h, &sq.center()).unwrap();
        assert!((n - 1.0).abs() < 1e-9);
        let delta = SimpleMeasure::dirac(&sq, sq.center()).unwrap();
        assert!(c_mu(&sq, &sq.center(), &delta).unwrap().value.abs() < 1e-9);
        let bit = GptSystem::simplex(2).unwrap();
        let c = c_mu(&bit, &bit.barycenter(), &uniform_vertices(&bit)).unwrap();
        assert!((c.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn co_norm_max_examples() {
        let sq = GptSystem::square();
        let h = sq.functional(vec![0.0, 0.5, 0.5]).unwrap();
        let (v, nu) = co_norm_max(&sq, &sq.center(), &h).unwrap();
        assert!((v - 1.0).abs() < 1e-9);
        assert!((nu.integral_abs(h.coords()) - 1.0).abs() < 1e-9);
        assert!(nu.barycenter().max_abs_diff(&sq.center()) < 1e-9);
        let zero = sq.functional(vec![0.0; 3]).unwrap();
        assert_eq!(co_norm_max(&sq, &sq.center(), &zero).unwrap().0, 0.0);
    }

    #[test]
    fn symmetrize_vertex_orbit() {
        let sq = GptSystem::square();
        let group = sq.symmetries(&sq.center()).unwrap();
        let mu = SimpleMeasure::dirac(&sq, sq.vertex(0)).unwrap();
        let s = symmetrize(&sq, &mu, &group).unwrap();
        assert!(s.approx_eq(&uniform_vertices(&sq), 1e-12));
        let s2 = symmetrize(&sq, &s, &group).unwrap();
        assert!(s2.approx_eq(&s, 1e-12));
        let id = [LinearMap::identity(3)];
        assert!(symmetrize(&sq, &mu, &id).unwrap().approx_eq(&mu, 0.0));
    }

    #[test]
    fn monte_carlo_small() {
        let e = c_mu_monte_carlo(1, 1000, 0).unwrap();
        assert!((e.estimate - 1.0).abs() < 1e-9);
        let e = c_mu_monte_carlo(2, 50_000, 0).unwrap();
        assert!((e.estimate - 2.0 / std::f64::consts::PI).abs() < 0.01, "{e:?}");
    }
}
