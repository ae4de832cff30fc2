//! Deterministic dense linear programming with certificates.
//!
//! Problems are stated as
//!
//! ```text
//! minimize    c·x
//! subject to  A_eq x  = b_eq
//!             A_le x <= b_le
//!             l <= x <= u        (bounds may be infinite)
//! ```
//!
//! and solved by a two-phase bounded-variable simplex using Bland's rule.
//! Every `Optimal` outcome carries row prices satisfying strong duality and
//! every `Infeasible` outcome carries a Farkas ray; both are re-checked in
//! double precision before they are returned.
//!
//! Row prices follow the convention `d = c - A^T y` for reduced costs, so
//! prices of `<=` rows are non-positive.

mod scalar;
mod simplex;

pub use scalar::Field;

use num_rational::BigRational;
use thiserror::Error;

use simplex::{Engine, EngineError, RunStatus};

/// Primal feasibility tolerance.
pub const FEAS_TOL: f64 = 1e-9;
/// Relative duality-gap tolerance.
pub const GAP_TOL: f64 = 1e-7;
/// Largest instance accepted by the exact-rational backend.
pub const EXACT_MAX_VARS: usize = 64;
/// Largest instance re-solved exactly when a double-precision run fails
/// its certificate check.
pub const FALLBACK_MAX_VARS: usize = 512;
pub const FALLBACK_MAX_ROWS: usize = 128;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("malformed problem: {0}")]
    MalformedProblem(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

pub type Result<T> = std::result::Result<T, LpError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// A dense linear program. Variables default to the bounds `[0, +inf)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub eq_rows: Vec<Vec<f64>>,
    pub eq_rhs: Vec<f64>,
    pub le_rows: Vec<Vec<f64>>,
    pub le_rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LpProblem {
    pub fn new(num_vars: usize) -> Self {
        LpProblem {
            objective: vec![0.0; num_vars],
            eq_rows: Vec::new(),
            eq_rhs: Vec::new(),
            le_rows: Vec::new(),
            le_rhs: Vec::new(),
            lower: vec![0.0; num_vars],
            upper: vec![f64::INFINITY; num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.eq_rows.len() + self.le_rows.len()
    }

    pub fn minimize(mut self, objective: Vec<f64>) -> Self {
        self.objective = objective;
        self
    }

    pub fn set_objective(&mut self, j: usize, c: f64) {
        self.objective[j] = c;
    }

    /// Appends `row·x = rhs` and returns its index among equality rows.
    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) -> usize {
        self.eq_rows.push(row);
        self.eq_rhs.push(rhs);
        self.eq_rows.len() - 1
    }

    /// Appends `row·x <= rhs` and returns its index among inequality rows.
    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64) -> usize {
        self.le_rows.push(row);
        self.le_rhs.push(rhs);
        self.le_rows.len() - 1
    }

    /// Appends `row·x >= rhs`, stored as the negated `<=` row.
    pub fn add_ge(&mut self, row: Vec<f64>, rhs: f64) -> usize {
        self.add_le(row.into_iter().map(|a| -a).collect(), -rhs)
    }

    /// Sparse variant of [`LpProblem::add_eq`].
    pub fn add_eq_sparse(&mut self, entries: &[(usize, f64)], rhs: f64) -> usize {
        let row = self.sparse_row(entries);
        self.add_eq(row, rhs)
    }

    pub fn add_le_sparse(&mut self, entries: &[(usize, f64)], rhs: f64) -> usize {
        let row = self.sparse_row(entries);
        self.add_le(row, rhs)
    }

    fn sparse_row(&self, entries: &[(usize, f64)]) -> Vec<f64> {
        let mut row = vec![0.0; self.num_vars()];
        for &(j, a) in entries {
            row[j] += a;
        }
        row
    }

    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.lower[j] = lower;
        self.upper[j] = upper;
    }

    pub fn set_free(&mut self, j: usize) {
        self.set_bounds(j, f64::NEG_INFINITY, f64::INFINITY);
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        let bad = |msg: String| Err(LpError::MalformedProblem(msg));
        if self.lower.len() != n || self.upper.len() != n {
            return bad(format!("bounds length differs from variable count {n}"));
        }
        if self.eq_rows.len() != self.eq_rhs.len() || self.le_rows.len() != self.le_rhs.len() {
            return bad("row count differs from rhs length".into());
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return bad("non-finite objective entry".into());
        }
        for (kind, rows, rhs) in [
            ("equality", &self.eq_rows, &self.eq_rhs),
            ("inequality", &self.le_rows, &self.le_rhs),
        ] {
            for (i, row) in rows.iter().enumerate() {
                if row.len() != n {
                    return bad(format!("{kind} row {i} has {} entries, expected {n}", row.len()));
                }
                if row.iter().any(|a| !a.is_finite()) || !rhs[i].is_finite() {
                    return bad(format!("{kind} row {i} has a non-finite entry"));
                }
            }
        }
        for j in 0..n {
            let (l, u) = (self.lower[j], self.upper[j]);
            if l.is_nan() || u.is_nan() || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return bad(format!("variable {j} has invalid bounds [{l}, {u}]"));
            }
            if l > u {
                return bad(format!("variable {j} has empty bounds [{l}, {u}]"));
            }
        }
        Ok(())
    }

    /// Largest violation of rows and bounds at `x`.
    pub fn primal_residual(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (row, b) in self.eq_rows.iter().zip(&self.eq_rhs) {
            worst = worst.max((dot(row, x) - b).abs());
        }
        for (row, b) in self.le_rows.iter().zip(&self.le_rhs) {
            worst = worst.max(dot(row, x) - b);
        }
        for (j, &xj) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - xj).max(xj - self.upper[j]);
        }
        worst
    }

    /// Lagrangian dual value `b·y + sum_j min_{l_j <= x_j <= u_j} d_j x_j`
    /// for row prices `y` and objective `c`, with `d = c - A^T y`.
    ///
    /// Returns `-inf` when the prices are not dual feasible.
    pub fn dual_value(&self, c: &[f64], y_eq: &[f64], y_le: &[f64], tol: f64) -> f64 {
        if y_le.iter().any(|&y| y > tol) {
            return f64::NEG_INFINITY;
        }
        let mut d = c.to_vec();
        for (row, y) in self.eq_rows.iter().zip(y_eq).chain(self.le_rows.iter().zip(y_le)) {
            if *y == 0.0 {
                continue;
            }
            for (dj, a) in d.iter_mut().zip(row) {
                *dj -= a * y;
            }
        }
        let mut value = dot(&self.eq_rhs, y_eq) + dot(&self.le_rhs, y_le);
        for (j, dj) in d.iter().enumerate() {
            if *dj > tol {
                if self.lower[j].is_finite() {
                    value += dj * self.lower[j];
                } else {
                    return f64::NEG_INFINITY;
                }
            } else if *dj < -tol {
                if self.upper[j].is_finite() {
                    value += dj * self.upper[j];
                } else {
                    return f64::NEG_INFINITY;
                }
            }
        }
        value
    }

    /// Amount by which a Farkas ray proves infeasibility (positive means proven).
    pub fn farkas_violation(&self, y_eq: &[f64], y_le: &[f64]) -> f64 {
        let zero = vec![0.0; self.num_vars()];
        self.dual_value(&zero, y_eq, y_le, FEAS_TOL)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpOutcome {
    pub status: LpStatus,
    /// Primal point; populated when `Optimal`.
    pub primal: Vec<f64>,
    pub objective_value: f64,
    /// Row prices of equality rows (optimality certificate or Farkas ray).
    pub dual_equality: Vec<f64>,
    /// Row prices of `<=` rows, all non-positive.
    pub dual_inequality: Vec<f64>,
    pub iterations: usize,
}

impl LpOutcome {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub fn is_infeasible(&self) -> bool {
        self.status == LpStatus::Infeasible
    }
}

/// Solves in double precision.
///
/// If the run fails (singular basis, weak certificate) and the instance is
/// small enough, it is re-solved in exact arithmetic on the same data.
pub fn solve(problem: &LpProblem) -> Result<LpOutcome> {
    problem.validate()?;
    let first = solve_generic::<f64>(problem).and_then(|o| verify(problem, &o).map(|_| o));
    match first {
        Ok(mut o) => {
            // Rounding can leave basic values a hair outside their bounds.
            for (j, x) in o.primal.iter_mut().enumerate() {
                *x = x.max(problem.lower[j]).min(problem.upper[j]);
            }
            Ok(o)
        }
        Err(e) if problem.num_vars() <= FALLBACK_MAX_VARS && problem.num_rows() <= FALLBACK_MAX_ROWS => {
            let o = solve_generic::<BigRational>(problem).map_err(|_| e.clone())?;
            verify(problem, &o).map_err(|_| e)?;
            Ok(o)
        }
        Err(e) => Err(e),
    }
}

/// Solves over exact rationals. Inputs are converted exactly from their
/// double values; results are rounded back to doubles.
pub fn solve_exact(problem: &LpProblem) -> Result<LpOutcome> {
    problem.validate()?;
    if problem.num_vars() > EXACT_MAX_VARS {
        return Err(LpError::MalformedProblem(format!(
            "exact mode accepts at most {EXACT_MAX_VARS} variables, got {}",
            problem.num_vars()
        )));
    }
    solve_generic::<BigRational>(problem)
}

/// Zero-objective solve: `Optimal` means `primal` is a feasible point.
pub fn feasibility(
    eq_rows: Vec<Vec<f64>>,
    eq_rhs: Vec<f64>,
    le_rows: Vec<Vec<f64>>,
    le_rhs: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
) -> Result<LpOutcome> {
    let problem = LpProblem {
        objective: vec![0.0; lower.len()],
        eq_rows,
        eq_rhs,
        le_rows,
        le_rhs,
        lower,
        upper,
    };
    solve(&problem)
}

fn scale(problem: &LpProblem) -> f64 {
    1.0 + problem
        .eq_rhs
        .iter()
        .chain(&problem.le_rhs)
        .fold(0.0f64, |m, b| m.max(b.abs()))
}

fn verify(problem: &LpProblem, out: &LpOutcome) -> Result<()> {
    match out.status {
        LpStatus::Optimal => {
            let res = problem.primal_residual(&out.primal);
            if res > FEAS_TOL * scale(problem) {
                return Err(LpError::NumericalFailure(format!(
                    "primal residual {res:e} exceeds tolerance"
                )));
            }
            let dual = problem.dual_value(
                &problem.objective,
                &out.dual_equality,
                &out.dual_inequality,
                1e-9,
            );
            let gap = (out.objective_value - dual).abs();
            if !(gap <= GAP_TOL * (1.0 + out.objective_value.abs())) {
                return Err(LpError::NumericalFailure(format!(
                    "duality gap {gap:e} exceeds tolerance"
                )));
            }
        }
        LpStatus::Infeasible => {
            let v = problem.farkas_violation(&out.dual_equality, &out.dual_inequality);
            if !(v >= FEAS_TOL) {
                return Err(LpError::NumericalFailure(format!(
                    "Farkas certificate too weak ({v:e})"
                )));
            }
        }
        LpStatus::Unbounded => {}
    }
    Ok(())
}

fn iteration_cap(m: usize, n: usize) -> usize {
    100_000 + 50 * (m + n)
}

fn engine_error(e: EngineError) -> LpError {
    match e {
        EngineError::IterationLimit(k) => {
            LpError::NumericalFailure(format!("iteration limit reached after {k} pivots"))
        }
        EngineError::SingularBasis => LpError::NumericalFailure("singular basis".into()),
    }
}

fn solve_generic<T: Field>(p: &LpProblem) -> Result<LpOutcome> {
    let n_s = p.num_vars();
    let m_e = p.eq_rows.len();
    let m_i = p.le_rows.len();
    let m = m_e + m_i;
    let n = n_s + m_i + m;

    let conv_bound = |v: f64| if v.is_finite() { Some(T::from_f64(v)) } else { None };

    let mut cols: Vec<Vec<T>> = Vec::with_capacity(n);
    for j in 0..n_s {
        let col = p
            .eq_rows
            .iter()
            .chain(&p.le_rows)
            .map(|row| T::from_f64(row[j]))
            .collect();
        cols.push(col);
    }
    let mut lower: Vec<Option<T>> = p.lower.iter().map(|&l| conv_bound(l)).collect();
    let mut upper: Vec<Option<T>> = p.upper.iter().map(|&u| conv_bound(u)).collect();
    let b: Vec<T> = p.eq_rhs.iter().chain(&p.le_rhs).map(|&v| T::from_f64(v)).collect();

    let mut x: Vec<T> = Vec::with_capacity(n);
    for j in 0..n_s {
        x.push(match (&lower[j], &upper[j]) {
            (Some(l), _) => l.clone(),
            (None, Some(u)) => u.clone(),
            (None, None) => T::zero(),
        });
    }
    for k in 0..m_i {
        let mut col = vec![T::zero(); m];
        col[m_e + k] = T::one();
        cols.push(col);
        lower.push(Some(T::zero()));
        upper.push(None);
        x.push(T::zero());
    }

    // Residual of the starting point decides which rows need artificials.
    let mut resid = b.clone();
    for j in 0..n_s {
        if x[j] == T::zero() {
            continue;
        }
        for (i, a) in cols[j].iter().enumerate() {
            resid[i] = resid[i].clone() - a.clone() * x[j].clone();
        }
    }
    let mut basis = Vec::with_capacity(m);
    let mut binv = vec![vec![T::zero(); m]; m];
    let mut phase1_cost = vec![T::zero(); n];
    let art0 = n_s + m_i;
    let mut any_art = false;
    for i in 0..m {
        let nonneg = resid[i] >= T::zero();
        let mut col = vec![T::zero(); m];
        col[i] = if nonneg { T::one() } else { -T::one() };
        cols.push(col);
        lower.push(Some(T::zero()));
        if i >= m_e && nonneg {
            // Slack starts basic; the artificial is pinned at zero.
            upper.push(Some(T::zero()));
            x.push(T::zero());
            let s = n_s + (i - m_e);
            x[s] = resid[i].clone();
            basis.push(s);
            binv[i][i] = T::one();
        } else {
            upper.push(None);
            x.push(resid[i].abs());
            basis.push(art0 + i);
            binv[i][i] = if nonneg { T::one() } else { -T::one() };
            phase1_cost[art0 + i] = T::one();
            any_art = true;
        }
    }

    let cap = iteration_cap(m, n);
    let mut engine = Engine::new(m, cols, b, lower, upper, x, basis, binv);
    if any_art {
        engine.set_cost(phase1_cost);
        engine.run(cap).map_err(engine_error)?;
        let infeas = engine.objective();
        let threshold = if T::EXACT {
            T::zero()
        } else {
            T::from_f64(FEAS_TOL * scale(p))
        };
        if infeas > threshold {
            let pi = engine.prices();
            let mut y: Vec<f64> = pi.iter().map(|v| v.to_f64()).collect();
            let norm = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if norm > 0.0 {
                for v in &mut y {
                    *v /= norm;
                }
            }
            let (y_eq, y_le) = y.split_at(m_e);
            return Ok(LpOutcome {
                status: LpStatus::Infeasible,
                primal: Vec::new(),
                objective_value: f64::NAN,
                dual_equality: y_eq.to_vec(),
                dual_inequality: y_le.iter().map(|v| v.min(0.0)).collect(),
                iterations: engine.iterations,
            });
        }
    }
    for i in 0..m {
        engine.fix_at_zero(art0 + i);
    }
    let mut cost = vec![T::zero(); n];
    for (j, c) in p.objective.iter().enumerate() {
        cost[j] = T::from_f64(*c);
    }
    engine.set_cost(cost);
    let status = engine.run(cap).map_err(engine_error)?;
    if status == RunStatus::Unbounded {
        return Ok(LpOutcome {
            status: LpStatus::Unbounded,
            primal: Vec::new(),
            objective_value: f64::NEG_INFINITY,
            dual_equality: Vec::new(),
            dual_inequality: Vec::new(),
            iterations: engine.iterations,
        });
    }
    let primal: Vec<f64> = (0..n_s).map(|j| engine.value(j).to_f64()).collect();
    let pi: Vec<f64> = engine.prices().iter().map(|v| v.to_f64()).collect();
    let (y_eq, y_le) = pi.split_at(m_e);
    let objective_value = engine.objective().to_f64();
    Ok(LpOutcome {
        status: LpStatus::Optimal,
        primal,
        objective_value,
        dual_equality: y_eq.to_vec(),
        dual_inequality: y_le.iter().map(|v| v.min(0.0)).collect(),
        iterations: engine.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_variable_lower_bound() {
        let mut p = LpProblem::new(1).minimize(vec![1.0]);
        p.set_bounds(0, 3.0, f64::INFINITY);
        let out = solve(&p).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.objective_value - 3.0).abs() < 1e-12);
        assert!((out.primal[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let mut p = LpProblem::new(1);
        p.add_le(vec![1.0], -1.0);
        let out = solve(&p).unwrap();
        assert_eq!(out.status, LpStatus::Infeasible);
        assert!(p.farkas_violation(&out.dual_equality, &out.dual_inequality) >= FEAS_TOL);
    }

    #[test]
    fn triangle_vertex_optimum() {
        // Vertices (0,0), (1,0), (0,1) give objective 0, -1, -1.
        let mut p = LpProblem::new(2).minimize(vec![-1.0, -1.0]);
        p.add_le(vec![1.0, 1.0], 1.0);
        let out = solve(&p).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.objective_value + 1.0).abs() < 1e-12);
        let dual = p.dual_value(&p.objective, &out.dual_equality, &out.dual_inequality, 1e-12);
        assert!((dual + 1.0).abs() < 1e-12);
    }

    #[test]
    fn feasibility_examples() {
        let out = feasibility(vec![vec![1.0]], vec![1.0], vec![], vec![], vec![0.0], vec![2.0]).unwrap();
        assert!(out.is_optimal());
        assert!((out.primal[0] - 1.0).abs() < 1e-12);
        let out = feasibility(vec![vec![1.0]], vec![3.0], vec![], vec![], vec![0.0], vec![2.0]).unwrap();
        assert!(out.is_infeasible());
    }

    #[test]
    fn unbounded_ray() {
        let mut p = LpProblem::new(2).minimize(vec![-1.0, 0.0]);
        p.add_le(vec![-1.0, 1.0], 1.0);
        assert_eq!(solve(&p).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn free_variables_and_redundant_rows() {
        let mut p = LpProblem::new(2).minimize(vec![1.0, 2.0]);
        p.set_free(0);
        p.set_free(1);
        p.add_eq(vec![1.0, 1.0], 2.0);
        p.add_eq(vec![2.0, 2.0], 4.0);
        p.add_ge(vec![1.0, -1.0], -4.0);
        let out = solve(&p).unwrap();
        // On x + y = 2 the objective is 2 + y with y unbounded below.
        assert_eq!(out.status, LpStatus::Unbounded);
        p.set_bounds(1, -1.0, 5.0);
        let out = solve(&p).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.objective_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        let mut p = LpProblem::new(2);
        p.add_eq(vec![1.0], 1.0);
        assert!(matches!(solve(&p), Err(LpError::MalformedProblem(_))));
        let mut p = LpProblem::new(1);
        p.add_eq(vec![f64::NAN], 1.0);
        assert!(matches!(solve(&p), Err(LpError::MalformedProblem(_))));
    }

    #[test]
    fn exact_mode_matches_on_examples() {
        let mut p = LpProblem::new(2).minimize(vec![-1.0, -1.0]);
        p.add_le(vec![1.0, 1.0], 1.0);
        let out = solve_exact(&p).unwrap();
        assert_eq!(out.objective_value, -1.0);
        let mut q = LpProblem::new(1);
        q.add_le(vec![1.0], -1.0);
        assert_eq!(solve_exact(&q).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn repeated_solves_are_bit_identical() {
        let mut p = LpProblem::new(3).minimize(vec![0.3, -0.7, 0.1]);
        p.add_le(vec![1.0, 2.0, -1.0], 1.5);
        p.add_le(vec![-0.5, 1.0, 1.0], 0.25);
        p.add_eq(vec![1.0, 1.0, 1.0], 1.0);
        let a = solve(&p).unwrap();
        let b = solve(&p).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }
}
