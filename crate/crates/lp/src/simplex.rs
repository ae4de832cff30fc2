//! Revised bounded-variable simplex over an explicit basis inverse.
//!
//! Pricing and leaving-variable selection both follow Bland's rule (lowest
//! index first), which makes every run deterministic and cycle-free.

use crate::scalar::Field;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum VarState {
    Basic,
    Lower,
    Upper,
    /// Nonbasic with both bounds infinite.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RunStatus {
    Optimal,
    Unbounded,
}

#[derive(Debug)]
pub(crate) enum EngineError {
    IterationLimit(usize),
    SingularBasis,
}

const REFACTOR_EVERY: usize = 16;

pub(crate) struct Engine<T: Field> {
    m: usize,
    cols: Vec<Vec<T>>,
    b: Vec<T>,
    lower: Vec<Option<T>>,
    upper: Vec<Option<T>>,
    cost: Vec<T>,
    state: Vec<VarState>,
    basis: Vec<usize>,
    x: Vec<T>,
    binv: Vec<Vec<T>>,
    pub(crate) iterations: usize,
    since_refactor: usize,
}

impl<T: Field> Engine<T> {
    /// Creates an engine whose starting basis is `basis`, with `binv` its
    /// inverse. Nonbasic variables must already sit at the values in `x`.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn new(
        m: usize,
        cols: Vec<Vec<T>>,
        b: Vec<T>,
        lower: Vec<Option<T>>,
        upper: Vec<Option<T>>,
        x: Vec<T>,
        basis: Vec<usize>,
        binv: Vec<Vec<T>>,
    ) -> Self {
        let n = cols.len();
        let mut state = Vec::with_capacity(n);
        for j in 0..n {
            let st = match (&lower[j], &upper[j]) {
                (Some(l), _) if x[j] == *l => VarState::Lower,
                (_, Some(u)) if x[j] == *u => VarState::Upper,
                (None, None) => VarState::Free,
                _ => VarState::Lower,
            };
            state.push(st);
        }
        for &j in &basis {
            state[j] = VarState::Basic;
        }
        Engine {
            m,
            cols,
            b,
            lower,
            upper,
            cost: vec![T::zero(); n],
            state,
            basis,
            x,
            binv,
            iterations: 0,
            since_refactor: 0,
        }
    }

    pub(crate) fn n(&self) -> usize {
        self.cols.len()
    }

    pub(crate) fn set_cost(&mut self, cost: Vec<T>) {
        debug_assert_eq!(cost.len(), self.n());
        self.cost = cost;
    }

    pub(crate) fn fix_at_zero(&mut self, j: usize) {
        self.lower[j] = Some(T::zero());
        self.upper[j] = Some(T::zero());
        if self.state[j] != VarState::Basic {
            self.state[j] = VarState::Lower;
            self.x[j] = T::zero();
        }
    }

    pub(crate) fn value(&self, j: usize) -> &T {
        &self.x[j]
    }

    pub(crate) fn objective(&self) -> T {
        let mut acc = T::zero();
        for (c, x) in self.cost.iter().zip(&self.x) {
            acc = acc + c.clone() * x.clone();
        }
        acc
    }

    /// Row prices `pi = c_B^T B^{-1}`.
    pub(crate) fn prices(&self) -> Vec<T> {
        let mut pi = vec![T::zero(); self.m];
        for (i, &bj) in self.basis.iter().enumerate() {
            let cb = &self.cost[bj];
            if *cb == T::zero() {
                continue;
            }
            for (k, p) in pi.iter_mut().enumerate() {
                *p = p.clone() + cb.clone() * self.binv[i][k].clone();
            }
        }
        pi
    }

    fn reduced_cost(&self, j: usize, pi: &[T]) -> T {
        let mut d = self.cost[j].clone();
        for (k, a) in self.cols[j].iter().enumerate() {
            if *a != T::zero() {
                d = d - pi[k].clone() * a.clone();
            }
        }
        d
    }

    /// Lowest-index improving nonbasic column with its direction of motion.
    fn choose_entering(&self, pi: &[T]) -> Option<(usize, bool)> {
        let tol = T::cost_tol();
        let neg_tol = -tol.clone();
        for j in 0..self.n() {
            let st = self.state[j];
            if st == VarState::Basic {
                continue;
            }
            if let (Some(l), Some(u)) = (&self.lower[j], &self.upper[j]) {
                if l == u {
                    continue;
                }
            }
            let d = self.reduced_cost(j, pi);
            match st {
                VarState::Lower if d < neg_tol => return Some((j, true)),
                VarState::Upper if d > tol => return Some((j, false)),
                VarState::Free if d < neg_tol => return Some((j, true)),
                VarState::Free if d > tol => return Some((j, false)),
                _ => {}
            }
        }
        None
    }

    fn column_in_basis(&self, j: usize) -> Vec<T> {
        let col = &self.cols[j];
        let mut alpha = vec![T::zero(); self.m];
        for (i, a) in alpha.iter_mut().enumerate() {
            let row = &self.binv[i];
            let mut acc = T::zero();
            for (k, c) in col.iter().enumerate() {
                if *c != T::zero() {
                    acc = acc + row[k].clone() * c.clone();
                }
            }
            *a = acc;
        }
        alpha
    }

    /// Among rows reaching the minimum ratio (within the tie window), exact
    /// arithmetic takes the lowest basis index (Bland); floating point takes
    /// the largest pivot, which keeps the basis well conditioned.
    fn choose_leaving(&self, cands: Vec<(T, usize, bool)>, alpha: &[T]) -> Option<(T, usize, bool)> {
        let min = cands.iter().map(|c| c.0.clone()).reduce(|a, b| if b < a { b } else { a })?;
        let cutoff = min.clone() + T::tie_tol();
        let mut best: Option<(T, usize, bool)> = None;
        for (limit, i, up) in cands {
            if limit > cutoff {
                continue;
            }
            let better = match &best {
                None => true,
                Some((_, r, _)) if T::EXACT => self.basis[i] < self.basis[*r],
                Some((_, r, _)) => {
                    let (ai, ar) = (alpha[i].abs(), alpha[*r].abs());
                    ai > ar || (ai == ar && self.basis[i] < self.basis[*r])
                }
            };
            if better {
                best = Some((limit, i, up));
            }
        }
        // Step by the exact minimum so no basic variable crosses its bound.
        best.map(|(_, i, up)| (min, i, up))
    }

    pub(crate) fn run(&mut self, max_iter: usize) -> Result<RunStatus, EngineError> {
        loop {
            if self.iterations >= max_iter {
                return Err(EngineError::IterationLimit(self.iterations));
            }
            if !T::EXACT && self.since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
            }
            let pi = self.prices();
            let Some((j, increase)) = self.choose_entering(&pi) else {
                if !T::EXACT && self.since_refactor > 0 {
                    // Confirm optimality on a fresh factorization.
                    self.refactor()?;
                    let pi = self.prices();
                    if self.choose_entering(&pi).is_some() {
                        continue;
                    }
                }
                return Ok(RunStatus::Optimal);
            };
            self.iterations += 1;
            self.since_refactor += 1;

            let alpha = self.column_in_basis(j);
            let ptol = T::pivot_tol();
            // Leaving candidates: (theta, basis row, hits_upper).
            let mut cands: Vec<(T, usize, bool)> = Vec::new();
            for (i, a) in alpha.iter().enumerate() {
                if a.is_zero_tol(&ptol) {
                    continue;
                }
                // Basic variable moves at rate -dir * a per unit theta.
                let rate = if increase { -a.clone() } else { a.clone() };
                let bj = self.basis[i];
                let (limit, hits_upper) = if rate < T::zero() {
                    match &self.lower[bj] {
                        Some(l) => ((self.x[bj].clone() - l.clone()) / (-rate), false),
                        None => continue,
                    }
                } else {
                    match &self.upper[bj] {
                        Some(u) => ((u.clone() - self.x[bj].clone()) / rate, true),
                        None => continue,
                    }
                };
                let limit = if limit < T::zero() { T::zero() } else { limit };
                cands.push((limit, i, hits_upper));
            }
            let best = self.choose_leaving(cands, &alpha);
            let flip = match (&self.lower[j], &self.upper[j]) {
                (Some(l), Some(u)) => Some(u.clone() - l.clone()),
                _ => None,
            };
            let use_flip = match (&flip, &best) {
                (Some(f), Some((t, _, _))) => f <= t,
                (Some(_), None) => true,
                _ => false,
            };
            if !use_flip && best.is_none() {
                return Ok(RunStatus::Unbounded);
            }
            let theta = if use_flip {
                flip.clone().unwrap()
            } else {
                best.as_ref().unwrap().0.clone()
            };
            let step = if increase { theta.clone() } else { -theta.clone() };
            if theta != T::zero() {
                for (i, a) in alpha.iter().enumerate() {
                    if *a != T::zero() {
                        let bj = self.basis[i];
                        self.x[bj] = self.x[bj].clone() - step.clone() * a.clone();
                    }
                }
                self.x[j] = self.x[j].clone() + step;
            }
            if use_flip {
                if increase {
                    self.state[j] = VarState::Upper;
                    self.x[j] = self.upper[j].clone().unwrap();
                } else {
                    self.state[j] = VarState::Lower;
                    self.x[j] = self.lower[j].clone().unwrap();
                }
                continue;
            }
            let (_, r, hits_upper) = best.unwrap();
            let leaving = self.basis[r];
            if hits_upper {
                self.state[leaving] = VarState::Upper;
                self.x[leaving] = self.upper[leaving].clone().unwrap();
            } else {
                self.state[leaving] = VarState::Lower;
                self.x[leaving] = self.lower[leaving].clone().unwrap();
            }
            self.state[j] = VarState::Basic;
            self.basis[r] = j;
            self.pivot(r, &alpha);
        }
    }

    fn pivot(&mut self, r: usize, alpha: &[T]) {
        let piv = alpha[r].clone();
        let m = self.m;
        for k in 0..m {
            self.binv[r][k] = self.binv[r][k].clone() / piv.clone();
        }
        let pivot_row = self.binv[r].clone();
        for (i, a) in alpha.iter().enumerate() {
            if i == r || *a == T::zero() {
                continue;
            }
            let row = &mut self.binv[i];
            for k in 0..m {
                if pivot_row[k] != T::zero() {
                    row[k] = row[k].clone() - a.clone() * pivot_row[k].clone();
                }
            }
        }
    }

    /// Recomputes the basis inverse from scratch and re-solves for the basic
    /// values, discarding accumulated rounding.
    pub(crate) fn refactor(&mut self) -> Result<(), EngineError> {
        let m = self.m;
        let mut a: Vec<Vec<T>> = (0..m)
            .map(|i| self.basis.iter().map(|&j| self.cols[j][i].clone()).collect())
            .collect();
        let mut inv: Vec<Vec<T>> = (0..m)
            .map(|i| (0..m).map(|k| if i == k { T::one() } else { T::zero() }).collect())
            .collect();
        for c in 0..m {
            let mut p = c;
            let mut best = a[c][c].abs();
            for (r, row) in a.iter().enumerate().skip(c + 1) {
                let v = row[c].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best.is_zero_tol(&T::lu_tol()) || best == T::zero() {
                return Err(EngineError::SingularBasis);
            }
            a.swap(c, p);
            inv.swap(c, p);
            let piv = a[c][c].clone();
            for k in 0..m {
                a[c][k] = a[c][k].clone() / piv.clone();
                inv[c][k] = inv[c][k].clone() / piv.clone();
            }
            for r in 0..m {
                if r == c || a[r][c] == T::zero() {
                    continue;
                }
                let f = a[r][c].clone();
                for k in 0..m {
                    a[r][k] = a[r][k].clone() - f.clone() * a[c][k].clone();
                    inv[r][k] = inv[r][k].clone() - f.clone() * inv[c][k].clone();
                }
            }
        }
        // inv is B^{-1} with rows indexed by basis position, since B's
        // columns follow the basis order.
        self.binv = inv;
        let mut rhs = self.b.clone();
        for j in 0..self.n() {
            if self.state[j] == VarState::Basic || self.x[j] == T::zero() {
                continue;
            }
            for (i, a) in self.cols[j].iter().enumerate() {
                rhs[i] = rhs[i].clone() - a.clone() * self.x[j].clone();
            }
        }
        for i in 0..m {
            let mut acc = T::zero();
            for (k, r) in rhs.iter().enumerate() {
                acc = acc + self.binv[i][k].clone() * r.clone();
            }
            let bj = self.basis[i];
            self.x[bj] = acc;
        }
        self.since_refactor = 0;
        Ok(())
    }
}
