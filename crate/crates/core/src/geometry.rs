//! Dense linear algebra and brute-force polytope enumeration in small
//! dimension.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::guards::{self, Guards};

pub(crate) const EPS: f64 = 1e-9;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn axpy(acc: &mut [f64], alpha: f64, x: &[f64]) {
    for (a, x) in acc.iter_mut().zip(x) {
        *a += alpha * x;
    }
}

pub(crate) fn scaled(x: &[f64], alpha: f64) -> Vec<f64> {
    x.iter().map(|v| v * alpha).collect()
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub(crate) fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub(crate) fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

pub(crate) fn dist_inf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

pub(crate) fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// Solves the square system `rows * x = rhs`; `None` if it is numerically singular.
pub(crate) fn solve_square(rows: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = rhs.len();
    let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let scale = m.amax().max(1e-300);
    let svd = m.clone().svd(false, false);
    let smin = svd.singular_values.min();
    if smin <= 1e-10 * scale {
        return None;
    }
    let x = m.lu().solve(&DVector::from_column_slice(rhs))?;
    Some(x.iter().copied().collect())
}

pub(crate) fn rank(rows: &[Vec<f64>], dim: usize) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(rows.len(), dim, |i, j| rows[i][j]);
    let scale = m.amax().max(1e-300);
    m.svd(false, false).singular_values.iter().filter(|s| **s > 1e-9 * scale).count()
}

/// Unit vector spanning the kernel of `rows` when that kernel is one-dimensional.
pub(crate) fn kernel_vector(rows: &[Vec<f64>], dim: usize) -> Option<Vec<f64>> {
    // Pad to a square matrix so the SVD exposes the full right singular basis.
    let n = rows.len().max(dim);
    let m = DMatrix::from_fn(n, dim, |i, j| if i < rows.len() { rows[i][j] } else { 0.0 });
    let scale = m.amax().max(1e-300);
    let svd = m.svd(false, true);
    let v_t = svd.v_t?;
    let sv = &svd.singular_values;
    let mut small = Vec::new();
    for (k, s) in sv.iter().enumerate() {
        if *s <= 1e-9 * scale {
            small.push(k);
        }
    }
    if small.len() != 1 {
        return None;
    }
    let row = v_t.row(small[0]);
    Some(clean(row.iter().copied().collect()))
}

/// Rounds entries that are zero up to rounding, and signed zeros, to `0.0`.
pub(crate) fn clean(mut x: Vec<f64>) -> Vec<f64> {
    for v in x.iter_mut() {
        if v.abs() < 1e-13 {
            *v = 0.0;
        }
    }
    x
}

pub(crate) fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    acc as usize
}

/// Calls `f` on every `k`-subset of `0..n` in lexicographic order.
pub(crate) fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) -> Result<()> {
    guards::check("enumeration subsets", binomial(n, k), Guards::current().subsets)?;
    if k > n {
        return Ok(());
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return Ok(());
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Appends `p` unless a point within `tol` (sup norm) is already present.
pub(crate) fn push_unique(points: &mut Vec<Vec<f64>>, p: Vec<f64>, tol: f64) -> bool {
    if points.iter().any(|q| dist_inf(q, &p) <= tol) {
        false
    } else {
        points.push(p);
        true
    }
}

/// Vertices of `{x : a·x <= b for (a, b) in halfspaces, a·x = b for (a, b) in equalities}`.
///
/// Every choice of `dim - equalities.len()` half-spaces is made tight and the
/// resulting square system solved; feasible solutions are kept in
/// enumeration order with duplicates (within `1e-9`) removed.
pub(crate) fn polytope_vertices(
    halfspaces: &[(Vec<f64>, f64)],
    equalities: &[(Vec<f64>, f64)],
    dim: usize,
) -> Result<Vec<Vec<f64>>> {
    let free = dim.saturating_sub(equalities.len());
    let mut out: Vec<Vec<f64>> = Vec::new();
    let scale = 1.0
        + halfspaces
            .iter()
            .chain(equalities)
            .fold(0.0f64, |m, (_, b)| m.max(b.abs()));
    for_each_subset(halfspaces.len(), free, |subset| {
        let mut rows: Vec<Vec<f64>> = equalities.iter().map(|(a, _)| a.clone()).collect();
        let mut rhs: Vec<f64> = equalities.iter().map(|(_, b)| *b).collect();
        for &s in subset {
            rows.push(halfspaces[s].0.clone());
            rhs.push(halfspaces[s].1);
        }
        let Some(x) = solve_square(&rows, &rhs) else { return };
        if halfspaces.iter().all(|(a, b)| dot(a, &x) <= b + EPS * scale) {
            push_unique(&mut out, clean(x), EPS);
        }
    })?;
    Ok(out)
}

/// Facet normals of the cone generated by `gens` (assumed pointed and full
/// dimensional): functionals `F` with `F·g >= 0` for all generators and
/// equality on a set of generators of rank `dim - 1`. Normals are scaled to
/// unit Euclidean length.
pub(crate) fn cone_facets(gens: &[Vec<f64>], dim: usize) -> Result<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    let scale = gens.iter().fold(1.0f64, |m, g| m.max(max_abs(g)));
    for_each_subset(gens.len(), dim - 1, |subset| {
        let rows: Vec<Vec<f64>> = subset.iter().map(|&i| gens[i].clone()).collect();
        let Some(mut f) = kernel_vector(&rows, dim) else { return };
        let vals: Vec<f64> = gens.iter().map(|g| dot(&f, g)).collect();
        let tol = 1e-9 * scale;
        if vals.iter().all(|v| *v >= -tol) {
        } else if vals.iter().all(|v| *v <= tol) {
            f.iter_mut().for_each(|v| *v = -*v);
        } else {
            return;
        }
        let n = norm2(&f);
        let f = clean(scaled(&f, 1.0 / n));
        push_unique(&mut out, f, 1e-9);
    })?;
    Ok(out)
}
