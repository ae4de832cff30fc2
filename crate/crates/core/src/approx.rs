//! Polytopes inscribed in and circumscribed about the unit ball of a
//! centrally symmetric `l_2` system.

use serde::{Deserialize, Serialize};

use crate::error::invalid;
use crate::geometry;
use crate::gpt::GptSystem;
use crate::Result;

#[derive(Clone, Debug)]
pub struct BallApproximation {
    pub system: GptSystem,
    /// Inscribed: inradius of the polytope. Circumscribed: largest vertex
    /// norm. Either way the ball is sandwiched up to this factor.
    pub factor: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApproxSide {
    Inscribed,
    Circumscribed,
}

/// `ring` equally spaced points on the equator of the unit sphere in `R^n`
/// (`n` = 2 or 3), starting on the first axis, plus the two poles for `n = 3`.
pub fn equator_points(n: usize, ring: usize) -> Result<Vec<Vec<f64>>> {
    if ring < 4 || ring % 4 != 0 {
        return invalid("ring size must be a positive multiple of 4");
    }
    let mut pts: Vec<Vec<f64>> = (0..ring)
        .map(|k| {
            let a = std::f64::consts::TAU * k as f64 / ring as f64;
            let mut p = vec![a.cos(), a.sin()];
            p.resize(n, 0.0);
            p
        })
        .collect();
    match n {
        2 => {}
        3 => {
            pts.push(vec![0.0, 0.0, 1.0]);
            pts.push(vec![0.0, 0.0, -1.0]);
        }
        _ => return invalid("equator point sets are defined for n = 2 or 3"),
    }
    Ok(pts)
}

/// Inscribed polytope with vertices `(1, p)` for unit points `p`.
pub fn inscribed(points: &[Vec<f64>]) -> Result<BallApproximation> {
    let n = points.first().map_or(0, |p| p.len());
    let verts: Vec<Vec<f64>> = points
        .iter()
        .map(|p| {
            let r = geometry::norm2(p);
            let mut v = vec![1.0];
            v.extend(p.iter().map(|x| x / r));
            v
        })
        .collect();
    let mut unit = vec![0.0; n + 1];
    unit[0] = 1.0;
    let system = GptSystem::from_vertices(verts, unit)?;
    // Facet (F_0, F_x) is the half-space F_0 + F_x·x >= 0; its distance
    // from the center is F_0 / |F_x|.
    let factor = system
        .facets()
        .iter()
        .map(|f| f[0] / geometry::norm2(&f[1..]))
        .fold(f64::INFINITY, f64::min);
    Ok(BallApproximation { system, factor })
}

/// Circumscribed polytope cut out by the tangent half-spaces `1 - p·x >= 0`.
pub fn circumscribed(points: &[Vec<f64>]) -> Result<BallApproximation> {
    let n = points.first().map_or(0, |p| p.len());
    let facets: Vec<Vec<f64>> = points
        .iter()
        .map(|p| {
            let r = geometry::norm2(p);
            let mut f = vec![1.0];
            f.extend(p.iter().map(|x| -x / r));
            f
        })
        .collect();
    let mut unit = vec![0.0; n + 1];
    unit[0] = 1.0;
    let system = GptSystem::from_facets(facets, unit)?;
    let factor = system
        .vertices()
        .iter()
        .map(|v| geometry::norm2(&v[1..]))
        .fold(0.0, f64::max);
    Ok(BallApproximation { system, factor })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_approximations_sandwich() {
        let pts = equator_points(2, 16).unwrap();
        let inn = inscribed(&pts).unwrap();
        let out = circumscribed(&pts).unwrap();
        let c = (std::f64::consts::PI / 16.0).cos();
        assert!((inn.factor - c).abs() < 1e-9);
        assert!((out.factor - 1.0 / c).abs() < 1e-9);
        assert!(inn.system.vertices().iter().all(|v| (geometry::norm2(&v[1..]) - 1.0).abs() < 1e-12));
        assert_eq!(out.system.vertices().len(), 16);
    }
}
