//! Arithmetic backends for the simplex engine.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

/// An ordered field the simplex engine can pivot over.
///
/// Floating-point backends carry nonzero tolerances; exact backends use zero
/// for every tolerance so that all sign tests are decided exactly.
pub trait Field:
    Clone
    + Debug
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn abs(&self) -> Self;

    /// Smallest pivot magnitude accepted in the ratio test.
    fn pivot_tol() -> Self;
    /// Reduced-cost threshold for optimality.
    fn cost_tol() -> Self;
    /// Tie window for the ratio test.
    fn tie_tol() -> Self;
    /// Pivot magnitude below which a refactorization declares the basis
    /// singular.
    fn lu_tol() -> Self;

    fn is_zero_tol(&self, tol: &Self) -> bool {
        self.abs() <= *tol
    }
}

impl Field for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn pivot_tol() -> Self {
        1e-9
    }
    fn cost_tol() -> Self {
        1e-11
    }
    fn tie_tol() -> Self {
        1e-9
    }
    fn lu_tol() -> Self {
        1e-13
    }
}

impl Field for BigRational {
    const EXACT: bool = true;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        BigRational::from_integer(BigInt::from(1))
    }
    fn from_f64(x: f64) -> Self {
        // Every finite double is a dyadic rational, so this is exact.
        BigRational::from_float(x).expect("finite input")
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn pivot_tol() -> Self {
        Zero::zero()
    }
    fn cost_tol() -> Self {
        Zero::zero()
    }
    fn tie_tol() -> Self {
        Zero::zero()
    }
    fn lu_tol() -> Self {
        Zero::zero()
    }
}
