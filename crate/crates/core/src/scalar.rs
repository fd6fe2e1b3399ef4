//! The field abstraction shared by the generic linear algebra.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::{FromPrimitive, One, Signed, Zero};

use crate::Rational;

/// A field element the generic determinant and ratio code can work with.
///
/// Only arithmetic and a pivot-selection weight are needed: floating types
/// pivot on magnitude, exact types on "nonzero-ness". `from_f64` is used for
/// factorials and other small exact constants.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + FromPrimitive
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    /// Magnitude used for partial pivoting and for cluster merging.
    fn magnitude(&self) -> f64;

    /// Converts a small integer (factorials, binomials) exactly where possible.
    fn from_int(n: i64) -> Self {
        Self::from_i64(n).expect("integer representable in scalar type")
    }
}

impl Scalar for f64 {
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Scalar for f32 {
    fn magnitude(&self) -> f64 {
        f64::from(self.abs())
    }
}

impl Scalar for Complex<f64> {
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

impl Scalar for Complex<f32> {
    fn magnitude(&self) -> f64 {
        f64::from(self.norm())
    }
}

impl Scalar for Rational {
    /// Exact arithmetic needs no numerical pivoting; any nonzero pivot is
    /// exact, but a magnitude proxy keeps the choice deterministic.
    fn magnitude(&self) -> f64 {
        use num_traits::ToPrimitive;
        self.abs().to_f64().unwrap_or(f64::INFINITY)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    #[test]
    fn magnitudes() {
        assert_eq!((-2.5f64).magnitude(), 2.5);
        assert_eq!(Complex::new(3.0f64, 4.0).magnitude(), 5.0);
        let q = Rational::new(BigInt::from(-3), BigInt::from(4));
        assert_eq!(q.magnitude(), 0.75);
    }

    #[test]
    fn from_int_is_exact_for_rationals() {
        let q = Rational::from_int(120);
        assert_eq!(q, Rational::from_integer(BigInt::from(120)));
    }
}
