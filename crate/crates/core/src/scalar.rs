//! Scalar abstractions.
//!
//! The probability algebra and the classification machinery only need an
//! ordered field, so they are written against [`Scalar`] and work unchanged
//! with `f32`, `f64` and exact rationals. Divergences and the numerical
//! solvers need logarithms and square roots and are written against [`Real`].

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Float, FromPrimitive, Num, Signed, ToPrimitive};

/// An ordered field usable for probability masses.
pub trait Scalar:
    Num + Signed + Clone + PartialOrd + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Machine epsilon of the representation, zero for exact types.
    const UNIT_ROUNDOFF: f64;

    /// Converts an `f64` literal. Panics only on NaN or infinity.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).unwrap_or_else(|| panic!("{x} is not representable"))
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count is representable")
    }

    /// Lossy view as `f64`, used for reporting and tolerance checks.
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn is_finite_value(&self) -> bool {
        self.to_f64_lossy().is_finite()
    }

    /// Tolerance for accepting a mass vector as normalized.
    ///
    /// `1e-12` for `f64` and exact types; widened to a few ulps of the sum
    /// for narrower floats where `1e-12` is below representable precision.
    fn normalization_tol() -> Self {
        Self::lit(1e-12_f64.max(64.0 * Self::UNIT_ROUNDOFF))
    }

    /// Largest drift that is repaired by renormalization instead of rejected.
    fn renormalization_limit() -> Self {
        Self::lit(1e-9_f64.max(4096.0 * Self::UNIT_ROUNDOFF))
    }

    /// Tolerance for comparing two class-weighted masses as tied.
    fn tie_tol() -> Self {
        Self::normalization_tol()
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }
}

impl Scalar for f64 {
    const UNIT_ROUNDOFF: f64 = f64::EPSILON;
}

impl Scalar for f32 {
    const UNIT_ROUNDOFF: f64 = f32::EPSILON as f64;
}

impl Scalar for BigRational {
    const UNIT_ROUNDOFF: f64 = 0.0;
}

impl Scalar for Ratio<i64> {
    const UNIT_ROUNDOFF: f64 = 0.0;
}

/// A floating-point [`Scalar`].
pub trait Real: Scalar + Float {
    /// Smallest admissible pivot magnitude in the dense simplex.
    fn pivot_tol() -> Self {
        Self::lit(Self::UNIT_ROUNDOFF.powf(0.55))
    }

    /// Reduced costs above `-cost_tol` count as nonnegative.
    fn cost_tol() -> Self {
        Self::lit(Self::UNIT_ROUNDOFF.powf(0.7))
    }

    /// Residual infeasibility accepted at the end of phase one.
    fn feasibility_tol() -> Self {
        Self::lit(Self::UNIT_ROUNDOFF.powf(0.5) * 0.1)
    }
}

impl Real for f64 {}
impl Real for f32 {}

/// Exact rational from a numerator and denominator.
pub fn exact(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerances_follow_precision() {
        assert_eq!(f64::normalization_tol(), 1e-12);
        assert_eq!(f64::renormalization_limit(), 1e-9);
        assert!(f32::normalization_tol() > 1e-6);
        assert_eq!(BigRational::normalization_tol().to_f64_lossy(), 1e-12);
    }

    #[test]
    fn exact_literals_round_trip() {
        let half = BigRational::lit(0.5);
        assert_eq!(half, exact(1, 2));
        assert_eq!(<f64 as Scalar>::from_count(7), 7.0);
    }
}
