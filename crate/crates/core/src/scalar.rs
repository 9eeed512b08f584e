//! Scalar abstractions.
//!
//! [`Scalar`] is the minimum needed for the combinatorial and moment code:
//! field arithmetic, ordering and conversions. It is implemented for `f32`,
//! `f64` and exact rationals such as [`num_rational::Rational64`], which lets
//! the closed-form moments be checked against exhaustive enumeration with no
//! rounding at all. [`Real`] adds `Float` for anything that needs square
//! roots, exponentials or an eigensolver.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign, Signed, ToPrimitive};

pub trait Scalar:
    Signed
    + NumAssign
    + Copy
    + PartialOrd
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Exact conversion of a count. Panics only if the type cannot hold it,
    /// which does not happen for graph sizes.
    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count not representable in scalar type")
    }

    /// Conversion from a literal; rationals approximate non-dyadic values.
    #[inline]
    fn of_f64(x: f64) -> Self {
        Self::from_f64(x).expect("value not representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    #[inline]
    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl<T> Scalar for T where
    T: Signed
        + NumAssign
        + Copy
        + PartialOrd
        + FromPrimitive
        + ToPrimitive
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

/// Floating-point scalar: f32 or f64.
pub trait Real: Scalar + Float {}

impl<T> Real for T where T: Scalar + Float {}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    #[test]
    fn rational_conversions_are_exact_for_counts() {
        assert_eq!(Rational64::of_usize(7), Rational64::from_integer(7));
        assert_eq!(Rational64::of_f64(0.25), Rational64::new(1, 4));
        assert_eq!(Rational64::new(3, 4).as_f64(), 0.75);
    }

    #[test]
    fn max_min_helpers() {
        assert_eq!(2.0f64.max_of(3.0), 3.0);
        assert_eq!(2.0f32.min_of(-1.0), -1.0);
        assert_eq!(
            Rational64::new(1, 3).max_of(Rational64::new(1, 2)),
            Rational64::new(1, 2)
        );
    }
}
