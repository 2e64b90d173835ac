//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar the model is evaluated in: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from a literal. Every value passed here is representable
    /// (or close enough) in both supported widths.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal fits the scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize fits the scalar type")
    }

    /// Nearest scalar to an exact rational.
    fn from_rational(q: &BigRational) -> Self {
        Self::lit(rational_to_f64(q))
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Rounds a big rational to the nearest `f64`, surviving numerators and
/// denominators that do not fit a float on their own.
pub(crate) fn rational_to_f64(q: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (q.numer().to_f64(), q.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    // Scale so that the quotient carries 64 significant bits.
    let nb = q.numer().bits() as i64;
    let db = q.denom().bits() as i64;
    let shift = 64 - (nb - db);
    let scaled = if shift >= 0 {
        (q.numer() << shift as usize) / q.denom()
    } else {
        q.numer() / (q.denom() << (-shift) as usize)
    };
    let mantissa: f64 = scaled.to_f64().unwrap_or(0.0);
    mantissa * 2f64.powi(-shift as i32)
}

pub(crate) fn rational_from_int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}
