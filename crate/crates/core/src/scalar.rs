//! Scalar abstraction shared by the numerical modules.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type the estimators are generic over: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Lossy conversion from `f64`, used for constants.
    #[inline]
    fn of(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 constant representable")
    }

    #[inline]
    fn of_usize(x: usize) -> Self {
        <Self as FromPrimitive>::from_usize(x).expect("count representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// `x * ln(x)` with the `0 ln 0 = 0` convention.
    #[inline]
    fn xlogx(self) -> Self {
        if self <= Self::zero() {
            Self::zero()
        } else {
            self * self.ln()
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
