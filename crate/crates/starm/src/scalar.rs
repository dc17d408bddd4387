//! Scalar abstraction for the whole crate.
//!
//! All numerics are generic over [`Scalar`], a closed trait alias over the
//! floating-point types we support (`f32`, `f64`). Tolerances in the crate
//! are stated for `f64`; `f32` works but the documented defaults assume
//! double precision.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar usable everywhere in this crate.
pub trait Scalar:
    Float
    + FloatConst
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Sum<Self>
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Shorthand conversion from an `f64` literal into any [`Scalar`].
#[inline]
pub fn sc<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("f64 -> Scalar conversion")
}

/// Lossy view of any [`Scalar`] as `f64`, for diagnostics and error payloads.
#[inline]
pub fn as_f64<T: Scalar>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
