//! Scalar abstraction for the numerical core.
//!
//! Every algorithm in this crate is written against the [`Real`] trait so the
//! same code runs at `f32` or `f64` precision (or any other scalar satisfying
//! the bounds). The crate root exports `f64` aliases for the common entry
//! points, which is what the CLI and the reference results use.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Scalar type the numerical core is generic over.
///
/// The bounds combine nalgebra's `RealField` (field operations, comparisons,
/// `sqrt`/`ln`/`exp`, linear-algebra support) with `num-traits` conversions so
/// literal constants and distribution quantiles (computed in `f64`) can be
/// lifted into the working precision.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Default + std::iter::Sum<Self>
{
}

impl<T> Real for T where
    T: RealField + Copy + FromPrimitive + ToPrimitive + Default + std::iter::Sum<T>
{
}

/// Lift an `f64` constant into the generic scalar type.
///
/// Panics only if the target type cannot represent ordinary finite constants,
/// which no admissible `Real` implementation does.
#[inline]
pub(crate) fn cast<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("finite f64 constant must be representable")
}

/// Round a scalar to the nearest integer, half away from zero, and return it
/// as `usize`. Mirrors the rounding used for the automatic `d_max` and
/// truncation-lag defaults.
#[inline]
pub(crate) fn round_usize<T: Real>(x: T) -> usize {
    let v = x.to_f64().expect("scalar convertible to f64");
    v.round() as usize
}
