//! The real scalar type every numeric routine is generic over.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point element type: `f32` or `f64`.
///
/// Model files and NPY datasets are always `f64`; `f32` is supported for
/// in-memory work where the reduced precision is acceptable.
pub trait Scalar:
    Float
    + FromPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal into this scalar type.
    fn real(x: f64) -> Self;

    fn as_f64(self) -> f64;
}

impl Scalar for f32 {
    #[inline]
    fn real(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    #[inline]
    fn real(x: f64) -> Self {
        x
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

/// Converts a count into the scalar type.
#[inline]
pub(crate) fn count<T: Scalar>(n: usize) -> T {
    T::real(n as f64)
}

pub(crate) fn mean<T: Scalar>(values: &[T]) -> T {
    if values.is_empty() {
        return T::zero();
    }
    values.iter().copied().sum::<T>() / count(values.len())
}

/// Population variance (divisor n), two-pass.
pub(crate) fn variance<T: Scalar>(values: &[T]) -> T {
    if values.is_empty() {
        return T::zero();
    }
    sum_sq_dev(values) / count(values.len())
}

/// Sum of squared deviations from the mean, two-pass.
pub(crate) fn sum_sq_dev<T: Scalar>(values: &[T]) -> T {
    let m = mean(values);
    values.iter().map(|&v| (v - m) * (v - m)).sum()
}
