//! Scalar abstraction for the numeric core.
//!
//! Geometry, grid maps, the reciprocal-avoidance solver, and the network
//! kernel are generic over [`Real`]; the rest of the pipeline uses the
//! concrete [`crate::Scalar`] alias (`f64`) so file formats and training are
//! bit-reproducible.

use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point scalar: `f32` or `f64`.
pub trait Real: num_traits::Float + Debug + Display + Sum + Send + Sync + 'static {
    /// Conversion from `f64` (lossy for `f32`, exact for `f64`).
    fn from_f64(v: f64) -> Self;

    /// Widening conversion to `f64`.
    fn as_f64(self) -> f64;
}

impl Real for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }

    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }

    fn as_f64(self) -> f64 {
        self
    }
}

/// Shorthand for converting an `f64` literal into the generic scalar.
#[inline]
pub fn real<F: Real>(v: f64) -> F {
    F::from_f64(v)
}
