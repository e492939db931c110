//! Scalar abstraction shared by the numeric core.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar the samplers and quadrature routines are generic over (f32 or f64).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into this scalar.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Absolute/relative tolerance floor for adaptive quadrature.
    fn quad_tol() -> Self;

    /// Relative tolerance for generalized inverses.
    fn inverse_tol() -> Self;

    /// Largest `|ln x|` that stays finite and normal.
    fn log_range() -> Self;
}

impl Real for f32 {
    fn quad_tol() -> Self {
        2e-6
    }
    fn inverse_tol() -> Self {
        1e-6
    }
    fn log_range() -> Self {
        85.0
    }
}

impl Real for f64 {
    fn quad_tol() -> Self {
        1e-9
    }
    fn inverse_tol() -> Self {
        1e-10
    }
    fn log_range() -> Self {
        700.0
    }
}
