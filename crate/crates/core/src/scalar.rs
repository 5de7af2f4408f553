//! Scalar abstraction for the closed-form model layer.
//!
//! The algebraic content of the effective models (hopping amplitudes, light
//! shifts, dimer exchange, center-of-mass parameters, power budget) only
//! needs field arithmetic, so those kernels in [`crate::formulas`] are
//! generic over the floating scalar. Solver-bound code (eigensolvers, time
//! steppers) is pinned to `f64` through the [`crate::Real`] alias.

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating scalar usable by the closed-form kernels: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
    /// Lossless embedding of small integer constants.
    fn of(n: i32) -> Self {
        Self::from_i32(n).expect("small integer must embed into scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Complex number over a generic scalar.
pub type CScalar<S> = Complex<S>;
