//! Scalar abstraction for the closed-form and spectral computations.
//!
//! Everything in [`crate::model`] and [`crate::malthus`] is generic over a
//! floating-point scalar so the same formulas run in `f32` or `f64`. The
//! simulator and estimators are pinned to `f64`: event clocks are 64-bit by
//! contract and the random streams produce `f64` variates.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating-point scalar used by the numerical core.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant; panics only if the target type cannot
    /// represent finite `f64` values at all.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 constant must convert")
    }

    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize must convert")
    }
}

impl Real for f32 {}
impl Real for f64 {}
