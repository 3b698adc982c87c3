use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::Float;

/// Floating-point element type of the encoder. `f64` is the reference
/// precision; `f32` is the reduced precision used for throughput
/// measurements only.
pub trait Real:
    LinalgScalar
    + ScalarOperand
    + Float
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    const DTYPE: &'static str;
    fn lit(x: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Real for f64 {
    const DTYPE: &'static str = "f64";
    fn lit(x: f64) -> Self {
        x
    }
    fn as_f64(self) -> f64 {
        self
    }
}

impl Real for f32 {
    const DTYPE: &'static str = "f32";
    fn lit(x: f64) -> Self {
        x as f32
    }
    fn as_f64(self) -> f64 {
        self as f64
    }
}
