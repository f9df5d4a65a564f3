use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive};

/// Floating-point element type shared by the model kernels.
///
/// Training runs in `f32`; gradient checks and the theory module use `f64`.
pub trait Real:
    Float
    + LinalgScalar
    + ScalarOperand
    + FromPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Send
    + Sync
    + 'static
{
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("finite conversion")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("finite conversion")
    }
}

impl<T> Real for T where
    T: Float
        + LinalgScalar
        + ScalarOperand
        + FromPrimitive
        + Sum
        + Debug
        + Display
        + Default
        + AddAssign
        + SubAssign
        + MulAssign
        + DivAssign
        + Send
        + Sync
        + 'static
{
}

/// Largest absolute elementwise difference of two equally shaped matrices.
pub fn max_abs_diff<F: Real>(a: &ndarray::Array2<F>, b: &ndarray::Array2<F>) -> F {
    assert_eq!(a.dim(), b.dim(), "shape mismatch");
    a.iter()
        .zip(b.iter())
        .fold(F::zero(), |m, (&x, &y)| m.max((x - y).abs()))
}
