//! Scalar abstraction shared by every numerical module.
//!
//! All math in this crate is written against [`Scalar`], which `f32` and `f64`
//! implement. Scenario files, the CLI and result bundles are `f64` only.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type usable by the kinematics, consensus and allocation code.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Every `Scalar` can represent (a rounding of) any finite `f64`.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    /// Lossy conversion back to `f64` for logging and serialization.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle<T: Scalar>(angle: T) -> T {
    let pi = T::PI();
    let two_pi = pi + pi;
    let mut a = angle % two_pi;
    if a <= -pi {
        a = a + two_pi;
    } else if a > pi {
        a = a - two_pi;
    }
    a
}

/// `sat(x / width)`: the boundary-layer approximation of `sign(x)`.
///
/// A zero width gives the exact sign function with `sign(0) = 0`.
pub fn smoothed_sign<T: Scalar>(x: T, width: T) -> T {
    if width > T::zero() {
        (x / width).max(-T::one()).min(T::one())
    } else if x > T::zero() {
        T::one()
    } else if x < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}
