//! Floating-point scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar usable throughout the crate: `f32` or `f64`.
///
/// Each precision carries its own tolerances. `ALGEBRAIC_TOL` bounds
/// round-off in exact identities (unitarity, normalisation); `GEOMETRIC_TOL`
/// bounds derived geometric quantities such as Bloch-vector lengths and
/// the gimbal-lock threshold of the Euler decomposition.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    const ALGEBRAIC_TOL: f64;
    const GEOMETRIC_TOL: f64;

    /// Lossy conversion from `f64`. Total for finite inputs.
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable in every Scalar")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }

    #[inline]
    fn algebraic_tol() -> Self {
        Self::of(Self::ALGEBRAIC_TOL)
    }

    #[inline]
    fn geometric_tol() -> Self {
        Self::of(Self::GEOMETRIC_TOL)
    }

    #[inline]
    fn half() -> Self {
        Self::of(0.5)
    }

    #[inline]
    fn two() -> Self {
        Self::of(2.0)
    }
}

impl Scalar for f64 {
    const ALGEBRAIC_TOL: f64 = 1e-12;
    const GEOMETRIC_TOL: f64 = 1e-9;
}

impl Scalar for f32 {
    const ALGEBRAIC_TOL: f64 = 1e-5;
    const GEOMETRIC_TOL: f64 = 1e-4;
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle<T: Scalar>(theta: T) -> T {
    let two_pi = T::TAU();
    let mut a = theta % two_pi;
    if a <= -T::PI() {
        a = a + two_pi;
    } else if a > T::PI() {
        a = a - two_pi;
    }
    a
}
