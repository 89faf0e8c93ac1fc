//! Scalar abstraction: all numerics in this crate are generic over a
//! floating-point type implementing [`Real`].

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating point scalar used throughout the crate.
///
/// Implemented for `f32` and `f64`. The tolerances quoted in the
/// documentation assume `f64`; with `f32` everything still compiles and
/// runs but the achievable accuracy is correspondingly lower.
pub trait Real:
    'static
    + Send
    + Sync
    + Float
    + FloatConst
    + NumAssign
    + FromPrimitive
    + Default
    + std::fmt::Debug
    + std::fmt::Display
    + std::fmt::LowerExp
{
    /// Lift an `f64` literal into the scalar type.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("literal conversion")
    }

    /// Lift a `usize` into the scalar type.
    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize conversion")
    }

    /// Lower into `f64` (used by serialization paths).
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).expect("f64 conversion")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over the crate scalar.
pub type C<T> = Complex<T>;

/// `i` as a complex constant.
#[inline]
pub fn imag_unit<T: Real>() -> C<T> {
    Complex::new(T::zero(), T::one())
}

/// `e^{i a}` for real `a`.
#[inline]
pub fn cis<T: Real>(a: T) -> C<T> {
    let (s, c) = a.sin_cos();
    Complex::new(c, s)
}
