//! Small helpers for real and complex 3-vectors.
//!
//! Vectors are plain `[T; 3]` / `[Complex<T>; 3]` arrays; the functions
//! here keep the call sites free of index juggling.

use crate::scalar::{Real, C};
use num_complex::Complex;

/// Real 3-vector.
pub type R3<T> = [T; 3];
/// Complex 3-vector.
pub type C3<T> = [C<T>; 3];

#[inline]
pub fn zero3<T: Real>() -> R3<T> {
    [T::zero(); 3]
}

#[inline]
pub fn czero3<T: Real>() -> C3<T> {
    [Complex::new(T::zero(), T::zero()); 3]
}

#[inline]
pub fn dot<T: Real>(a: &R3<T>, b: &R3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross<T: Real>(a: &R3<T>, b: &R3<T>) -> R3<T> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm2<T: Real>(a: &R3<T>) -> T {
    dot(a, a)
}

#[inline]
pub fn norm<T: Real>(a: &R3<T>) -> T {
    norm2(a).sqrt()
}

#[inline]
pub fn scale<T: Real>(a: &R3<T>, s: T) -> R3<T> {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn add<T: Real>(a: &R3<T>, b: &R3<T>) -> R3<T> {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub<T: Real>(a: &R3<T>, b: &R3<T>) -> R3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Unit vector along `a`; `None` when `a` vanishes.
#[inline]
pub fn unit<T: Real>(a: &R3<T>) -> Option<R3<T>> {
    let n = norm(a);
    if n == T::zero() {
        None
    } else {
        Some(scale(a, n.recip()))
    }
}

#[inline]
pub fn complexify<T: Real>(a: &R3<T>) -> C3<T> {
    [
        Complex::new(a[0], T::zero()),
        Complex::new(a[1], T::zero()),
        Complex::new(a[2], T::zero()),
    ]
}

#[inline]
pub fn cadd<T: Real>(a: &C3<T>, b: &C3<T>) -> C3<T> {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn csub<T: Real>(a: &C3<T>, b: &C3<T>) -> C3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn cscale<T: Real>(a: &C3<T>, s: C<T>) -> C3<T> {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Conjugate pairing `conj(a) . b` of two complex 3-vectors.
#[inline]
pub fn cdot<T: Real>(a: &C3<T>, b: &C3<T>) -> C<T> {
    a[0].conj() * b[0] + a[1].conj() * b[1] + a[2].conj() * b[2]
}

/// Squared Euclidean norm of a complex 3-vector.
#[inline]
pub fn cnorm2<T: Real>(a: &C3<T>) -> T {
    a[0].norm_sqr() + a[1].norm_sqr() + a[2].norm_sqr()
}

#[inline]
pub fn cnorm<T: Real>(a: &C3<T>) -> T {
    cnorm2(a).sqrt()
}

/// Dot of a real vector against a complex one (no conjugation).
#[inline]
pub fn rcdot<T: Real>(a: &R3<T>, b: &C3<T>) -> C<T> {
    b[0].scale(a[0]) + b[1].scale(a[1]) + b[2].scale(a[2])
}
