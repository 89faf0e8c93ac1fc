//! Frequency-sweep evaluation of `int g(t) e^{i kappa t} dt` for smooth,
//! non-oscillatory `g` via Legendre expansion and exact moments.
//!
//! On `[-1, 1]` the moments are `int P_n(x) e^{i kappa x} dx = 2 i^n
//! j_n(kappa)` with `j_n` the spherical Bessel function, so once the
//! Legendre coefficients of `g` are known the integral is available for
//! every frequency at `O(N)` cost. This is what makes full-grid amplitude
//! evaluation tractable: the per-period panel engine costs `O(omega)` per
//! momentum sample, which is prohibitive across a grid reaching
//! `omega = 1e4`.

use crate::quadrature::grid::gauss_legendre;
use crate::scalar::{cis, Real, C};
use num_complex::Complex;

/// Expansion order (number of Legendre coefficients per subinterval).
pub const EXPANSION_ORDER: usize = 28;
/// Gauss-Legendre points used to project onto the expansion.
const PROJECTION_POINTS: usize = 32;
/// Subdivision stops when the coefficient tail drops below this fraction
/// of the leading coefficients (floored at a few epsilon for coarse
/// scalar types).
const TAIL_RTOL: f64 = 1e-11;
const MAX_DEPTH: usize = 12;

fn tail_tol<T: Real>() -> T {
    // floor covers the projection rounding noise, which carries the
    // (2n+1)/2 normalization of the highest coefficients
    T::of(TAIL_RTOL).max(T::epsilon() * T::of(128.0))
}

/// `j_0 .. j_{n_max}` at `x >= 0`.
///
/// Forward recurrence is stable while `n < x`; otherwise Miller's backward
/// recurrence normalized against `j_0` (or `j_1` when `j_0` is near a
/// zero).
pub fn spherical_bessel_jn<T: Real>(n_max: usize, x: T) -> Vec<T> {
    let mut out = vec![T::zero(); n_max + 1];
    if x == T::zero() {
        out[0] = T::one();
        return out;
    }
    let j0 = x.sin() / x;
    if n_max == 0 {
        out[0] = j0;
        return out;
    }
    let j1 = x.sin() / (x * x) - x.cos() / x;
    let xf = x.to_f64_lossy();
    if xf > n_max as f64 + 12.0 {
        out[0] = j0;
        out[1] = j1;
        for n in 1..n_max {
            let nf = T::of_usize(n);
            out[n + 1] = (T::of(2.0) * nf + T::one()) / x * out[n] - out[n - 1];
        }
        return out;
    }
    // Miller backward recurrence
    let start = n_max + 16 + xf.ceil().max(0.0) as usize;
    let overflow_guard = T::max_value().sqrt();
    let mut jp = T::zero();
    let mut jc = T::min_positive_value() / T::epsilon();
    let mut tmp = vec![T::zero(); n_max + 1];
    for n in (0..start).rev() {
        let nf = T::of_usize(n + 1);
        let jm = (T::of(2.0) * nf + T::one()) / x * jc - jp;
        jp = jc;
        jc = jm;
        if n <= n_max {
            tmp[n] = jc;
        }
        // rescale to dodge overflow
        if jc.abs() > overflow_guard {
            let s = overflow_guard.recip();
            jc *= s;
            jp *= s;
            for v in tmp.iter_mut() {
                *v *= s;
            }
        }
    }
    // normalize against whichever reference value is better conditioned
    let scale = if j0.abs() >= j1.abs() {
        j0 / tmp[0]
    } else {
        j1 / tmp[1]
    };
    for (o, v) in out.iter_mut().zip(&tmp) {
        *o = *v * scale;
    }
    out
}

/// Legendre expansion of a scalar function on `[a, b]` (coefficients of
/// `P_n((2t - a - b)/(b - a))`).
pub struct LegendreSeries<T> {
    pub a: T,
    pub b: T,
    pub coeffs: Vec<T>,
    /// Estimated truncation size from the trailing coefficients.
    pub tail: T,
}

impl<T: Real> LegendreSeries<T> {
    pub fn project(f: &impl Fn(T) -> T, a: T, b: T) -> Self {
        let (x, w) = gauss_legendre::<T>(PROJECTION_POINTS);
        let mid = (a + b) * T::of(0.5);
        let half = (b - a) * T::of(0.5);
        let fv: Vec<T> = x.iter().map(|&xi| f(mid + half * xi)).collect();
        let mut coeffs = vec![T::zero(); EXPANSION_ORDER];
        // P_n(x_i) by upward recurrence, accumulated per node
        let mut p_prev = vec![T::one(); PROJECTION_POINTS];
        let mut p_curr: Vec<T> = x.clone();
        for (n, c) in coeffs.iter_mut().enumerate() {
            let pn: &[T] = if n == 0 { &p_prev } else { &p_curr };
            let mut acc = T::zero();
            for i in 0..PROJECTION_POINTS {
                acc += w[i] * fv[i] * pn[i];
            }
            *c = acc * (T::of(2.0) * T::of_usize(n) + T::one()) * T::of(0.5);
            if n >= 1 {
                let nf = T::of_usize(n);
                for i in 0..PROJECTION_POINTS {
                    let next = ((T::of(2.0) * nf + T::one()) * x[i] * p_curr[i] - nf * p_prev[i])
                        / (nf + T::one());
                    p_prev[i] = p_curr[i];
                    p_curr[i] = next;
                }
            }
        }
        let tail = coeffs[EXPANSION_ORDER - 4..]
            .iter()
            .fold(T::zero(), |m, c| m.max(c.abs()));
        Self { a, b, coeffs, tail }
    }

    pub fn scale(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |m, c| m.max(c.abs()))
    }

    /// `int_a^b g(t) e^{i kappa t} dt` from the expansion, exact in the
    /// moments.
    pub fn fourier(&self, kappa: T) -> C<T> {
        let mid = (self.a + self.b) * T::of(0.5);
        let half = (self.b - self.a) * T::of(0.5);
        let z = kappa * half;
        let j = spherical_bessel_jn(self.coeffs.len() - 1, z.abs());
        let mut acc = Complex::new(T::zero(), T::zero());
        // i^n cycle; j_n(-z) = (-1)^n j_n(z) folds into the same cycle
        let neg = z < T::zero();
        for (n, &c) in self.coeffs.iter().enumerate() {
            let jn = if neg && n % 2 == 1 { -j[n] } else { j[n] };
            let m = match n % 4 {
                0 => Complex::new(jn, T::zero()),
                1 => Complex::new(T::zero(), jn),
                2 => Complex::new(-jn, T::zero()),
                _ => Complex::new(T::zero(), -jn),
            };
            acc += m.scale(c * T::of(2.0));
        }
        acc.scale(half) * cis(kappa * mid)
    }
}

/// Piecewise Legendre expansion with automatic subdivision until the
/// coefficient tails are negligible.
pub struct PiecewiseSeries<T> {
    pub pieces: Vec<LegendreSeries<T>>,
}

impl<T: Real> PiecewiseSeries<T> {
    pub fn adaptive(f: &impl Fn(T) -> T, a: T, b: T) -> Self {
        let mut pieces = Vec::new();
        let mut stack = vec![(a, b, 0usize)];
        let mut global_scale = T::zero();
        while let Some((lo, hi, depth)) = stack.pop() {
            let s = LegendreSeries::project(f, lo, hi);
            global_scale = global_scale.max(s.scale());
            if depth < MAX_DEPTH && s.tail > tail_tol::<T>() * global_scale.max(T::min_positive_value())
            {
                let mid = (lo + hi) * T::of(0.5);
                stack.push((mid, hi, depth + 1));
                stack.push((lo, mid, depth + 1));
            } else {
                pieces.push(s);
            }
        }
        pieces.sort_by(|x, y| x.a.partial_cmp(&y.a).unwrap());
        Self { pieces }
    }

    pub fn fourier(&self, kappa: T) -> C<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for p in &self.pieces {
            acc += p.fourier(kappa);
        }
        acc
    }

    /// Truncation-tail bound on the Fourier value (moment magnitudes <= 2),
    /// plus the f64 rounding floor of the coefficient mass.
    pub fn error_estimate(&self) -> T {
        let mut acc = T::zero();
        for p in &self.pieces {
            acc += (p.tail + T::epsilon() * T::of(50.0) * p.scale()) * (p.b - p.a);
        }
        acc
    }
}

/// Legendre expansion of a real 3-vector function on one interval (all
/// components share the subdivision).
pub struct LegendreSeries3<T> {
    pub a: T,
    pub b: T,
    pub coeffs: Vec<[T; 3]>,
    pub tail: T,
}

impl<T: Real> LegendreSeries3<T> {
    pub fn project(f: &impl Fn(T) -> [T; 3], a: T, b: T) -> Self {
        let (x, w) = gauss_legendre::<T>(PROJECTION_POINTS);
        let mid = (a + b) * T::of(0.5);
        let half = (b - a) * T::of(0.5);
        let fv: Vec<[T; 3]> = x.iter().map(|&xi| f(mid + half * xi)).collect();
        let mut coeffs = vec![[T::zero(); 3]; EXPANSION_ORDER];
        let mut p_prev = vec![T::one(); PROJECTION_POINTS];
        let mut p_curr: Vec<T> = x.clone();
        for (n, c) in coeffs.iter_mut().enumerate() {
            let pn: &[T] = if n == 0 { &p_prev } else { &p_curr };
            let mut acc = [T::zero(); 3];
            for i in 0..PROJECTION_POINTS {
                let s = w[i] * pn[i];
                for k in 0..3 {
                    acc[k] += s * fv[i][k];
                }
            }
            let norm = (T::of(2.0) * T::of_usize(n) + T::one()) * T::of(0.5);
            for k in 0..3 {
                c[k] = acc[k] * norm;
            }
            if n >= 1 {
                let nf = T::of_usize(n);
                for i in 0..PROJECTION_POINTS {
                    let next = ((T::of(2.0) * nf + T::one()) * x[i] * p_curr[i] - nf * p_prev[i])
                        / (nf + T::one());
                    p_prev[i] = p_curr[i];
                    p_curr[i] = next;
                }
            }
        }
        let tail = coeffs[EXPANSION_ORDER - 4..].iter().fold(T::zero(), |m, c| {
            m.max(c[0].abs()).max(c[1].abs()).max(c[2].abs())
        });
        Self { a, b, coeffs, tail }
    }

    pub fn scale(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |m, c| {
            m.max(c[0].abs()).max(c[1].abs()).max(c[2].abs())
        })
    }

    /// `int_a^b f(t) e^{i kappa t} dt` componentwise.
    pub fn fourier(&self, kappa: T) -> [C<T>; 3] {
        let mid = (self.a + self.b) * T::of(0.5);
        let half = (self.b - self.a) * T::of(0.5);
        let z = kappa * half;
        let j = spherical_bessel_jn(self.coeffs.len() - 1, z.abs());
        let neg = z < T::zero();
        let mut acc = [Complex::new(T::zero(), T::zero()); 3];
        for (n, c) in self.coeffs.iter().enumerate() {
            let jn = if neg && n % 2 == 1 { -j[n] } else { j[n] };
            let two_jn = jn * T::of(2.0);
            for k in 0..3 {
                let v = c[k] * two_jn;
                match n % 4 {
                    0 => acc[k].re += v,
                    1 => acc[k].im += v,
                    2 => acc[k].re -= v,
                    _ => acc[k].im -= v,
                }
            }
        }
        let rot = cis(kappa * mid).scale(half);
        [acc[0] * rot, acc[1] * rot, acc[2] * rot]
    }
}

/// Piecewise vector expansion with automatic subdivision; pieces are
/// exposed so callers can flatten several expansions together.
pub struct VectorSeries3<T> {
    pub pieces: Vec<LegendreSeries3<T>>,
}

impl<T: Real> VectorSeries3<T> {
    pub fn adaptive(f: &impl Fn(T) -> [T; 3], a: T, b: T) -> Self {
        let mut pieces = Vec::new();
        let mut stack = vec![(a, b, 0usize)];
        let mut global_scale = T::zero();
        while let Some((lo, hi, depth)) = stack.pop() {
            let s = LegendreSeries3::project(f, lo, hi);
            global_scale = global_scale.max(s.scale());
            if depth < MAX_DEPTH
                && s.tail > tail_tol::<T>() * global_scale.max(T::min_positive_value())
            {
                let mid = (lo + hi) * T::of(0.5);
                stack.push((mid, hi, depth + 1));
                stack.push((lo, mid, depth + 1));
            } else {
                pieces.push(s);
            }
        }
        pieces.sort_by(|x, y| x.a.partial_cmp(&y.a).unwrap());
        Self { pieces }
    }

    pub fn error_estimate(&self) -> T {
        let mut acc = T::zero();
        for p in &self.pieces {
            acc += (p.tail + T::epsilon() * T::of(50.0) * p.scale()) * (p.b - p.a);
        }
        acc
    }

    /// Total coefficient mass `sum scale * length` of the expansion.
    pub fn coefficient_mass(&self) -> T {
        let mut acc = T::zero();
        for p in &self.pieces {
            acc += p.scale() * (p.b - p.a);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_small_order_closed_forms() {
        for &x in &[1e-6f64, 0.1, 1.0, 7.3, 40.0, 900.0] {
            let j = spherical_bessel_jn::<f64>(5, x);
            let j0 = x.sin() / x;
            // closed forms cancel catastrophically for small x; switch to series
            let (j1, j2) = if x < 1e-2 {
                (
                    x / 3.0 * (1.0 - x * x / 10.0),
                    x * x / 15.0 * (1.0 - x * x / 14.0),
                )
            } else {
                (
                    x.sin() / (x * x) - x.cos() / x,
                    (3.0 / (x * x) - 1.0) * x.sin() / x - 3.0 * x.cos() / (x * x),
                )
            };
            assert!((j[0] - j0).abs() < 1e-13 * (1.0 + j0.abs()), "x={x}");
            assert!((j[1] - j1).abs() < 1e-12, "x={x}: {} vs {j1}", j[1]);
            assert!((j[2] - j2).abs() < 1e-11, "x={x}: {} vs {j2}", j[2]);
        }
    }

    #[test]
    fn bessel_high_order_downward_stability() {
        // j_30(1) is ~1e-40; Miller recurrence must not blow up
        let j = spherical_bessel_jn::<f64>(30, 1.0);
        assert!(j[30] > 0.0 && j[30] < 1e-35);
        // Rayleigh sum: sum (2n+1) j_n^2 = 1 when enough orders are kept
        let j = spherical_bessel_jn::<f64>(60, 12.0);
        let s: f64 = j.iter().enumerate().map(|(n, v)| (2 * n + 1) as f64 * v * v).sum();
        assert!((s - 1.0).abs() < 1e-10, "sum {s}");
    }

    #[test]
    fn fourier_of_gaussian_matches_quadrature() {
        // int_{-3}^{3} e^{-t^2} e^{i k t} dt for k across five orders
        let f = |t: f64| (-t * t).exp();
        let series = PiecewiseSeries::adaptive(&f, -3.0, 3.0);
        for &k in &[0.0f64, 0.3, 2.0, 35.0, 400.0, 9e3] {
            let got = series.fourier(k);
            // brute-force reference with per-period panels
            let n = ((6.0 * k / (2.0 * std::f64::consts::PI)).ceil() as usize * 8).max(64);
            let mut reference = Complex::new(0.0, 0.0);
            for j in 0..n {
                // midpoint + Simpson-ish fine sampling
                let steps = 16;
                for q in 0..steps {
                    let t = -3.0 + 6.0 * (j as f64 + (q as f64 + 0.5) / steps as f64) / n as f64;
                    reference += cis(k * t).scale(f(t) * 6.0 / (n * steps) as f64);
                }
            }
            let scale = got.norm().max(1e-12);
            assert!(
                (got - reference).norm() <= 1e-5 * scale + 1e-9,
                "k={k}: {got} vs {reference}"
            );
        }
    }

    #[test]
    fn fourier_constant_exact() {
        // int_a^b e^{ikt} dt = (e^{ikb} - e^{ika})/(ik)
        let f = |_t: f64| 1.0;
        let series = PiecewiseSeries::adaptive(&f, 0.25, 1.75);
        for &k in &[1e-3f64, 1.0, 52.0, 1.3e4] {
            let got = series.fourier(k);
            let expect = (cis(k * 1.75) - cis(k * 0.25)) / Complex::new(0.0, k);
            assert!((got - expect).norm() < 1e-12 + 1e-10 / k, "k={k}");
        }
    }
}
