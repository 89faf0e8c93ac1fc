//! Oscillatory time integrals `int a(t) e^{i psi(p,t)} dt` by adaptive
//! panel quadrature.
//!
//! The phase `psi(p, t) = omega t - p . x(t)` has no stationary points
//! (`psi_t >= omega (1 - v0) > 0`), so plain panels resolving the
//! oscillation suffice: initial panel length is capped at
//! `2 pi / (omega (1 + v0)) / panels_per_period`, panels never straddle a
//! trajectory breakpoint, and each panel uses an embedded 7/15-point
//! Gauss-Kronrod pair for the error estimate. Panels with the largest
//! error are bisected until the summed estimate meets the tolerance.

use crate::error::{Error, Result};
use crate::scalar::{cis, Real};
use crate::trajectory::{Side, Trajectory};
use crate::vec3::{cadd, czero3, norm, C3, R3};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// 15-point Kronrod abscissae (positive half, descending).
const XGK15: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
/// Embedded 7-point Gauss weights (for `XGK15[1], XGK15[3], XGK15[5], XGK15[7]`).
const WG7: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];
/// 15-point Kronrod weights matching `XGK15`.
const WGK15: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

pub const DEFAULT_PANELS_PER_PERIOD: usize = 4;
pub const DEFAULT_OSC_RTOL: f64 = 1e-9;
const MAX_PANELS: usize = 400_000;

/// Result of an oscillatory integral: value, summed Gauss/Kronrod error
/// estimate and number of panels used. `abs_mass` is the integral of the
/// integrand magnitude, the scale of the f64 rounding floor.
#[derive(Debug, Clone)]
pub struct OscillatoryIntegralResult<T> {
    pub value: C3<T>,
    pub error_estimate: T,
    pub subdivisions: usize,
    pub abs_mass: T,
}

/// Tuning knobs for [`osc_time_integral`].
#[derive(Debug, Clone, Copy)]
pub struct OscSettings {
    pub panels_per_period: usize,
    /// Relative tolerance against the accumulated integral magnitude.
    pub rel_tol: f64,
}

impl Default for OscSettings {
    fn default() -> Self {
        Self {
            panels_per_period: DEFAULT_PANELS_PER_PERIOD,
            rel_tol: DEFAULT_OSC_RTOL,
        }
    }
}

struct Panel<T> {
    a: T,
    b: T,
    value: C3<T>,
    error: T,
    resabs: T,
}

struct HeapEntry<T> {
    error: T,
    index: usize,
}

impl<T: Real> PartialEq for HeapEntry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T: Real> Eq for HeapEntry<T> {}
impl<T: Real> PartialOrd for HeapEntry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for HeapEntry<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.partial_cmp(&other.error).unwrap_or(Ordering::Equal)
    }
}

/// Evaluate one panel with the embedded 7/15 pair. `f` returns the full
/// complex 3-vector integrand.
fn gk15_panel<T: Real>(f: &impl Fn(T) -> C3<T>, a: T, b: T) -> (C3<T>, T, T) {
    let half = (b - a) * T::of(0.5);
    let mid = (a + b) * T::of(0.5);
    let mut kron = czero3::<T>();
    let mut gauss = czero3::<T>();
    let mut resabs = T::zero();
    for (j, &xj) in XGK15.iter().enumerate() {
        let x = T::of(xj);
        let w_k = T::of(WGK15[j]);
        let vals = if j == 7 {
            // center node, single evaluation
            let v = f(mid);
            resabs += w_k * crate::vec3::cnorm(&v);
            v
        } else {
            let v1 = f(mid - half * x);
            let v2 = f(mid + half * x);
            resabs += w_k * (crate::vec3::cnorm(&v1) + crate::vec3::cnorm(&v2));
            cadd(&v1, &v2)
        };
        for i in 0..3 {
            kron[i] += vals[i].scale(w_k);
        }
        if j % 2 == 1 {
            // odd Kronrod indices (and the center, j = 7) are Gauss nodes
            let w_g = T::of(WG7[j / 2]);
            for i in 0..3 {
                gauss[i] += vals[i].scale(w_g);
            }
        }
    }
    let mut err = T::zero();
    for i in 0..3 {
        kron[i] = kron[i].scale(half);
        err += (kron[i] - gauss[i].scale(half)).norm();
    }
    (kron, err, resabs * half)
}

/// `int a(t) e^{i psi(p, t)} dt` over `support`, with `amplitude` a real
/// piecewise-smooth 3-vector coefficient whose breakpoints are a subset of
/// the trajectory's. Panels are cut at trajectory breakpoints and sized to
/// resolve the oscillation, then adaptively bisected against the embedded
/// error estimate.
pub fn osc_time_integral<T: Real>(
    traj: &Trajectory<T>,
    p: &R3<T>,
    amplitude: &impl Fn(T) -> R3<T>,
    support: (T, T),
    settings: &OscSettings,
) -> Result<OscillatoryIntegralResult<T>> {
    let omega = norm(p);
    if omega == T::zero() {
        return Err(Error::ZeroMomentum);
    }
    let (lo, hi) = support;
    if !(lo < hi) {
        return Ok(OscillatoryIntegralResult {
            value: czero3(),
            error_estimate: T::zero(),
            subdivisions: 0,
            abs_mass: T::zero(),
        });
    }

    let integrand = |t: T| -> C3<T> {
        let a = amplitude(t);
        // mid-panel evaluation never hits a breakpoint; side is irrelevant
        let ph = traj.phase(p, t, Side::Right).expect("nonzero momentum");
        let e = cis(ph.psi);
        [e.scale(a[0]), e.scale(a[1]), e.scale(a[2])]
    };

    // breakpoints inside the support are forced panel boundaries
    let mut cuts: Vec<T> = vec![lo];
    for &b in traj.breakpoints() {
        if b > lo && b < hi {
            cuts.push(b);
        }
    }
    cuts.push(hi);

    // oscillation-resolving panel length from psi_t <= omega (1 + v0)
    let period = T::of(2.0) * T::PI() / (omega * (T::one() + traj.v0()));
    let max_len = period / T::of_usize(settings.panels_per_period.max(1));

    let mut panels: Vec<Panel<T>> = Vec::new();
    for w in cuts.windows(2) {
        let len = w[1] - w[0];
        let n = (len / max_len).ceil().to_f64_lossy().max(1.0) as usize;
        if panels.len() + n > MAX_PANELS {
            return Err(Error::Accuracy {
                context: "osc_time_integral panel budget",
                estimate: f64::INFINITY,
                tolerance: settings.rel_tol,
            });
        }
        for j in 0..n {
            let a = w[0] + len * T::of_usize(j) / T::of_usize(n);
            let b = w[0] + len * T::of_usize(j + 1) / T::of_usize(n);
            let (value, error, resabs) = gk15_panel(&integrand, a, b);
            panels.push(Panel { a, b, value, error, resabs });
        }
    }

    let total = |panels: &[Panel<T>]| -> (C3<T>, T, T) {
        let mut v = czero3::<T>();
        let mut e = T::zero();
        let mut ra = T::zero();
        for p in panels {
            v = cadd(&v, &p.value);
            e += p.error;
            ra += p.resabs;
        }
        (v, e, ra)
    };

    let mut heap: BinaryHeap<HeapEntry<T>> = panels
        .iter()
        .enumerate()
        .map(|(index, p)| HeapEntry { error: p.error, index })
        .collect();

    let rel = T::of(settings.rel_tol);
    loop {
        let (value, err, resabs) = total(&panels);
        // refinement cannot push the estimate below the rounding floor of
        // the absolute mass of the integrand
        let floor = T::of(50.0) * T::epsilon() * resabs;
        let scale = crate::vec3::cnorm(&value).max(T::min_positive_value());
        let target = (rel * scale).max(floor);
        if err <= target || panels.len() >= MAX_PANELS {
            if err > target {
                return Err(Error::Accuracy {
                    context: "osc_time_integral",
                    estimate: err.to_f64_lossy(),
                    tolerance: target.to_f64_lossy(),
                });
            }
            return Ok(OscillatoryIntegralResult {
                value,
                error_estimate: err,
                subdivisions: panels.len(),
                abs_mass: resabs,
            });
        }
        // bisect the worst panel
        let worst = loop {
            match heap.pop() {
                Some(entry) if entry.error == panels[entry.index].error => break Some(entry.index),
                Some(_) => continue, // stale entry
                None => break None,
            }
        };
        let Some(idx) = worst else {
            return Err(Error::Accuracy {
                context: "osc_time_integral",
                estimate: err.to_f64_lossy(),
                tolerance: target.to_f64_lossy(),
            });
        };
        let (a, b) = (panels[idx].a, panels[idx].b);
        let mid = (a + b) * T::of(0.5);
        let (v1, e1, r1) = gk15_panel(&integrand, a, mid);
        let (v2, e2, r2) = gk15_panel(&integrand, mid, b);
        panels[idx] = Panel { a, b: mid, value: v1, error: e1, resabs: r1 };
        heap.push(HeapEntry { error: e1, index: idx });
        panels.push(Panel { a: mid, b, value: v2, error: e2, resabs: r2 });
        heap.push(HeapEntry {
            error: e2,
            index: panels.len() - 1,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{build_constant_velocity, build_smooth_stop_start};
    use num_complex::Complex;

    #[test]
    fn zero_amplitude_is_zero() {
        let traj = build_constant_velocity(&[0.0f64; 3]).unwrap();
        let res = osc_time_integral(
            &traj,
            &[0.0, 0.0, 2.0],
            &|_t| [0.0; 3],
            (0.0, 5.0),
            &OscSettings::default(),
        )
        .unwrap();
        assert_eq!(res.value, czero3::<f64>());
        assert_eq!(res.error_estimate, 0.0);
    }

    #[test]
    fn constant_amplitude_static_phase() {
        // x = 0, psi = omega t: int_0^T a e^{i omega t} dt = a (e^{i omega T} - 1)/(i omega)
        let traj = build_constant_velocity(&[0.0f64; 3]).unwrap();
        let omega = 3.7;
        let t_end = 4.0;
        let a = [1.0, -2.0, 0.5];
        let res = osc_time_integral(
            &traj,
            &[0.0, 0.0, omega],
            &|_t| a,
            (0.0, t_end),
            &OscSettings::default(),
        )
        .unwrap();
        let expect = (cis(omega * t_end) - Complex::new(1.0, 0.0)) / Complex::new(0.0, omega);
        for i in 0..3 {
            assert!(
                (res.value[i] - expect.scale(a[i])).norm() < 1e-12,
                "component {i}"
            );
        }
    }

    #[test]
    fn bump_amplitude_matches_oversampled_reference() {
        // high-frequency case checked against a 10x oversampled run
        let traj = build_smooth_stop_start(10.0f64, &[1.0, 0.0, 0.0], 0.5).unwrap();
        let p = [0.0, 0.0, 50.0];
        let amp = |t: f64| traj.eval_unchecked(t, 1, Side::Right);
        let res = osc_time_integral(&traj, &p, &amp, (0.0, 10.0), &OscSettings::default()).unwrap();
        let fine = osc_time_integral(
            &traj,
            &p,
            &amp,
            (0.0, 10.0),
            &OscSettings {
                panels_per_period: 40,
                rel_tol: 1e-12,
            },
        )
        .unwrap();
        let scale = crate::vec3::cnorm(&fine.value);
        let diff: f64 = (0..3).map(|i| (res.value[i] - fine.value[i]).norm_sqr()).sum::<f64>().sqrt();
        // the value is ~1e8 times smaller than the integrand mass, so the
        // relative target carries an f64 cancellation floor
        let floor = 200.0 * f64::EPSILON * fine.abs_mass;
        assert!(
            diff <= (1e-8 * scale).max(floor),
            "diff {diff:e} vs rel {:e} floor {floor:e}",
            1e-8 * scale
        );
    }

    #[test]
    fn panel_refinement_shrinks_error_estimate() {
        let traj = build_smooth_stop_start(10.0f64, &[1.0, 0.0, 0.0], 0.5).unwrap();
        let p = [0.0, 0.0, 20.0];
        let amp = |t: f64| traj.eval_unchecked(t, 1, Side::Right);
        // fixed panel layouts (no adaptivity) to compare raw estimates
        let run = |ppp: usize| {
            let mut est = 0.0;
            let period = 2.0 * std::f64::consts::PI / (20.0 * 1.5);
            let n = (10.0 / (period / ppp as f64)).ceil() as usize;
            for j in 0..n {
                let a = 10.0 * j as f64 / n as f64;
                let b = 10.0 * (j + 1) as f64 / n as f64;
                let f = |t: f64| {
                    let av = amp(t);
                    let ph = traj.phase(&p, t, Side::Right).unwrap();
                    let e = cis(ph.psi);
                    [e.scale(av[0]), e.scale(av[1]), e.scale(av[2])]
                };
                let (_, e, _) = gk15_panel(&f, a, b);
                est += e;
            }
            est
        };
        let coarse = run(1);
        let fine = run(2);
        assert!(
            coarse >= 4.0 * fine,
            "doubling panel density should cut the estimate >= 4x: {coarse} vs {fine}"
        );
    }
}
