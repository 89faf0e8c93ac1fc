//! Emission amplitude `J(p)` of a point charge on a prescribed trajectory,
//! its transverse projection, and closed-form jump / soft pieces.
//!
//! Three representations of the same integral are kept and cross-checked:
//!
//! * `direct`: `J(p) = -i (2 pi)^{-3/2} int x'(s) e^{i psi(p,s)} ds`
//!   (requires compactly supported velocity);
//! * `ibp1`: one integration by parts, integrand supported on the
//!   acceleration support, plus a closed-form boundary term for every
//!   velocity jump;
//! * `ibp2`: two integrations by parts, plus boundary terms where the
//!   acceleration jumps.
//!
//! Per-sample evaluation uses the adaptive panel engine. Grid-scale
//! evaluation exploits that for a fixed direction `n` the phase is
//! `omega tau(t)` with `tau(t) = t - n . x(t)` strictly monotone, so each
//! direction reduces to Legendre-moment Fourier sweeps shared by every
//! radial node.

use crate::error::{Error, Result};
use crate::quadrature::filon::VectorSeries3;
use crate::quadrature::grid::SphericalGrid;
use crate::quadrature::panels::{osc_time_integral, OscSettings};
use crate::scalar::{cis, Real, C};
use crate::trajectory::{Side, Trajectory};
use crate::vec3::{
    add, cadd, cross, cscale, czero3, dot, norm, rcdot, scale, sub, unit, zero3, C3, R3,
};
use num_complex::Complex;
use rayon::prelude::*;
use std::io::Write;
use std::sync::Arc;

/// Degenerate-case cutoff: velocity differences and cross products below
/// this are treated as exact zeros in the closed forms.
const DEGENERATE_EPS: f64 = 1e-14;

/// Global amplitude prefactor `-i (2 pi)^{-3/2}`, carried through every
/// representation so they agree without rescaling.
pub fn prefactor<T: Real>() -> C<T> {
    let c = (T::of(2.0) * T::PI()).powi(3).sqrt().recip();
    Complex::new(T::zero(), -c)
}

// ---------------------------------------------------------------------------
// transverse projector
// ---------------------------------------------------------------------------

/// Matrix of the transverse projector `P(p)_jk = delta_jk - p_j p_k / |p|^2`.
pub fn projector_matrix<T: Real>(p: &R3<T>) -> Result<[[T; 3]; 3]> {
    let n2 = dot(p, p);
    if n2 == T::zero() {
        return Err(Error::ZeroMomentum);
    }
    let mut m = [[T::zero(); 3]; 3];
    for j in 0..3 {
        for k in 0..3 {
            let kron = if j == k { T::one() } else { T::zero() };
            m[j][k] = kron - p[j] * p[k] / n2;
        }
    }
    Ok(m)
}

/// Apply `P(p)` to a complex 3-vector.
pub fn project_transverse<T: Real>(p: &R3<T>, h: &C3<T>) -> Result<C3<T>> {
    let n2 = dot(p, p);
    if n2 == T::zero() {
        return Err(Error::ZeroMomentum);
    }
    let ph = (h[0].scale(p[0]) + h[1].scale(p[1]) + h[2].scale(p[2])).scale(n2.recip());
    Ok([
        h[0] - ph.scale(p[0]),
        h[1] - ph.scale(p[1]),
        h[2] - ph.scale(p[2]),
    ])
}

/// Apply `P(p)` to a real 3-vector.
pub fn project_transverse_real<T: Real>(p: &R3<T>, h: &R3<T>) -> Result<R3<T>> {
    let n2 = dot(p, p);
    if n2 == T::zero() {
        return Err(Error::ZeroMomentum);
    }
    let ph = dot(p, h) / n2;
    Ok(sub(h, &scale(p, ph)))
}

// ---------------------------------------------------------------------------
// closed forms
// ---------------------------------------------------------------------------

/// Velocity-jump boundary amplitude and its transverse decomposition.
#[derive(Debug, Clone)]
pub struct JumpClosedForm<T> {
    /// `Delta(p) = v_minus/(omega - p.v_minus) - v_plus/(omega - p.v_plus)`.
    pub delta: R3<T>,
    /// Transverse part of the `delta v` piece.
    pub delta1_t: R3<T>,
    /// Rotational piece `n x (v_plus x v_minus) / (omega D- D+)`, already
    /// transverse.
    pub delta2: R3<T>,
}

pub fn closed_form_delta<T: Real>(
    v_minus: &R3<T>,
    v_plus: &R3<T>,
    p: &R3<T>,
) -> Result<JumpClosedForm<T>> {
    for v in [v_minus, v_plus] {
        let s = norm(v);
        if s >= T::one() {
            return Err(Error::Superluminal { speed: s.to_f64_lossy() });
        }
    }
    let omega = norm(p);
    if omega == T::zero() {
        return Err(Error::ZeroMomentum);
    }
    let dv = sub(v_minus, v_plus);
    if norm(&dv) < T::of(DEGENERATE_EPS) {
        return Ok(JumpClosedForm {
            delta: zero3(),
            delta1_t: zero3(),
            delta2: zero3(),
        });
    }
    let n = scale(p, omega.recip());
    let d_minus = T::one() - dot(&n, v_minus);
    let d_plus = T::one() - dot(&n, v_plus);
    let delta = sub(
        &scale(v_minus, (omega * d_minus).recip()),
        &scale(v_plus, (omega * d_plus).recip()),
    );
    let denom = omega * d_minus * d_plus;
    let n_dv = unit(&dv).unwrap();
    let delta1_t = scale(
        &sub(&n_dv, &scale(&n, dot(&n, &n_dv))),
        norm(&dv) / denom,
    );
    let vx = cross(v_plus, v_minus);
    let delta2 = if norm(&vx) < T::of(DEGENERATE_EPS) {
        zero3()
    } else {
        scale(&cross(&n, &vx), denom.recip())
    };
    Ok(JumpClosedForm {
        delta,
        delta1_t,
        delta2,
    })
}

/// Soft-photon profile of a trajectory with asymptotic velocities
/// `v_in`, `v_out`, and its transverse decomposition.
#[derive(Debug, Clone)]
pub struct IrClosedForm<T> {
    /// `F(p) = v_out/(omega - p.v_out) - v_in/(omega - p.v_in)`.
    pub f: R3<T>,
    pub f1_t: R3<T>,
    /// `n x (v_in x v_out) / (omega D_out D_in)`, already transverse.
    pub f2: R3<T>,
}

pub fn closed_form_ir<T: Real>(
    v_in: &R3<T>,
    v_out: &R3<T>,
    p: &R3<T>,
) -> Result<IrClosedForm<T>> {
    for v in [v_in, v_out] {
        let s = norm(v);
        if s >= T::one() {
            return Err(Error::Superluminal { speed: s.to_f64_lossy() });
        }
    }
    let omega = norm(p);
    if omega == T::zero() {
        return Err(Error::ZeroMomentum);
    }
    let dv = sub(v_out, v_in);
    if norm(&dv) < T::of(DEGENERATE_EPS) {
        return Ok(IrClosedForm {
            f: zero3(),
            f1_t: zero3(),
            f2: zero3(),
        });
    }
    let n = scale(p, omega.recip());
    let d_out = T::one() - dot(&n, v_out);
    let d_in = T::one() - dot(&n, v_in);
    let f = sub(
        &scale(v_out, (omega * d_out).recip()),
        &scale(v_in, (omega * d_in).recip()),
    );
    let denom = omega * d_out * d_in;
    let n_dv = unit(&dv).unwrap();
    let f1_t = scale(&sub(&n_dv, &scale(&n, dot(&n, &n_dv))), norm(&dv) / denom);
    let vx = cross(v_in, v_out);
    let f2 = if norm(&vx) < T::of(DEGENERATE_EPS) {
        zero3()
    } else {
        scale(&cross(&n, &vx), denom.recip())
    };
    Ok(IrClosedForm { f, f1_t, f2 })
}

// ---------------------------------------------------------------------------
// per-sample representations (panel quadrature)
// ---------------------------------------------------------------------------

fn segment_has_velocity<T: Real>(seg: &crate::trajectory::Segment<T>) -> bool {
    seg.iter()
        .any(|poly| poly.coeffs().iter().skip(1).any(|&c| c != T::zero()))
}

fn segment_has_acceleration<T: Real>(seg: &crate::trajectory::Segment<T>) -> bool {
    seg.iter()
        .any(|poly| poly.coeffs().iter().skip(2).any(|&c| c != T::zero()))
}

fn accumulate_segments<T: Real>(
    traj: &Trajectory<T>,
    p: &R3<T>,
    amplitude: &impl Fn(T) -> R3<T>,
    relevant: impl Fn(&crate::trajectory::Segment<T>) -> bool,
    settings: &OscSettings,
) -> Result<(C3<T>, T)> {
    let mut value = czero3::<T>();
    let mut err = T::zero();
    for (k, seg) in traj.segments().iter().enumerate() {
        if !relevant(seg) {
            continue;
        }
        let support = (traj.breakpoints()[k], traj.breakpoints()[k + 1]);
        let res = osc_time_integral(traj, p, amplitude, support, settings)?;
        value = cadd(&value, &res.value);
        err += res.error_estimate;
    }
    Ok((value, err))
}

/// Direct representation of `J(p)`; requires compactly supported velocity.
pub fn amplitude_direct<T: Real>(
    traj: &Trajectory<T>,
    p: &R3<T>,
    settings: &OscSettings,
) -> Result<C3<T>> {
    if !traj.velocity_compact() {
        return Err(Error::RepresentationInapplicable {
            representation: "direct",
            reason: "velocity support is not compact (v_in or v_out nonzero)".into(),
        });
    }
    let amp = |t: T| traj.eval_unchecked(t, 1, Side::Right);
    let (value, _) = accumulate_segments(traj, p, &amp, segment_has_velocity, settings)?;
    Ok(cscale(&value, prefactor::<T>()))
}

/// Once-integrated-by-parts representation: integrand supported on the
/// acceleration support plus one closed-form boundary term per velocity
/// jump. For non-compact velocity this is the defining representation.
pub fn amplitude_ibp1<T: Real>(
    traj: &Trajectory<T>,
    p: &R3<T>,
    settings: &OscSettings,
) -> Result<C3<T>> {
    let amp = |t: T| {
        let ph = traj.phase(p, t, Side::Right).expect("p != 0");
        let v = traj.eval_unchecked(t, 1, Side::Right);
        let a = traj.eval_unchecked(t, 2, Side::Right);
        // psi_tt/psi_t^2 x' - x''/psi_t
        let c1 = ph.psi_tt / (ph.psi_t * ph.psi_t);
        sub(&scale(&v, c1), &scale(&a, ph.psi_t.recip()))
    };
    let (mut value, _) = accumulate_segments(traj, p, &amp, segment_has_acceleration, settings)?;
    for (tb, v_minus, v_plus) in traj.velocity_jumps() {
        let jump = closed_form_delta(&v_minus, &v_plus, p)?;
        let psi = traj.phase(p, tb, Side::Left)?.psi;
        let term = cscale(&crate::vec3::complexify(&jump.delta), cis(psi));
        value = cadd(&value, &term);
    }
    // overall 1/i on both the integral and the boundary terms
    let minus_i = Complex::new(T::zero(), -T::one());
    Ok(cscale(&value, prefactor::<T>() * minus_i))
}

/// Twice-integrated-by-parts representation, including boundary terms at
/// acceleration jumps. Not applicable when the velocity itself jumps.
pub fn amplitude_ibp2<T: Real>(
    traj: &Trajectory<T>,
    p: &R3<T>,
    settings: &OscSettings,
) -> Result<C3<T>> {
    if traj.has_velocity_jump() {
        return Err(Error::RepresentationInapplicable {
            representation: "ibp2",
            reason: "velocity jump present; the second integration by parts does not apply".into(),
        });
    }
    let amp = |t: T| {
        let ph = traj.phase(p, t, Side::Right).expect("p != 0");
        let v = traj.eval_unchecked(t, 1, Side::Right);
        let a = traj.eval_unchecked(t, 2, Side::Right);
        let j = traj.eval_unchecked(t, 3, Side::Right);
        let pt2 = ph.psi_t * ph.psi_t;
        let pt3 = pt2 * ph.psi_t;
        let pt4 = pt3 * ph.psi_t;
        let c_v = ph.psi_ttt / pt3 - T::of(3.0) * ph.psi_tt * ph.psi_tt / pt4;
        let c_a = T::of(3.0) * ph.psi_tt / pt3;
        let mut out = scale(&v, c_v);
        out = add(&out, &scale(&a, c_a));
        sub(&out, &scale(&j, pt2.recip()))
    };
    let (mut value, _) = accumulate_segments(traj, p, &amp, segment_has_acceleration, settings)?;
    for (tb, da) in traj.acceleration_jumps() {
        let ph = traj.phase(p, tb, Side::Left)?;
        let pt2 = ph.psi_t * ph.psi_t;
        let pt3 = pt2 * ph.psi_t;
        let v = traj.eval_unchecked(tb, 1, Side::Left);
        let mut term = scale(&v, dot(p, &da) / pt3);
        term = add(&term, &scale(&da, pt2.recip()));
        value = cadd(&value, &cscale(&crate::vec3::complexify(&term), cis(ph.psi)));
    }
    Ok(cscale(&value, prefactor::<T>()))
}

// ---------------------------------------------------------------------------
// regular (extended) test currents
// ---------------------------------------------------------------------------

/// Separable test current: spatial profile (a [`crate::fields::TestFunction`],
/// vector-valued through its polarization) times a scalar temporal factor
/// with compact support.
pub struct SeparableCurrent<T: Real> {
    pub spatial: crate::fields::TestFunction<T>,
    pub temporal: crate::trajectory::Polynomial<T>,
    pub support: (T, T),
}

/// `J(p) = -sqrt(2 pi) i \hat j(omega, p)` for a separable current;
/// the temporal Fourier factor is evaluated by 1D moment quadrature.
pub fn amplitude_regular<T: Real>(current: &SeparableCurrent<T>, p: &R3<T>) -> Result<C3<T>> {
    let omega = norm(p);
    if omega == T::zero() {
        return Err(Error::ZeroMomentum);
    }
    let (a, b) = current.support;
    if !(a < b) {
        return Ok(czero3());
    }
    let g = |t: T| current.temporal.eval_deriv(t - a, 0);
    let series = crate::quadrature::filon::PiecewiseSeries::adaptive(&g, a, b);
    let ghat = series.fourier(omega);
    let ft = current.spatial.ft(p);
    let minus_i = Complex::new(T::zero(), -T::one());
    Ok(cscale(&ft, minus_i * ghat))
}

// ---------------------------------------------------------------------------
// grid-scale computation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Auto,
    Direct,
    Ibp1,
    Ibp2,
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Strategy::Auto => "auto",
            Strategy::Direct => "direct",
            Strategy::Ibp1 => "ibp1",
            Strategy::Ibp2 => "ibp2",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Direct,
    Ibp1,
    Ibp2,
}

impl Representation {
    pub fn as_str(self) -> &'static str {
        match self {
            Representation::Direct => "direct",
            Representation::Ibp1 => "ibp1",
            Representation::Ibp2 => "ibp2",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ComputeOptions {
    pub strategy: Strategy,
    pub parallel: bool,
    /// Frequency above which the integration-by-parts forms take over
    /// from the direct integral (when both apply).
    pub omega_switch: f64,
    /// Fraction of samples re-evaluated with an alternative representation.
    pub cross_check_fraction: f64,
    /// Relative agreement demanded of the cross-checks.
    pub cross_check_rtol: f64,
    pub seed: u64,
}

impl Default for ComputeOptions {
    fn default() -> Self {
        Self {
            strategy: Strategy::Auto,
            parallel: true,
            omega_switch: 5.0,
            cross_check_fraction: 0.01,
            cross_check_rtol: 1e-5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct CrossCheckSummary {
    pub checked: usize,
    pub max_rel_gap: f64,
    /// Sample (angular, radial) realizing the worst gap.
    pub worst_sample: Option<(usize, usize)>,
}

/// Sampled emission amplitude on a spherical grid (direction-major layout:
/// `index = angular * n_radial + radial`).
pub struct EmissionAmplitude<T: Real> {
    grid: Arc<SphericalGrid<T>>,
    j: Vec<C3<T>>,
    j_t: Vec<C3<T>>,
    error_estimates: Vec<T>,
    rep_by_radial: Vec<Representation>,
    strategy: Strategy,
    trajectory_hash: u64,
    cross_checks: CrossCheckSummary,
    omega_switch: f64,
    cross_check_rtol: f64,
}

impl<T: Real> EmissionAmplitude<T> {
    pub fn grid(&self) -> &Arc<SphericalGrid<T>> {
        &self.grid
    }

    pub fn j(&self) -> &[C3<T>] {
        &self.j
    }

    pub fn j_t(&self) -> &[C3<T>] {
        &self.j_t
    }

    pub fn error_estimates(&self) -> &[T] {
        &self.error_estimates
    }

    pub fn representation_for_radial(&self, radial: usize) -> Representation {
        self.rep_by_radial[radial]
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn trajectory_hash(&self) -> u64 {
        self.trajectory_hash
    }

    pub fn cross_checks(&self) -> &CrossCheckSummary {
        &self.cross_checks
    }

    /// `||J_T||^2` on the grid.
    pub fn transverse_norm2(&self) -> T {
        self.grid
            .pairing_samples(&self.j_t, &self.j_t)
            .expect("matching grid")
            .re
    }

    /// Largest `|J(p)|` over all samples.
    pub fn max_abs(&self) -> T {
        self.j
            .iter()
            .fold(T::zero(), |m, v| m.max(crate::vec3::cnorm(v)))
    }

    /// CSV dump: metadata header lines (prefixed `#`), then one row per
    /// sample.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# trajectory_hash = {:016x}", self.trajectory_hash)?;
        writeln!(w, "# strategy = {}", self.strategy)?;
        writeln!(
            w,
            "# tolerances: cross_check_rel = {:e}, omega_switch = {:e}",
            self.cross_check_rtol, self.omega_switch
        )?;
        writeln!(
            w,
            "# cross_checks = {} samples, max relative gap {:.3e}",
            self.cross_checks.checked, self.cross_checks.max_rel_gap
        )?;
        let spec = self.grid.spec();
        writeln!(
            w,
            "# grid: r_min={:e} r_max={:e} radial_per_decade={} n_theta={} n_phi={}",
            spec.r_min, spec.r_max, spec.radial_per_decade, spec.n_theta, spec.n_phi
        )?;
        writeln!(
            w,
            "p_x,p_y,p_z,re_j_x,im_j_x,re_j_y,im_j_y,re_j_z,im_j_z,re_jt_x,im_jt_x,re_jt_y,im_jt_y,re_jt_z,im_jt_z,error_estimate,representation"
        )?;
        for a in 0..self.grid.n_angular() {
            for r in 0..self.grid.n_radial() {
                let p = self.grid.momentum(a, r);
                let idx = self.grid.sample_index(a, r);
                let j = &self.j[idx];
                let jt = &self.j_t[idx];
                writeln!(
                    w,
                    "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.3e},{}",
                    p[0].to_f64_lossy(),
                    p[1].to_f64_lossy(),
                    p[2].to_f64_lossy(),
                    j[0].re.to_f64_lossy(),
                    j[0].im.to_f64_lossy(),
                    j[1].re.to_f64_lossy(),
                    j[1].im.to_f64_lossy(),
                    j[2].re.to_f64_lossy(),
                    j[2].im.to_f64_lossy(),
                    jt[0].re.to_f64_lossy(),
                    jt[0].im.to_f64_lossy(),
                    jt[1].re.to_f64_lossy(),
                    jt[1].im.to_f64_lossy(),
                    jt[2].re.to_f64_lossy(),
                    jt[2].im.to_f64_lossy(),
                    self.error_estimates[idx].to_f64_lossy(),
                    self.rep_by_radial[r].as_str()
                )?;
            }
        }
        Ok(())
    }
}

/// Per-direction Fourier data of one representation.
struct RepPieces<T: Real> {
    pieces: Vec<crate::quadrature::filon::LegendreSeries3<T>>,
    /// Boundary terms `(tau_b, direction vector)`.
    boundary: Vec<(T, R3<T>)>,
    /// Absolute truncation bound of the Fourier pieces.
    err_base: T,
    /// Coefficient mass: scale of the f64 cancellation floor.
    mass: T,
}

impl<T: Real> RepPieces<T> {
    fn evaluate(&self, omega: T) -> C3<T> {
        let mut acc = czero3::<T>();
        for piece in &self.pieces {
            acc = cadd(&acc, &piece.fourier(omega));
        }
        for (tau, vec) in &self.boundary {
            acc = cadd(&acc, &cscale(&crate::vec3::complexify(vec), cis(omega * *tau)));
        }
        acc
    }
}

struct DirectionData<T: Real> {
    direct: Option<RepPieces<T>>,
    ibp1: Option<RepPieces<T>>,
    ibp2: Option<RepPieces<T>>,
}

impl<T: Real> DirectionData<T> {
    fn get(&self, rep: Representation) -> &RepPieces<T> {
        match rep {
            Representation::Direct => self.direct.as_ref().expect("direct data"),
            Representation::Ibp1 => self.ibp1.as_ref().expect("ibp1 data"),
            Representation::Ibp2 => self.ibp2.as_ref().expect("ibp2 data"),
        }
    }

    fn has(&self, rep: Representation) -> bool {
        match rep {
            Representation::Direct => self.direct.is_some(),
            Representation::Ibp1 => self.ibp1.is_some(),
            Representation::Ibp2 => self.ibp2.is_some(),
        }
    }
}

/// Amplitude value for a representation given the raw Fourier sum:
/// `direct` carries `pref`, `ibp1` carries `pref * i / omega` on the
/// integral and `pref / (i omega)` on the boundary, `ibp2` carries
/// `pref / omega^2` on both.
fn rep_value<T: Real>(rep: Representation, omega: T, data: &RepPieces<T>) -> C3<T> {
    let pref = prefactor::<T>();
    match rep {
        Representation::Direct => {
            let mut acc = czero3::<T>();
            for piece in &data.pieces {
                acc = cadd(&acc, &piece.fourier(omega));
            }
            cscale(&acc, pref)
        }
        Representation::Ibp1 => {
            let mut int_part = czero3::<T>();
            for piece in &data.pieces {
                int_part = cadd(&int_part, &piece.fourier(omega));
            }
            let i = Complex::new(T::zero(), T::one());
            let mut acc = cscale(&int_part, pref * i.scale(omega.recip()));
            for (tau, vec) in &data.boundary {
                let coef = pref * (-i).scale(omega.recip()) * cis(omega * *tau);
                acc = cadd(&acc, &cscale(&crate::vec3::complexify(vec), coef));
            }
            acc
        }
        Representation::Ibp2 => {
            let raw = data.evaluate(omega);
            cscale(&raw, pref.scale((omega * omega).recip()))
        }
    }
}

fn rep_error_base<T: Real>(rep: Representation, omega: T, data: &RepPieces<T>) -> T {
    let c = prefactor::<T>().norm();
    match rep {
        Representation::Direct => c * data.err_base,
        Representation::Ibp1 => c * data.err_base / omega,
        Representation::Ibp2 => c * data.err_base / (omega * omega),
    }
}

/// Scale of the raw sums feeding the value: relative accuracy degrades as
/// the value falls below `epsilon` times this.
fn rep_mass<T: Real>(rep: Representation, omega: T, data: &RepPieces<T>) -> T {
    let c = prefactor::<T>().norm();
    match rep {
        Representation::Direct => c * data.mass,
        Representation::Ibp1 => c * data.mass / omega,
        Representation::Ibp2 => c * data.mass / (omega * omega),
    }
}

/// Solve `tau(t) = t - n.x(t) = target` on one segment (safeguarded Newton).
fn invert_tau<T: Real>(
    traj: &Trajectory<T>,
    seg: usize,
    n: &R3<T>,
    target: T,
) -> T {
    let t_lo = traj.breakpoints()[seg];
    let t_hi = traj.breakpoints()[seg + 1];
    let mut lo = t_lo;
    let mut hi = t_hi;
    let mut t = t_lo + (t_hi - t_lo) * T::of(0.5);
    for _ in 0..80 {
        let side = if t == t_hi { Side::Left } else { Side::Right };
        let x = traj.eval_unchecked(t, 0, side);
        let v = traj.eval_unchecked(t, 1, side);
        let f = t - dot(n, &x) - target;
        if f > T::zero() {
            hi = t;
        } else {
            lo = t;
        }
        let deriv = T::one() - dot(n, &v);
        let mut next = t - f / deriv;
        if !(next > lo && next < hi) {
            next = (lo + hi) * T::of(0.5);
        }
        if (next - t).abs() <= (t_hi - t_lo) * T::epsilon() * T::of(4.0) {
            t = next;
            break;
        }
        t = next;
    }
    t.max(t_lo).min(t_hi)
}

fn build_direction_data<T: Real>(
    traj: &Trajectory<T>,
    n: &R3<T>,
    want_direct: bool,
    want_ibp1: bool,
    want_ibp2: bool,
) -> DirectionData<T> {
    let tau_of = |t: T, side: Side| t - dot(n, &traj.eval_unchecked(t, 0, side));

    let empty = || RepPieces {
        pieces: Vec::new(),
        boundary: Vec::new(),
        err_base: T::zero(),
        mass: T::zero(),
    };
    let mut direct = want_direct.then(empty);
    let mut ibp1 = want_ibp1.then(empty);
    let mut ibp2 = want_ibp2.then(empty);

    for (k, seg) in traj.segments().iter().enumerate() {
        let tau_a = tau_of(traj.breakpoints()[k], Side::Right);
        let tau_b = tau_of(traj.breakpoints()[k + 1], Side::Left);
        let has_v = segment_has_velocity(seg);
        let has_a = segment_has_acceleration(seg);

        // evaluation of the tau-space integrand, shared across reps
        let kinematics = |tau: T| {
            let t = invert_tau(traj, k, n, tau);
            let side = if t == traj.breakpoints()[k + 1] { Side::Left } else { Side::Right };
            let v = traj.eval_unchecked(t, 1, side);
            let a = traj.eval_unchecked(t, 2, side);
            let jrk = traj.eval_unchecked(t, 3, side);
            let d = T::one() - dot(n, &v);
            (v, a, jrk, d)
        };

        if has_v {
            if let Some(rep) = direct.as_mut() {
                let f = |tau: T| {
                    let (v, _, _, d) = kinematics(tau);
                    scale(&v, d.recip())
                };
                let series = VectorSeries3::adaptive(&f, tau_a, tau_b);
                rep.err_base += series.error_estimate();
                rep.mass += series.coefficient_mass();
                rep.pieces.extend(series.pieces);
            }
        }
        if has_a {
            if let Some(rep) = ibp1.as_mut() {
                let f = |tau: T| {
                    let (v, a, _, d) = kinematics(tau);
                    let na = dot(n, &a);
                    let d2 = d * d;
                    // (A x'/D^2 + x''/D) / D
                    add(&scale(&v, na / (d2 * d)), &scale(&a, d2.recip()))
                };
                let series = VectorSeries3::adaptive(&f, tau_a, tau_b);
                rep.err_base += series.error_estimate();
                rep.mass += series.coefficient_mass();
                rep.pieces.extend(series.pieces);
            }
            if let Some(rep) = ibp2.as_mut() {
                let f = |tau: T| {
                    let (v, a, jrk, d) = kinematics(tau);
                    let na = dot(n, &a);
                    let nj = dot(n, &jrk);
                    let d3 = d * d * d;
                    let d4 = d3 * d;
                    let d5 = d4 * d;
                    // ((-B/D^3 - 3A^2/D^4) x' - 3A/D^3 x'' - x'''/D^2) / D
                    let mut out = scale(&v, -(nj / d4) - T::of(3.0) * na * na / d5);
                    out = add(&out, &scale(&a, -T::of(3.0) * na / d4));
                    add(&out, &scale(&jrk, -d3.recip()))
                };
                let series = VectorSeries3::adaptive(&f, tau_a, tau_b);
                rep.err_base += series.error_estimate();
                rep.mass += series.coefficient_mass();
                rep.pieces.extend(series.pieces);
            }
        }
    }

    if let Some(rep) = ibp1.as_mut() {
        for (tb, v_minus, v_plus) in traj.velocity_jumps() {
            let tau_b = tau_of(tb, Side::Left);
            let d_minus = T::one() - dot(n, &v_minus);
            let d_plus = T::one() - dot(n, &v_plus);
            // omega Delta(p) = v-/D- - v+/D+
            let vec = sub(&scale(&v_minus, d_minus.recip()), &scale(&v_plus, d_plus.recip()));
            rep.mass += norm(&vec);
            rep.boundary.push((tau_b, vec));
        }
    }
    if let Some(rep) = ibp2.as_mut() {
        for (tb, da) in traj.acceleration_jumps() {
            let tau_b = tau_of(tb, Side::Left);
            let v = traj.eval_unchecked(tb, 1, Side::Left);
            let d = T::one() - dot(n, &v);
            let d2 = d * d;
            // omega^2 * boundary: (n.da) x' / D^3 + da / D^2
            let vec = add(&scale(&v, dot(n, &da) / (d2 * d)), &scale(&da, d2.recip()));
            rep.mass += norm(&vec);
            rep.boundary.push((tau_b, vec));
        }
    }

    DirectionData { direct, ibp1, ibp2 }
}

/// Cheap deterministic per-sample hash used to pick cross-check samples.
fn sample_hash(seed: u64, a: usize, r: usize) -> u64 {
    let mut h = seed ^ 0x9e3779b97f4a7c15;
    for v in [a as u64, r as u64] {
        h ^= v.wrapping_add(0x9e3779b97f4a7c15).wrapping_add(h << 6).wrapping_add(h >> 2);
        h = h.wrapping_mul(0xbf58476d1ce4e5b9);
        h ^= h >> 27;
    }
    h
}

/// Fill `J` and `J_T` on the whole grid.
///
/// The `auto` strategy uses the direct integral below `omega_switch` when
/// the velocity support is compact, `ibp1` when velocity jumps are present
/// or the velocity support is non-compact, and `ibp2` otherwise at high
/// frequency. A deterministic pseudo-random subset of samples is
/// re-evaluated with an alternative representation and the worst relative
/// gap recorded.
pub fn compute_amplitude<T: Real>(
    traj: &Trajectory<T>,
    grid: &Arc<SphericalGrid<T>>,
    opts: &ComputeOptions,
) -> Result<EmissionAmplitude<T>> {
    let compact = traj.velocity_compact();
    let has_jump = traj.has_velocity_jump();
    let switch = T::of(opts.omega_switch);

    let available = |rep: Representation| match rep {
        Representation::Direct => compact,
        Representation::Ibp1 => true,
        Representation::Ibp2 => !has_jump,
    };

    let rep_for = |omega: T| -> Result<Representation> {
        let rep = match opts.strategy {
            Strategy::Direct => Representation::Direct,
            Strategy::Ibp1 => Representation::Ibp1,
            Strategy::Ibp2 => Representation::Ibp2,
            Strategy::Auto => {
                if !compact {
                    Representation::Ibp1
                } else if omega < switch {
                    Representation::Direct
                } else if has_jump {
                    Representation::Ibp1
                } else {
                    Representation::Ibp2
                }
            }
        };
        if !available(rep) {
            return Err(Error::RepresentationInapplicable {
                representation: match rep {
                    Representation::Direct => "direct",
                    Representation::Ibp1 => "ibp1",
                    Representation::Ibp2 => "ibp2",
                },
                reason: "requested strategy not applicable to this trajectory".into(),
            });
        }
        Ok(rep)
    };

    let n_radial = grid.n_radial();
    let n_angular = grid.n_angular();
    let rep_by_radial: Vec<Representation> = grid
        .radial_nodes()
        .iter()
        .map(|&r| rep_for(r))
        .collect::<Result<_>>()?;

    // which representations are needed anywhere (cross-checks prefer the
    // cheapest available alternative)
    let mut want = [false; 3];
    for rep in &rep_by_radial {
        want[*rep as usize] = true;
    }
    let alternative_for = |rep: Representation| -> Option<Representation> {
        [Representation::Direct, Representation::Ibp1, Representation::Ibp2]
            .into_iter()
            .find(|r| *r != rep && available(*r))
    };
    for rep in [Representation::Direct, Representation::Ibp1, Representation::Ibp2] {
        if want[rep as usize] {
            if let Some(alt) = alternative_for(rep) {
                want[alt as usize] = true;
            }
        }
    }

    let radial_nodes = grid.radial_nodes().to_vec();
    let check_threshold = (opts.cross_check_fraction.clamp(0.0, 1.0) * (u64::MAX as f64)) as u64;

    struct DirectionOut<T> {
        j: Vec<C3<T>>,
        err: Vec<T>,
        checked: usize,
        max_gap: f64,
        worst_radial: usize,
    }

    let run_direction = |a: usize| -> DirectionOut<T> {
        let n = grid.angular_nodes()[a].dir;
        let data = build_direction_data(
            traj,
            &n,
            want[Representation::Direct as usize],
            want[Representation::Ibp1 as usize],
            want[Representation::Ibp2 as usize],
        );
        let mut j = vec![czero3::<T>(); n_radial];
        let mut err = vec![T::zero(); n_radial];
        let mut checked = 0usize;
        let mut max_gap = 0.0f64;
        let mut worst_radial = 0usize;
        for (r, &omega) in radial_nodes.iter().enumerate() {
            let rep = rep_by_radial[r];
            j[r] = rep_value(rep, omega, data.get(rep));
            err[r] = rep_error_base(rep, omega, data.get(rep));
        }
        for (r, &omega) in radial_nodes.iter().enumerate() {
            if sample_hash(opts.seed, a, r) <= check_threshold {
                let rep = rep_by_radial[r];
                if let Some(alt) = alternative_for(rep) {
                    if data.has(alt) {
                        let other = rep_value(alt, omega, data.get(alt));
                        // compare only where both representations resolve
                        // the value above their noise estimates and keep
                        // ~8 digits of dynamic range over their raw sums
                        let noise = err[r] + rep_error_base(alt, omega, data.get(alt));
                        let mass = rep_mass(rep, omega, data.get(rep))
                            + rep_mass(alt, omega, data.get(alt));
                        let mag = crate::vec3::cnorm(&j[r]).max(crate::vec3::cnorm(&other));
                        if mag <= noise * T::of(50.0) || mag <= mass * T::of(3e-8) {
                            continue;
                        }
                        let diff = crate::vec3::cnorm(&crate::vec3::csub(&j[r], &other));
                        let gap = if diff == T::zero() {
                            0.0
                        } else {
                            (diff / mag).to_f64_lossy()
                        };
                        checked += 1;
                        if gap > max_gap {
                            max_gap = gap;
                            worst_radial = r;
                        }
                    }
                }
            }
        }
        DirectionOut { j, err, checked, max_gap, worst_radial }
    };

    let outputs: Vec<DirectionOut<T>> = if opts.parallel {
        (0..n_angular).into_par_iter().map(run_direction).collect()
    } else {
        (0..n_angular).map(run_direction).collect()
    };

    let mut j = Vec::with_capacity(n_radial * n_angular);
    let mut error_estimates = Vec::with_capacity(n_radial * n_angular);
    let mut checked = 0usize;
    let mut max_rel_gap = 0.0f64;
    let mut worst_sample = None;
    for (a, out) in outputs.into_iter().enumerate() {
        j.extend_from_slice(&out.j);
        error_estimates.extend_from_slice(&out.err);
        checked += out.checked;
        if out.max_gap > max_rel_gap {
            max_rel_gap = out.max_gap;
            worst_sample = Some((a, out.worst_radial));
        }
    }

    if max_rel_gap > opts.cross_check_rtol {
        return Err(Error::Accuracy {
            context: "compute_amplitude cross-check",
            estimate: max_rel_gap,
            tolerance: opts.cross_check_rtol,
        });
    }

    let mut j_t = Vec::with_capacity(j.len());
    for a in 0..n_angular {
        let n = grid.angular_nodes()[a].dir;
        for r in 0..n_radial {
            let idx = a * n_radial + r;
            // P(n) applied directly to the sample
            let h = &j[idx];
            let nh = rcdot(&n, h);
            j_t.push([
                h[0] - nh.scale(n[0]),
                h[1] - nh.scale(n[1]),
                h[2] - nh.scale(n[2]),
            ]);
        }
    }

    Ok(EmissionAmplitude {
        grid: Arc::clone(grid),
        j,
        j_t,
        error_estimates,
        rep_by_radial,
        strategy: opts.strategy,
        trajectory_hash: traj.content_hash(),
        cross_checks: CrossCheckSummary {
            checked,
            max_rel_gap,
            worst_sample,
        },
        omega_switch: opts.omega_switch,
        cross_check_rtol: opts.cross_check_rtol,
    })
}
