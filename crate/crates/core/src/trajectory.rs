//! Piecewise-polynomial particle trajectories.
//!
//! A [`Trajectory`] is a list of breakpoints `t_0 < ... < t_K` with one
//! polynomial segment (degree <= 7, one polynomial per spatial component)
//! per interval, linear tails `x(t) = x(t_0) + v_in (t - t_0)` and
//! `x(t) = x(t_K) + v_out (t - t_K)` outside, and a declared smoothness
//! class per breakpoint. Segments are stored in local time `tau = t - t_k`
//! so derivatives are exact polynomial operations.
//!
//! Units are natural: `c = 1`, speeds are dimensionless and must stay
//! strictly below 1.

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::vec3::{add, dot, norm, scale, sub, R3};
use serde::{Deserialize, Serialize};

pub const MAX_DEGREE: usize = 7;
// f64 values; coarser scalars fall back to multiples of their epsilon
const CONTINUITY_RTOL: f64 = 1e-12;
const CLASS_RTOL: f64 = 1e-10;
const SPEED_SAMPLE_RTOL: f64 = 1e-9;

fn continuity_tol<T: Real>() -> T {
    T::of(CONTINUITY_RTOL).max(T::epsilon() * T::of(8.0))
}

fn class_tol<T: Real>() -> T {
    T::of(CLASS_RTOL).max(T::epsilon() * T::of(64.0))
}

fn speed_tol<T: Real>() -> T {
    T::of(SPEED_SAMPLE_RTOL).max(T::epsilon() * T::of(16.0))
}

/// Number of sample points per segment used to verify the speed bound.
pub const SPEED_SAMPLES_PER_SEGMENT: usize = 10_000;

/// Polynomial in one variable, coefficient `coeffs[j]` multiplying `tau^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial<T> {
    coeffs: Vec<T>,
}

impl<T: Real> Polynomial<T> {
    pub fn new(coeffs: Vec<T>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Validation("polynomial needs >= 1 coefficient".into()));
        }
        if coeffs.len() > MAX_DEGREE + 1 {
            return Err(Error::Validation(format!(
                "polynomial degree {} exceeds max {}",
                coeffs.len() - 1,
                MAX_DEGREE
            )));
        }
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// Value of the `order`-th derivative at `tau`, exact in the coefficients.
    pub fn eval_deriv(&self, tau: T, order: usize) -> T {
        if order >= self.coeffs.len() {
            return T::zero();
        }
        // Horner on the analytically differentiated coefficients.
        let mut acc = T::zero();
        for j in (order..self.coeffs.len()).rev() {
            let mut fac = T::one();
            for m in 0..order {
                fac *= T::of_usize(j - m);
            }
            acc = acc * tau + self.coeffs[j] * fac;
        }
        acc
    }

    /// Antiderivative with value `c0` at `tau = 0`.
    pub fn antiderivative(&self, c0: T) -> Result<Self> {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(c0);
        for (j, &c) in self.coeffs.iter().enumerate() {
            coeffs.push(c / T::of_usize(j + 1));
        }
        Polynomial::new(coeffs)
    }

    fn map_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.to_f64_lossy()).collect()
    }
}

/// One trajectory segment: three component polynomials in local time.
pub type Segment<T> = [Polynomial<T>; 3];

/// Declared smoothness at a breakpoint: one-sided derivatives of orders
/// `0..=k` agree for class `Ck`. `C0` marks a velocity jump.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SmoothnessClass {
    C0,
    C1,
    C2,
    C3,
}

impl SmoothnessClass {
    pub fn order(self) -> usize {
        match self {
            SmoothnessClass::C0 => 0,
            SmoothnessClass::C1 => 1,
            SmoothnessClass::C2 => 2,
            SmoothnessClass::C3 => 3,
        }
    }
}

/// Which one-sided limit to take at a breakpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Phase `psi(p, t) = omega t - p . x(t)` and its first three time
/// derivatives at a point, with the side used at breakpoints.
#[derive(Debug, Clone, Copy)]
pub struct PhaseDerivatives<T> {
    pub psi: T,
    pub psi_t: T,
    pub psi_tt: T,
    pub psi_ttt: T,
    pub side: Side,
}

#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    breakpoints: Vec<T>,
    segments: Vec<Segment<T>>,
    v_in: R3<T>,
    v_out: R3<T>,
    classes: Vec<SmoothnessClass>,
    v0: T,
}

impl<T: Real> Trajectory<T> {
    /// Assemble and validate a trajectory. See the module docs for the
    /// layout; validation enforces continuity, the declared smoothness
    /// classes, tail consistency and the speed bound `v0 < 1`.
    pub fn new(
        breakpoints: Vec<T>,
        segments: Vec<Segment<T>>,
        v_in: R3<T>,
        v_out: R3<T>,
        classes: Vec<SmoothnessClass>,
        v0: T,
    ) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::Validation("need at least two breakpoints".into()));
        }
        if segments.len() + 1 != breakpoints.len() {
            return Err(Error::Validation(format!(
                "{} breakpoints require {} segments, got {}",
                breakpoints.len(),
                breakpoints.len() - 1,
                segments.len()
            )));
        }
        if classes.len() != breakpoints.len() {
            return Err(Error::Validation("one smoothness class per breakpoint".into()));
        }
        for w in breakpoints.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::Validation("breakpoints must be strictly increasing".into()));
            }
        }
        for v in [&v_in, &v_out] {
            let s = norm(v);
            if s >= T::one() {
                return Err(Error::Superluminal { speed: s.to_f64_lossy() });
            }
        }
        if v0 >= T::one() || v0 < T::zero() {
            return Err(Error::Superluminal { speed: v0.to_f64_lossy() });
        }
        let traj = Self {
            breakpoints,
            segments,
            v_in,
            v_out,
            classes,
            v0,
        };
        traj.validate()?;
        Ok(traj)
    }

    fn validate(&self) -> Result<()> {
        let k = self.segments.len();
        // continuity and declared class agreement at every breakpoint
        for (i, &tb) in self.breakpoints.iter().enumerate() {
            let declared = self.classes[i].order();
            for order in 0..=3usize {
                let l = self.one_sided(tb, order, Side::Left, i, k);
                let r = self.one_sided(tb, order, Side::Right, i, k);
                let tol = if order == 0 {
                    continuity_tol::<T>()
                } else {
                    class_tol::<T>()
                };
                if order <= declared {
                    let s = T::one().max(norm(&l)).max(norm(&r));
                    if norm(&sub(&l, &r)) > tol * s {
                        return Err(Error::Validation(format!(
                            "breakpoint {i}: order-{order} derivative mismatch exceeds declared class"
                        )));
                    }
                }
            }
        }
        // sampled speed bound
        let mut sup = norm(&self.v_in).max(norm(&self.v_out));
        for (s, w) in self.segments.iter().zip(self.breakpoints.windows(2)) {
            let len = w[1] - w[0];
            let n = SPEED_SAMPLES_PER_SEGMENT;
            for q in 0..=n {
                let tau = len * T::of_usize(q) / T::of_usize(n);
                let v = [
                    s[0].eval_deriv(tau, 1),
                    s[1].eval_deriv(tau, 1),
                    s[2].eval_deriv(tau, 1),
                ];
                sup = sup.max(norm(&v));
            }
        }
        if sup > self.v0 * (T::one() + speed_tol::<T>()) {
            return Err(Error::Validation(format!(
                "sampled speed {} exceeds declared bound v0 = {}",
                sup.to_f64_lossy(),
                self.v0.to_f64_lossy()
            )));
        }
        Ok(())
    }

    /// One-sided derivative around breakpoint index `i` (of `k` segments).
    fn one_sided(&self, t: T, order: usize, side: Side, i: usize, k: usize) -> R3<T> {
        match side {
            Side::Left => {
                if i == 0 {
                    self.tail_deriv(t, order, Side::Left)
                } else {
                    self.segment_deriv(i - 1, t, order)
                }
            }
            Side::Right => {
                if i == k {
                    self.tail_deriv(t, order, Side::Right)
                } else {
                    self.segment_deriv(i, t, order)
                }
            }
        }
    }

    fn tail_deriv(&self, t: T, order: usize, side: Side) -> R3<T> {
        let (t_ref, v, x_ref) = match side {
            Side::Left => (self.t_start(), self.v_in, self.anchor()),
            Side::Right => (self.t_end(), self.v_out, self.end_position()),
        };
        match order {
            0 => add(&x_ref, &scale(&v, t - t_ref)),
            1 => v,
            _ => [T::zero(); 3],
        }
    }

    fn segment_deriv(&self, seg: usize, t: T, order: usize) -> R3<T> {
        let tau = t - self.breakpoints[seg];
        let s = &self.segments[seg];
        [
            s[0].eval_deriv(tau, order),
            s[1].eval_deriv(tau, order),
            s[2].eval_deriv(tau, order),
        ]
    }

    /// Position, velocity, acceleration or jerk (`order` 0..=3) at time `t`.
    /// At a breakpoint the limit from `side` is returned; elsewhere both
    /// sides agree.
    pub fn eval(&self, t: T, order: usize, side: Side) -> Result<R3<T>> {
        if order > 3 {
            return Err(Error::UnsupportedOrder { order });
        }
        Ok(self.eval_unchecked(t, order, side))
    }

    pub(crate) fn eval_unchecked(&self, t: T, order: usize, side: Side) -> R3<T> {
        let bp = &self.breakpoints;
        if t < bp[0] || (t == bp[0] && side == Side::Left) {
            return self.tail_deriv(t, order, Side::Left);
        }
        let last = bp.len() - 1;
        if t > bp[last] || (t == bp[last] && side == Side::Right) {
            return self.tail_deriv(t, order, Side::Right);
        }
        // index of first breakpoint >= t
        let i = bp.partition_point(|&b| b < t);
        if i < bp.len() && bp[i] == t {
            // exactly at an interior breakpoint
            return match side {
                Side::Left => self.segment_deriv(i - 1, t, order),
                Side::Right => self.segment_deriv(i, t, order),
            };
        }
        self.segment_deriv(i - 1, t, order)
    }

    /// Phase `psi = omega t - p . x(t)` and derivatives, `omega = |p|`.
    pub fn phase(&self, p: &R3<T>, t: T, side: Side) -> Result<PhaseDerivatives<T>> {
        let omega = norm(p);
        if omega == T::zero() {
            return Err(Error::ZeroMomentum);
        }
        let x = self.eval_unchecked(t, 0, side);
        let v = self.eval_unchecked(t, 1, side);
        let a = self.eval_unchecked(t, 2, side);
        let j = self.eval_unchecked(t, 3, side);
        Ok(PhaseDerivatives {
            psi: omega * t - dot(p, &x),
            psi_t: omega - dot(p, &v),
            psi_tt: -dot(p, &a),
            psi_ttt: -dot(p, &j),
            side,
        })
    }

    /// Electrostatic potential of the unit point charge,
    /// `(4 pi)^{-1} / |x - x(t)|`.
    pub fn coulomb_potential(&self, x: &R3<T>, t: T) -> Result<T> {
        let r = norm(&sub(x, &self.eval_unchecked(t, 0, Side::Right)));
        if r == T::zero() {
            return Err(Error::OnWorldline);
        }
        Ok((T::of(4.0) * T::PI() * r).recip())
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    pub fn segments(&self) -> &[Segment<T>] {
        &self.segments
    }

    pub fn classes(&self) -> &[SmoothnessClass] {
        &self.classes
    }

    pub fn v_in(&self) -> R3<T> {
        self.v_in
    }

    pub fn v_out(&self) -> R3<T> {
        self.v_out
    }

    pub fn v0(&self) -> T {
        self.v0
    }

    pub fn t_start(&self) -> T {
        self.breakpoints[0]
    }

    pub fn t_end(&self) -> T {
        *self.breakpoints.last().unwrap()
    }

    /// Position at the first breakpoint.
    pub fn anchor(&self) -> R3<T> {
        let s = &self.segments[0];
        [s[0].coeffs()[0], s[1].coeffs()[0], s[2].coeffs()[0]]
    }

    fn end_position(&self) -> R3<T> {
        let last = self.segments.len() - 1;
        let tau = self.breakpoints[last + 1] - self.breakpoints[last];
        self.segment_deriv(last, tau + self.breakpoints[last], 0)
    }

    /// Velocity has compact support (both asymptotic velocities vanish).
    pub fn velocity_compact(&self) -> bool {
        norm(&self.v_in) == T::zero() && norm(&self.v_out) == T::zero()
    }

    /// True when some breakpoint carries a velocity jump.
    pub fn has_velocity_jump(&self) -> bool {
        self.classes.contains(&SmoothnessClass::C0)
    }

    /// Breakpoints with declared class C0, paired with their one-sided
    /// velocities `(t_b, v_minus, v_plus)`.
    pub fn velocity_jumps(&self) -> Vec<(T, R3<T>, R3<T>)> {
        self.breakpoints
            .iter()
            .zip(&self.classes)
            .filter(|(_, c)| **c == SmoothnessClass::C0)
            .map(|(&t, _)| {
                (
                    t,
                    self.eval_unchecked(t, 1, Side::Left),
                    self.eval_unchecked(t, 1, Side::Right),
                )
            })
            .collect()
    }

    /// Breakpoints where the acceleration jumps, as `(t_b, a_minus - a_plus)`.
    /// Jumps below the class tolerance are dropped.
    pub fn acceleration_jumps(&self) -> Vec<(T, R3<T>)> {
        let mut out = Vec::new();
        for &t in &self.breakpoints {
            let l = self.eval_unchecked(t, 2, Side::Left);
            let r = self.eval_unchecked(t, 2, Side::Right);
            let d = sub(&l, &r);
            let s = T::one().max(norm(&l)).max(norm(&r));
            if norm(&d) > class_tol::<T>() * s {
                out.push((t, d));
            }
        }
        out
    }

    /// Same trajectory shifted in time: `x(t) -> x(t - tau)`.
    pub fn translated_in_time(&self, tau: T) -> Self {
        let mut t = self.clone();
        for b in &mut t.breakpoints {
            *b += tau;
        }
        t
    }

    /// Same trajectory shifted in space: `x(t) -> x(t) + a`.
    pub fn translated_in_space(&self, a: &R3<T>) -> Self {
        let mut t = self.clone();
        for seg in &mut t.segments {
            for (c, &ai) in seg.iter_mut().zip(a.iter()) {
                c.coeffs[0] += ai;
            }
        }
        t
    }

    /// Trajectory rotated by the matrix `r` (rows `r[i]`): `x -> R x`.
    pub fn rotated(&self, r: &[R3<T>; 3]) -> Result<Self> {
        let rot = |v: &R3<T>| [dot(&r[0], v), dot(&r[1], v), dot(&r[2], v)];
        let mut segments = Vec::with_capacity(self.segments.len());
        for seg in &self.segments {
            let len = seg.iter().map(|p| p.coeffs().len()).max().unwrap();
            let mut comps: [Vec<T>; 3] = [vec![T::zero(); len], vec![T::zero(); len], vec![T::zero(); len]];
            for j in 0..len {
                let c = [
                    seg[0].coeffs().get(j).copied().unwrap_or(T::zero()),
                    seg[1].coeffs().get(j).copied().unwrap_or(T::zero()),
                    seg[2].coeffs().get(j).copied().unwrap_or(T::zero()),
                ];
                let rc = rot(&c);
                for i in 0..3 {
                    comps[i][j] = rc[i];
                }
            }
            let [cx, cy, cz] = comps;
            segments.push([Polynomial::new(cx)?, Polynomial::new(cy)?, Polynomial::new(cz)?]);
        }
        Trajectory::new(
            self.breakpoints.clone(),
            segments,
            rot(&self.v_in),
            rot(&self.v_out),
            self.classes.clone(),
            self.v0,
        )
    }

    /// Serializable document form (fixed field names).
    pub fn to_doc(&self) -> TrajectoryDoc {
        TrajectoryDoc {
            breakpoints: self.breakpoints.iter().map(|b| b.to_f64_lossy()).collect(),
            segments: self
                .segments
                .iter()
                .map(|s| [s[0].map_f64(), s[1].map_f64(), s[2].map_f64()])
                .collect(),
            v_in: [
                self.v_in[0].to_f64_lossy(),
                self.v_in[1].to_f64_lossy(),
                self.v_in[2].to_f64_lossy(),
            ],
            v_out: [
                self.v_out[0].to_f64_lossy(),
                self.v_out[1].to_f64_lossy(),
                self.v_out[2].to_f64_lossy(),
            ],
            classes: self.classes.clone(),
            v0: self.v0.to_f64_lossy(),
        }
    }

    pub fn from_doc(doc: &TrajectoryDoc) -> Result<Self> {
        let lift3 = |v: &[f64; 3]| [T::of(v[0]), T::of(v[1]), T::of(v[2])];
        let mut segments = Vec::with_capacity(doc.segments.len());
        for s in &doc.segments {
            let mk = |c: &Vec<f64>| Polynomial::new(c.iter().map(|&x| T::of(x)).collect());
            segments.push([mk(&s[0])?, mk(&s[1])?, mk(&s[2])?]);
        }
        Trajectory::new(
            doc.breakpoints.iter().map(|&b| T::of(b)).collect(),
            segments,
            lift3(&doc.v_in),
            lift3(&doc.v_out),
            doc.classes.clone(),
            T::of(doc.v0),
        )
    }

    /// Stable content hash of the serialized document (FNV-1a over the
    /// JSON bytes), used in amplitude CSV metadata.
    pub fn content_hash(&self) -> u64 {
        let bytes = serde_json::to_vec(&self.to_doc()).expect("trajectory serializes");
        let mut h: u64 = 0xcbf29ce484222325;
        for b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }
}

/// Structured-text form of a trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryDoc {
    pub breakpoints: Vec<f64>,
    pub segments: Vec<[Vec<f64>; 3]>,
    pub v_in: [f64; 3],
    pub v_out: [f64; 3],
    pub classes: Vec<SmoothnessClass>,
    pub v0: f64,
}

// ---------------------------------------------------------------------------
// builders
// ---------------------------------------------------------------------------

/// 7th-order smoothstep: s(0)=0, s(1)=1 and s', s'', s''' vanish at both
/// ends. Coefficients of 35u^4 - 84u^5 + 70u^6 - 20u^7.
const SMOOTHSTEP7: [f64; 8] = [0.0, 0.0, 0.0, 0.0, 35.0, -84.0, 70.0, -20.0];
/// Peak of the derivative of [`SMOOTHSTEP7`], attained at u = 1/2.
const SMOOTHSTEP7_PEAK_SLOPE: f64 = 2.1875;

/// 5th-order smoothstep 10u^3 - 15u^4 + 6u^5 (s' and s'' vanish at ends);
/// used as a velocity ramp so trajectories stay C3 at ramp boundaries.
const SMOOTHSTEP5: [f64; 6] = [0.0, 0.0, 0.0, 10.0, -15.0, 6.0];

fn poly_from_f64<T: Real>(c: &[f64]) -> Polynomial<T> {
    Polynomial::new(c.iter().map(|&x| T::of(x)).collect()).expect("builder polynomial")
}

/// Velocity ramp segment: velocity goes from `v_a` at local 0 to `v_b` at
/// local `len` along the 5th-order smoothstep, position starting at `x0`.
/// The resulting position polynomial has degree 6.
fn ramp_segment<T: Real>(x0: &R3<T>, v_a: &R3<T>, v_b: &R3<T>, len: T) -> Result<Segment<T>> {
    let s5: Polynomial<T> = poly_from_f64(&SMOOTHSTEP5);
    // velocity(u) = v_a + (v_b - v_a) s5(u),  u = tau / len
    // position(tau) = x0 + v_a tau + (v_b - v_a) len S5(u)
    let s5_int = s5.antiderivative(T::zero())?;
    let dv = sub(v_b, v_a);
    let mut seg: Vec<Polynomial<T>> = Vec::with_capacity(3);
    for i in 0..3 {
        let mut coeffs = vec![T::zero(); 8];
        coeffs[0] = x0[i];
        coeffs[1] += v_a[i];
        for (j, &c) in s5_int.coeffs().iter().enumerate() {
            // S5(tau/len) * len * dv_i contributes dv_i * c * len^{1-j} tau^j
            if c != T::zero() {
                coeffs[j] += dv[i] * c * len.powi(1 - j as i32);
            }
        }
        seg.push(Polynomial::new(coeffs)?);
    }
    let [a, b, c] = <[Polynomial<T>; 3]>::try_from(seg).unwrap();
    Ok([a, b, c])
}

/// Straight segment: constant velocity `v` starting from `x0`.
fn linear_segment<T: Real>(x0: &R3<T>, v: &R3<T>) -> Segment<T> {
    [
        Polynomial::new(vec![x0[0], v[0]]).unwrap(),
        Polynomial::new(vec![x0[1], v[1]]).unwrap(),
        Polynomial::new(vec![x0[2], v[2]]).unwrap(),
    ]
}

fn segment_end<T: Real>(seg: &Segment<T>, len: T) -> R3<T> {
    [
        seg[0].eval_deriv(len, 0),
        seg[1].eval_deriv(len, 0),
        seg[2].eval_deriv(len, 0),
    ]
}

/// Smooth stop/start motion: at rest outside `[0, duration]`, displaced by
/// `displacement` along a C3 polynomial bump.
pub fn build_smooth_stop_start<T: Real>(
    duration: T,
    displacement: &R3<T>,
    v0_cap: T,
) -> Result<Trajectory<T>> {
    if duration <= T::zero() {
        return Err(Error::Validation("duration must be positive".into()));
    }
    let peak = T::of(SMOOTHSTEP7_PEAK_SLOPE) * norm(displacement) / duration;
    if peak >= T::one() {
        return Err(Error::Superluminal { speed: peak.to_f64_lossy() });
    }
    if v0_cap >= T::one() || peak >= v0_cap {
        return Err(Error::Validation(format!(
            "need peak speed {} < v0_cap {} < 1",
            peak.to_f64_lossy(),
            v0_cap.to_f64_lossy()
        )));
    }
    let s7: Polynomial<T> = poly_from_f64(&SMOOTHSTEP7);
    let mut seg: Vec<Polynomial<T>> = Vec::with_capacity(3);
    for i in 0..3 {
        let mut coeffs = vec![T::zero(); 8];
        for (j, &c) in s7.coeffs().iter().enumerate() {
            if c != T::zero() {
                coeffs[j] = displacement[i] * c * duration.powi(-(j as i32));
            }
        }
        seg.push(Polynomial::new(coeffs)?);
    }
    let [a, b, c] = <[Polynomial<T>; 3]>::try_from(seg).unwrap();
    Trajectory::new(
        vec![T::zero(), duration],
        vec![[a, b, c]],
        [T::zero(); 3],
        [T::zero(); 3],
        vec![SmoothnessClass::C3, SmoothnessClass::C3],
        v0_cap,
    )
}

/// Velocity-kick motion: smooth ramp 0 -> `v_minus` on `[-ramp-1, -1]`,
/// constant `v_minus` on `[-1, 0]`, jump to `v_plus` at `t = 0`, constant
/// on `[0, 1]`, smooth ramp back to rest on `[1, ramp+1]`. A degenerate
/// kick (`v_minus == v_plus`) collapses to a smooth trajectory with no C0
/// breakpoint.
pub fn build_kick<T: Real>(v_minus: &R3<T>, v_plus: &R3<T>, ramp: T) -> Result<Trajectory<T>> {
    if ramp <= T::zero() {
        return Err(Error::Validation("ramp must be positive".into()));
    }
    for v in [v_minus, v_plus] {
        let s = norm(v);
        if s >= T::one() {
            return Err(Error::Superluminal { speed: s.to_f64_lossy() });
        }
    }
    let one = T::one();
    let zero3 = [T::zero(); 3];
    let t0 = -(ramp + one);
    let x0 = zero3;
    let up = ramp_segment(&x0, &zero3, v_minus, ramp)?;
    let x1 = segment_end(&up, ramp);
    let v0 = norm(v_minus).max(norm(v_plus));
    let degenerate = norm(&sub(v_minus, v_plus)) < T::of(1e-14);
    if degenerate {
        // [-ramp-1, -1] ramp, [-1, 1] constant, [1, ramp+1] ramp down
        let mid = linear_segment(&x1, v_minus);
        let x2 = segment_end(&mid, T::of(2.0));
        let down = ramp_segment(&x2, v_minus, &zero3, ramp)?;
        return Trajectory::new(
            vec![t0, -one, one, ramp + one],
            vec![up, mid, down],
            zero3,
            zero3,
            vec![SmoothnessClass::C3; 4],
            v0,
        );
    }
    let before = linear_segment(&x1, v_minus);
    let x_jump = segment_end(&before, one);
    let after = linear_segment(&x_jump, v_plus);
    let x2 = segment_end(&after, one);
    let down = ramp_segment(&x2, v_plus, &zero3, ramp)?;
    Trajectory::new(
        vec![t0, -one, T::zero(), one, ramp + one],
        vec![up, before, after, down],
        zero3,
        zero3,
        vec![
            SmoothnessClass::C3,
            SmoothnessClass::C3,
            SmoothnessClass::C0,
            SmoothnessClass::C3,
            SmoothnessClass::C3,
        ],
        v0,
    )
}

/// Boost motion: constant `v_in` for `t <= 0`, constant `v_out` for
/// `t >= duration`, C3 monotone interpolation between; the acceleration is
/// supported in `[0, duration]`.
pub fn build_boost<T: Real>(v_in: &R3<T>, v_out: &R3<T>, duration: T) -> Result<Trajectory<T>> {
    if duration <= T::zero() {
        return Err(Error::Validation("duration must be positive".into()));
    }
    for v in [v_in, v_out] {
        let s = norm(v);
        if s >= T::one() {
            return Err(Error::Superluminal { speed: s.to_f64_lossy() });
        }
    }
    let seg = ramp_segment(&[T::zero(); 3], v_in, v_out, duration)?;
    Trajectory::new(
        vec![T::zero(), duration],
        vec![seg],
        *v_in,
        *v_out,
        vec![SmoothnessClass::C3, SmoothnessClass::C3],
        norm(v_in).max(norm(v_out)),
    )
}

/// Constant-velocity motion (no acceleration anywhere). Realized as one
/// linear segment of unit length so the document form stays anchored.
pub fn build_constant_velocity<T: Real>(v: &R3<T>) -> Result<Trajectory<T>> {
    let s = norm(v);
    if s >= T::one() {
        return Err(Error::Superluminal { speed: s.to_f64_lossy() });
    }
    Trajectory::new(
        vec![T::zero(), T::one()],
        vec![linear_segment(&[T::zero(); 3], v)],
        *v,
        *v,
        vec![SmoothnessClass::C3, SmoothnessClass::C3],
        s,
    )
}

/// Compactly supported motion whose acceleration jumps at `t = 0` while
/// position and velocity stay continuous: velocity ramps 0 -> `v_peak` on
/// `[-half, 0]` ending with zero acceleration, then decays along
/// `(1-u)^4 (1+2u)` whose slope at 0+ is nonzero. All other breakpoints
/// are C3.
pub fn build_accel_jump<T: Real>(v_peak: &R3<T>, half: T) -> Result<Trajectory<T>> {
    if half <= T::zero() {
        return Err(Error::Validation("half duration must be positive".into()));
    }
    let s = norm(v_peak);
    if s >= T::one() {
        return Err(Error::Superluminal { speed: s.to_f64_lossy() });
    }
    if s == T::zero() {
        return Err(Error::Validation("v_peak must be nonzero".into()));
    }
    let zero3 = [T::zero(); 3];
    let up = ramp_segment(&zero3, &zero3, v_peak, half)?;
    let x1 = segment_end(&up, half);
    // descending velocity profile q(u) = (1-u)^4 (1+2u) = 1 - 2u^2*(...):
    // expanded: 1 + 2u - 4u - ... compute coefficients directly.
    // (1-u)^4 = 1 - 4u + 6u^2 - 4u^3 + u^4
    // q = (1-u)^4 + 2u(1-u)^4 = 1 - 2u - 2u^2 + 8u^3 - 7u^4 + 2u^5
    let q = [1.0, -2.0, -2.0, 8.0, -7.0, 2.0];
    let qi: Polynomial<T> = poly_from_f64(&q).antiderivative(T::zero())?;
    let mut seg: Vec<Polynomial<T>> = Vec::with_capacity(3);
    for i in 0..3 {
        let mut coeffs = vec![T::zero(); 8];
        coeffs[0] = x1[i];
        for (j, &c) in qi.coeffs().iter().enumerate() {
            if c != T::zero() && j >= 1 {
                // velocity v_peak_i q(tau/half): position adds v_peak_i * half * Qi(u)
                coeffs[j] += v_peak[i] * c * half.powi(1 - j as i32);
            }
        }
        seg.push(Polynomial::new(coeffs)?);
    }
    let [a, b, c] = <[Polynomial<T>; 3]>::try_from(seg).unwrap();
    Trajectory::new(
        vec![-half, T::zero(), half],
        vec![up, [a, b, c]],
        zero3,
        zero3,
        vec![SmoothnessClass::C3, SmoothnessClass::C1, SmoothnessClass::C3],
        s,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vec3::norm;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type T = f64;

    fn bump() -> Trajectory<T> {
        build_smooth_stop_start(10.0, &[1.0, 0.0, 0.0], 0.5).unwrap()
    }

    #[test]
    fn constant_trajectory_derivative_vanishes() {
        let t = build_constant_velocity(&[0.0, 0.0, 0.0]).unwrap();
        for &time in &[-3.0, 0.0, 0.4, 1.0, 7.0] {
            assert_eq!(t.eval(time, 1, Side::Right).unwrap(), [0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn linear_tail_velocity_is_exact() {
        let t = build_boost(&[0.1, 0.0, 0.0], &[0.0, 0.5, 0.0], 4.0).unwrap();
        assert_eq!(t.eval(100.0, 1, Side::Right).unwrap(), [0.0, 0.5, 0.0]);
        assert_eq!(t.eval(-100.0, 1, Side::Left).unwrap(), [0.1, 0.0, 0.0]);
    }

    #[test]
    fn bump_is_c2_at_breakpoints() {
        let t = bump();
        for &tb in t.breakpoints() {
            for order in 0..=2 {
                let l = t.eval(tb, order, Side::Left).unwrap();
                let r = t.eval(tb, order, Side::Right).unwrap();
                assert!(norm(&sub(&l, &r)) <= 1e-10 * (1.0 + norm(&l).max(norm(&r))));
            }
        }
    }

    #[test]
    fn bump_boundary_conditions() {
        let t = bump();
        assert_eq!(t.eval(0.0, 1, Side::Right).unwrap(), [0.0; 3]);
        // polynomial cancellation at the far end leaves float dust
        assert!(norm(&t.eval(10.0, 1, Side::Left).unwrap()) < 1e-13);
        let d = sub(
            &t.eval(10.0, 0, Side::Right).unwrap(),
            &t.eval(0.0, 0, Side::Left).unwrap(),
        );
        assert!(norm(&sub(&d, &[1.0, 0.0, 0.0])) < 1e-14);
    }

    #[test]
    fn bump_peak_speed_below_cap() {
        let t = bump();
        let mut peak: f64 = 0.0;
        for q in 0..=20_000 {
            let time = 10.0 * q as f64 / 20_000.0;
            peak = peak.max(norm(&t.eval(time, 1, Side::Right).unwrap()));
        }
        assert!(peak < 0.4, "peak speed {peak}");
        // analytic peak of the degree-7 smoothstep derivative
        assert!((peak - 0.21875).abs() < 1e-6);
    }

    #[test]
    fn phase_static_point() {
        let t = build_constant_velocity(&[0.0; 3]).unwrap();
        let ph = t.phase(&[0.0, 0.0, 1.0], 2.0, Side::Right).unwrap();
        assert_eq!(ph.psi, 2.0);
        assert_eq!(ph.psi_t, 1.0);
        assert_eq!(ph.psi_tt, 0.0);
    }

    #[test]
    fn phase_zero_momentum_rejected() {
        let t = bump();
        assert!(matches!(
            t.phase(&[0.0; 3], 1.0, Side::Right),
            Err(Error::ZeroMomentum)
        ));
    }

    #[test]
    fn phase_no_stationary_point() {
        let t = build_kick(&[0.5, 0.0, 0.0], &[0.0, 0.3, 0.0], 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let p = [
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
            ];
            if norm(&p) < 1e-3 {
                continue;
            }
            let time = rng.gen_range(-5.0..5.0);
            let ph = t.phase(&p, time, Side::Right).unwrap();
            assert!(ph.psi_t >= norm(&p) * (1.0 - t.v0()) - 1e-12);
            assert!(ph.psi_t <= norm(&p) * (1.0 + t.v0()) + 1e-12);
        }
    }

    #[test]
    fn kick_one_sided_velocities() {
        let t = build_kick(&[0.5, 0.0, 0.0], &[0.0; 3], 2.0).unwrap();
        assert_eq!(t.eval(0.0, 1, Side::Left).unwrap(), [0.5, 0.0, 0.0]);
        assert_eq!(t.eval(0.0, 1, Side::Right).unwrap(), [0.0, 0.0, 0.0]);
        let ph_l: PhaseDerivatives<f64> = t.phase(&[1.0, 2.0, -0.5], 0.0, Side::Left).unwrap();
        let ph_r = t.phase(&[1.0, 2.0, -0.5], 0.0, Side::Right).unwrap();
        // psi_t(left) - psi_t(right) = p . (v_plus - v_minus)
        assert!((ph_l.psi_t - ph_r.psi_t - (-0.5)).abs() < 1e-14);
    }

    #[test]
    fn kick_velocity_support_is_compact() {
        let t = build_kick(&[0.5, 0.0, 0.0], &[0.0, 0.3, 0.0], 2.0).unwrap();
        for &time in &[-3.2, -5.0, 3.2, 10.0] {
            assert_eq!(t.eval(time, 1, Side::Right).unwrap(), [0.0; 3]);
        }
    }

    #[test]
    fn degenerate_kick_has_no_jump() {
        let v = [0.3, 0.1, 0.0];
        let t = build_kick(&v, &v, 2.0).unwrap();
        assert!(!t.has_velocity_jump());
        assert_eq!(t.eval(0.0, 1, Side::Left).unwrap(), v);
    }

    #[test]
    fn boost_equal_velocities_has_zero_acceleration() {
        let v = [0.2, 0.0, 0.4];
        let t = build_boost(&v, &v, 4.0).unwrap();
        for q in 0..=100 {
            let time = -1.0 + 6.0 * q as f64 / 100.0;
            assert!(norm(&t.eval(time, 2, Side::Right).unwrap()) < 1e-15);
        }
    }

    #[test]
    fn boost_velocity_endpoints() {
        let t = build_boost(&[0.0; 3], &[0.5, 0.0, 0.0], 4.0).unwrap();
        assert_eq!(t.eval(-1.0, 1, Side::Right).unwrap(), [0.0; 3]);
        assert_eq!(t.eval(5.0, 1, Side::Right).unwrap(), [0.5, 0.0, 0.0]);
    }

    #[test]
    fn boost_speed_stays_below_max() {
        let t = build_boost(&[0.3, 0.0, 0.0], &[0.0, 0.5, 0.0], 4.0).unwrap();
        let mut sup: f64 = 0.0;
        for q in 0..=5000 {
            let time = 4.0 * q as f64 / 5000.0;
            sup = sup.max(norm(&t.eval(time, 1, Side::Right).unwrap()));
        }
        assert!(sup <= 0.5 + 0.05);
    }

    #[test]
    fn accel_jump_builder_contract() {
        let t = build_accel_jump(&[0.4, 0.0, 0.0], 2.0).unwrap();
        // velocity continuous at 0, acceleration jumps
        assert!(
            norm(&sub(
                &t.eval(0.0, 1, Side::Left).unwrap(),
                &t.eval(0.0, 1, Side::Right).unwrap()
            )) < 1e-14
        );
        let jumps = t.acceleration_jumps();
        assert_eq!(jumps.len(), 1);
        assert_eq!(jumps[0].0, 0.0);
        // compact velocity support
        assert_eq!(t.eval(2.5, 1, Side::Right).unwrap(), [0.0; 3]);
        assert_eq!(t.eval(-2.5, 1, Side::Right).unwrap(), [0.0; 3]);
    }

    #[test]
    fn superluminal_builders_rejected() {
        assert!(matches!(
            build_smooth_stop_start(1.0, &[1.0, 0.0, 0.0], 0.9),
            Err(Error::Validation(_)) | Err(Error::Superluminal { .. })
        ));
        assert!(matches!(
            build_kick(&[1.2, 0.0, 0.0], &[0.0; 3], 1.0),
            Err(Error::Superluminal { .. })
        ));
        assert!(matches!(
            build_boost(&[0.0; 3], &[0.0, 1.0, 0.0], 1.0),
            Err(Error::Superluminal { .. })
        ));
    }

    #[test]
    fn eval_order_cap() {
        let t = bump();
        assert!(matches!(
            t.eval(1.0, 4, Side::Right),
            Err(Error::UnsupportedOrder { order: 4 })
        ));
    }

    #[test]
    fn eval_matches_symbolic_differentiation() {
        // derivative evaluation must agree with explicit coefficient calculus
        let p = Polynomial::new(vec![1.0, -2.0, 0.5, 3.0, -1.0, 0.25, -0.125, 2.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let tau: f64 = rng.gen_range(-2.0..2.0);
            // symbolic first derivative coefficients
            let dc: Vec<f64> = (1..8).map(|j| p.coeffs()[j] * j as f64).collect();
            let dp = Polynomial::new(dc).unwrap();
            let direct = p.eval_deriv(tau, 1);
            let symbolic = dp.eval_deriv(tau, 0);
            assert!(
                (direct - symbolic).abs() <= 1e-14 * (1.0 + symbolic.abs()),
                "tau={tau}"
            );
        }
    }

    #[test]
    fn coulomb_potential_values() {
        let t = build_constant_velocity(&[0.0; 3]).unwrap();
        let v = t.coulomb_potential(&[1.0, 0.0, 0.0], 0.3).unwrap();
        assert!((v - 1.0 / (4.0 * std::f64::consts::PI)).abs() < 1e-15);
        // 1/r homogeneity
        let v3 = t.coulomb_potential(&[3.0, 0.0, 0.0], 0.3).unwrap();
        assert!((v3 - v / 3.0).abs() < 1e-15);
        // moving trajectory: instantaneous position enters the static formula
        let b = build_boost(&[0.0; 3], &[0.5, 0.0, 0.0], 4.0).unwrap();
        let time = 10.0;
        let x = [7.0, 1.0, 0.0];
        let pos = b.eval(time, 0, Side::Right).unwrap();
        let expect = 1.0 / (4.0 * std::f64::consts::PI * norm(&sub(&x, &pos)));
        assert!((b.coulomb_potential(&x, time).unwrap() - expect).abs() < 1e-15);
        assert!(matches!(
            b.coulomb_potential(&pos, time),
            Err(Error::OnWorldline)
        ));
    }

    #[test]
    fn doc_round_trip() {
        let t = build_kick(&[0.5, 0.0, 0.0], &[0.0, 0.2, 0.1], 2.0).unwrap();
        let doc = t.to_doc();
        let json = serde_json::to_string(&doc).unwrap();
        assert!(json.contains("\"breakpoints\""));
        assert!(json.contains("\"segments\""));
        assert!(json.contains("\"v_in\""));
        assert!(json.contains("\"v_out\""));
        assert!(json.contains("\"classes\""));
        assert!(json.contains("\"v0\""));
        let back: TrajectoryDoc = serde_json::from_str(&json).unwrap();
        let t2 = Trajectory::<f64>::from_doc(&back).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let time = rng.gen_range(-4.0..4.0);
            for order in 0..=3 {
                let a = t.eval(time, order, Side::Right).unwrap();
                let b = t2.eval(time, order, Side::Right).unwrap();
                assert!(norm(&sub(&a, &b)) < 1e-14);
            }
        }
    }

    #[test]
    fn translations_are_exact() {
        let t = bump();
        let shifted = t.translated_in_time(2.5);
        let moved = t.translated_in_space(&[0.0, 1.0, -2.0]);
        let a = t.eval(3.0, 0, Side::Right).unwrap();
        assert!(norm(&sub(&shifted.eval(5.5, 0, Side::Right).unwrap(), &a)) < 1e-14);
        assert!(
            norm(&sub(
                &moved.eval(3.0, 0, Side::Right).unwrap(),
                &add(&a, &[0.0, 1.0, -2.0])
            )) < 1e-14
        );
    }
}
