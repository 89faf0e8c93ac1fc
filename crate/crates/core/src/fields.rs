//! Sharp-time wave kernels and the coherent-state functionals on the Weyl
//! algebra.
//!
//! Test functions are Gaussians (optionally times a linear factor) whose
//! spatial Fourier transforms are available in closed form, so only one
//! quadrature layer remains. All Hilbert-space pairings use the
//! relativistic measure `dp/(2 omega)`; the plain `L^2(dp)` pairing is
//! provided separately ([`crate::quadrature::pairing_l2`]) where the
//! equal-time commutation relations want it, with the `2 omega` factor
//! inserted explicitly.

use crate::emission::project_transverse;
use crate::error::{Error, Result};
use crate::quadrature::filon::PiecewiseSeries;
use crate::quadrature::grid::SphericalGrid;
use crate::scalar::{cis, Real, C};
use crate::vec3::{cnorm, cscale, czero3, dot, norm, scale, sub, C3, R3};
use num_complex::Complex;
use std::sync::Arc;

const TRANSVERSALITY_RTOL: f64 = 1e-12;

// ---------------------------------------------------------------------------
// test functions
// ---------------------------------------------------------------------------

/// Shape family of a [`TestFunction`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestFamily<T> {
    Gaussian,
    /// Gaussian times the linear factor `gradient . (x - center)`.
    GaussianPoly { gradient: R3<T> },
}

/// Vector-valued test function `f(x) = polarization * profile(x)` with a
/// closed-form Fourier transform `(2 pi)^{-3/2} int e^{-i p x} f(x) dx`.
#[derive(Debug, Clone)]
pub struct TestFunction<T> {
    pub family: TestFamily<T>,
    pub center: R3<T>,
    pub width: T,
    pub polarization: R3<T>,
}

impl<T: Real> TestFunction<T> {
    pub fn gaussian(center: R3<T>, width: T, polarization: R3<T>) -> Result<Self> {
        if width <= T::zero() {
            return Err(Error::Validation("width must be positive".into()));
        }
        Ok(Self {
            family: TestFamily::Gaussian,
            center,
            width,
            polarization,
        })
    }

    pub fn gaussian_poly(
        center: R3<T>,
        width: T,
        polarization: R3<T>,
        gradient: R3<T>,
    ) -> Result<Self> {
        if width <= T::zero() {
            return Err(Error::Validation("width must be positive".into()));
        }
        Ok(Self {
            family: TestFamily::GaussianPoly { gradient },
            center,
            width,
            polarization,
        })
    }

    /// Position-space value.
    pub fn value(&self, x: &R3<T>) -> R3<T> {
        let y = sub(x, &self.center);
        let s2 = self.width * self.width;
        let g = (-dot(&y, &y) / (T::of(2.0) * s2)).exp();
        let profile = match &self.family {
            TestFamily::Gaussian => g,
            TestFamily::GaussianPoly { gradient } => dot(gradient, &y) * g,
        };
        scale(&self.polarization, profile)
    }

    /// Closed-form Fourier transform `(2 pi)^{-3/2} int e^{-i p x} f dx`.
    pub fn ft(&self, p: &R3<T>) -> C3<T> {
        let s = self.width;
        let s2 = s * s;
        let radial = s * s2 * (-s2 * dot(p, p) * T::of(0.5)).exp();
        let phase = cis(-dot(p, &self.center));
        let factor = match &self.family {
            TestFamily::Gaussian => phase.scale(radial),
            TestFamily::GaussianPoly { gradient } => {
                // linear factor maps to -i sigma^2 (gradient . p)
                let minus_i = Complex::new(T::zero(), -T::one());
                phase * minus_i.scale(radial * s2 * dot(gradient, p))
            }
        };
        cscale(&crate::vec3::complexify(&self.polarization), factor)
    }

    /// Transverse part `P(p) ft(p)`.
    pub fn ft_transverse(&self, p: &R3<T>) -> Result<C3<T>> {
        project_transverse(p, &self.ft(p))
    }

    /// Momentum beyond which the transform is negligible.
    fn momentum_cutoff(&self) -> T {
        T::of(13.0) / self.width
    }
}

// ---------------------------------------------------------------------------
// mode functions
// ---------------------------------------------------------------------------

/// Declared decay behaviour of a mode function at large `|p|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayClass {
    /// Bounded by `C (1 + |p|^2)^{-k}` for every `k`.
    RapidlyDecreasing,
    /// Bounded by `C (1 + |p|^2)^{-k}` for this specific `k`.
    Polynomial(u32),
    Unrestricted,
}

/// Complex 3-vector field sampled on a [`SphericalGrid`].
#[derive(Clone)]
pub struct ModeFunction<T: Real> {
    grid: Arc<SphericalGrid<T>>,
    samples: Vec<C3<T>>,
    transverse: bool,
    decay: DecayClass,
}

impl<T: Real> ModeFunction<T> {
    /// Sample `f(p, omega)` on the grid. With `transverse` set, every
    /// sample is verified against `|p.h| <= 1e-12 |p| |h|`.
    pub fn from_fn(
        grid: &Arc<SphericalGrid<T>>,
        transverse: bool,
        decay: DecayClass,
        f: impl Fn(&R3<T>, T) -> C3<T>,
    ) -> Result<Self> {
        let mut samples = Vec::with_capacity(grid.len());
        for a in 0..grid.n_angular() {
            for r in 0..grid.n_radial() {
                let p = grid.momentum(a, r);
                samples.push(f(&p, grid.radial_nodes()[r]));
            }
        }
        let m = Self {
            grid: Arc::clone(grid),
            samples,
            transverse,
            decay,
        };
        if transverse {
            m.check_transverse()?;
        }
        m.check_decay()?;
        Ok(m)
    }

    /// Transverse sampling of a test function's Fourier transform.
    pub fn from_test_function_transverse(
        grid: &Arc<SphericalGrid<T>>,
        f: &TestFunction<T>,
    ) -> Result<Self> {
        Self::from_fn(grid, true, DecayClass::RapidlyDecreasing, |p, _| {
            f.ft_transverse(p).expect("p != 0 on grid")
        })
    }

    pub fn zero(grid: &Arc<SphericalGrid<T>>) -> Self {
        Self {
            grid: Arc::clone(grid),
            samples: vec![czero3(); grid.len()],
            transverse: true,
            decay: DecayClass::RapidlyDecreasing,
        }
    }

    pub fn grid(&self) -> &Arc<SphericalGrid<T>> {
        &self.grid
    }

    pub fn samples(&self) -> &[C3<T>] {
        &self.samples
    }

    pub fn decay(&self) -> DecayClass {
        self.decay
    }

    pub fn is_transverse_flagged(&self) -> bool {
        self.transverse
    }

    pub(crate) fn require_same_grid(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || self.grid.spec() == other.grid.spec() {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    fn check_transverse(&self) -> Result<()> {
        let tol = T::of(TRANSVERSALITY_RTOL);
        for a in 0..self.grid.n_angular() {
            let n = self.grid.angular_nodes()[a].dir;
            for r in 0..self.grid.n_radial() {
                let h = &self.samples[self.grid.sample_index(a, r)];
                let ph = crate::vec3::rcdot(&n, h).norm();
                // squaring underflows for subnormal-scale samples; use the
                // component sum as the magnitude reference and skip samples
                // that sit in the subnormal range outright
                let mag = h
                    .iter()
                    .fold(T::zero(), |m, c| m + c.re.abs() + c.im.abs());
                if mag < T::min_positive_value() / T::epsilon() {
                    continue;
                }
                if ph > tol * mag {
                    return Err(Error::Validation(format!(
                        "transverse flag violated at sample ({a}, {r}): |n.h| = {:e} vs |h| = {:e}",
                        ph.to_f64_lossy(),
                        cnorm(h).to_f64_lossy()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Verify the declared decay class against the outermost radial decade.
    fn check_decay(&self) -> Result<()> {
        let k = match self.decay {
            DecayClass::Unrestricted => return Ok(()),
            DecayClass::RapidlyDecreasing => 8,
            DecayClass::Polynomial(k) => k,
        };
        let nr = self.grid.n_radial();
        if nr < 8 {
            return Ok(());
        }
        let r_hi = self.grid.radial_nodes()[nr - 1];
        let r_ref = self.grid.radial_nodes()[nr / 2];
        let bound = |r: T| (T::one() + r * r).powi(-(k as i32));
        // estimate C on the middle shell, check the outermost one
        let mut c_est = T::zero();
        let mut worst = T::zero();
        for a in 0..self.grid.n_angular() {
            c_est = c_est.max(cnorm(&self.samples[self.grid.sample_index(a, nr / 2)]));
            worst = worst.max(cnorm(&self.samples[self.grid.sample_index(a, nr - 1)]));
        }
        let c = c_est / bound(r_ref);
        if worst > (c * bound(r_hi) + T::min_positive_value()) * T::of(4.0) {
            return Err(Error::Validation(format!(
                "declared decay (k = {k}) violated at the outermost shell"
            )));
        }
        Ok(())
    }

    /// Rapidly decreasing, transverse: member of the dense test-mode domain.
    pub fn in_dense_domain(&self) -> bool {
        self.transverse && self.decay == DecayClass::RapidlyDecreasing
    }

    /// `||h||^2` in the relativistic measure.
    pub fn norm2(&self) -> T {
        self.grid
            .pairing_samples(&self.samples, &self.samples)
            .expect("same grid")
            .re
    }

    pub fn scaled(&self, factor: C<T>) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            samples: self.samples.iter().map(|s| cscale(s, factor)).collect(),
            transverse: self.transverse,
            decay: self.decay,
        }
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm2().sqrt();
        if n == T::zero() {
            return Err(Error::Validation("cannot normalize the zero mode".into()));
        }
        Ok(self.scaled(Complex::new(n.recip(), T::zero())))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.require_same_grid(other)?;
        Ok(Self {
            grid: Arc::clone(&self.grid),
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| crate::vec3::cadd(a, b))
                .collect(),
            transverse: self.transverse && other.transverse,
            decay: DecayClass::Unrestricted,
        })
    }

    /// CSV dump: columns `p_x,p_y,p_z,re_h_x,im_h_x,...`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        let spec = self.grid.spec();
        writeln!(
            w,
            "# grid: r_min={:e} r_max={:e} radial_per_decade={} n_theta={} n_phi={}",
            spec.r_min, spec.r_max, spec.radial_per_decade, spec.n_theta, spec.n_phi
        )?;
        writeln!(w, "p_x,p_y,p_z,re_h_x,im_h_x,re_h_y,im_h_y,re_h_z,im_h_z")?;
        for a in 0..self.grid.n_angular() {
            for r in 0..self.grid.n_radial() {
                let p = self.grid.momentum(a, r);
                let h = &self.samples[self.grid.sample_index(a, r)];
                writeln!(
                    w,
                    "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                    p[0].to_f64_lossy(),
                    p[1].to_f64_lossy(),
                    p[2].to_f64_lossy(),
                    h[0].re.to_f64_lossy(),
                    h[0].im.to_f64_lossy(),
                    h[1].re.to_f64_lossy(),
                    h[1].im.to_f64_lossy(),
                    h[2].re.to_f64_lossy(),
                    h[2].im.to_f64_lossy()
                )?;
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// sharp-time wave kernels
// ---------------------------------------------------------------------------

/// Quadrature controls for the wave-kernel evaluations.
#[derive(Debug, Clone, Copy)]
pub struct KernelSettings {
    pub rel_tol: f64,
}

impl Default for KernelSettings {
    fn default() -> Self {
        Self { rel_tol: 1e-7 }
    }
}

fn wave_grid<T: Real>(f: &TestFunction<T>, x: &R3<T>, t: T, refine: bool) -> Result<SphericalGrid<T>> {
    let r_max = f.momentum_cutoff().to_f64_lossy();
    let d = norm(&sub(x, &f.center)).to_f64_lossy();
    let osc = t.abs().to_f64_lossy() + d + 2.0 * f.width.to_f64_lossy();
    let mut panels = ((r_max * osc / 0.8).ceil() as usize).max(24);
    let mut n_theta = ((0.6 * r_max * d).ceil() as usize).max(16) + 8;
    if refine {
        panels = panels * 3 / 2;
        n_theta += 8;
    }
    let n_phi = 2 * n_theta;
    SphericalGrid::linear(r_max, panels, n_theta, n_phi)
}

fn u_f_on_grid<T: Real>(f: &TestFunction<T>, x: &R3<T>, t: T, grid: &SphericalGrid<T>) -> C3<T> {
    let mut acc = czero3::<T>();
    let pref = Complex::new(T::zero(), T::one())
        .scale((T::of(2.0) * T::PI()).powi(3).sqrt().recip());
    for a in 0..grid.n_angular() {
        let node = &grid.angular_nodes()[a];
        let mut dir_acc = czero3::<T>();
        for (r, &omega) in grid.radial_nodes().iter().enumerate() {
            let p = [node.dir[0] * omega, node.dir[1] * omega, node.dir[2] * omega];
            let w = grid.radial_weights()[r];
            let osc = (cis(-omega * t) - cis(omega * t)) * cis(dot(&p, x));
            let ft = f.ft(&p);
            for i in 0..3 {
                dir_acc[i] += (osc * ft[i]).scale(w);
            }
        }
        for i in 0..3 {
            acc[i] += dir_acc[i].scale(node.weight);
        }
    }
    cscale(&acc, pref)
}

/// Complex-valued evaluation of the propagator solution
/// `u_f(x, t) = (2 pi)^{-3/2} i int (e^{-i omega t} - e^{i omega t})
/// e^{i p x} ft(p) dp/(2 omega)`; the imaginary part is a quadrature
/// residual for real `f`.
pub fn u_f_complex<T: Real>(
    f: &TestFunction<T>,
    x: &R3<T>,
    t: T,
    settings: &KernelSettings,
) -> Result<C3<T>> {
    let coarse = u_f_on_grid(f, x, t, &wave_grid(f, x, t, false)?);
    let fine = u_f_on_grid(f, x, t, &wave_grid(f, x, t, true)?);
    let diff = cnorm(&crate::vec3::csub(&coarse, &fine));
    // scale against the gaussian's natural amplitude, not the (possibly
    // tiny) pointwise value
    let scale_ref = f.width * f.width * norm(&f.polarization) + cnorm(&fine);
    if diff > T::of(settings.rel_tol) * scale_ref {
        return Err(Error::Accuracy {
            context: "u_f",
            estimate: diff.to_f64_lossy(),
            tolerance: (T::of(settings.rel_tol) * scale_ref).to_f64_lossy(),
        });
    }
    Ok(fine)
}

/// Real part of [`u_f_complex`]; `u_f` solves the wave equation with data
/// `u_f(., 0) = 0`, `d_t u_f(., 0) = f`.
pub fn u_f<T: Real>(f: &TestFunction<T>, x: &R3<T>, t: T, settings: &KernelSettings) -> Result<R3<T>> {
    let v = u_f_complex(f, x, t, settings)?;
    Ok([v[0].re, v[1].re, v[2].re])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelSign {
    Retarded,
    Advanced,
}

/// Retarded/advanced fundamental-solution convolution
/// `(G_pm * (f (x) delta_{t0}))(x, t)`; identically zero outside the
/// causal support.
pub fn retarded_kernel<T: Real>(
    f: &TestFunction<T>,
    t0: T,
    x: &R3<T>,
    t: T,
    sign: KernelSign,
    settings: &KernelSettings,
) -> Result<R3<T>> {
    let dt = t - t0;
    let supported = match sign {
        KernelSign::Retarded => dt > T::zero(),
        KernelSign::Advanced => dt < T::zero(),
    };
    if !supported {
        return Ok([T::zero(); 3]);
    }
    let u = u_f(f, x, dt, settings)?;
    Ok(match sign {
        KernelSign::Retarded => u,
        KernelSign::Advanced => scale(&u, -T::one()),
    })
}

// ---------------------------------------------------------------------------
// Weyl functionals
// ---------------------------------------------------------------------------

/// Fock-vacuum expectation of a Weyl operator: `exp(-||h||^2 / 4)`.
pub fn vacuum_weyl<T: Real>(h: &ModeFunction<T>) -> T {
    (-h.norm2() * T::of(0.25)).exp()
}

/// Coherent-state expectation
/// `exp(-||h||^2/4 + i sqrt(2) Re (j, h))` for square-integrable `j`.
pub fn coherent_weyl<T: Real>(h: &ModeFunction<T>, j: &ModeFunction<T>) -> Result<C<T>> {
    let re = crate::quadrature::pairing(j, h)?.re;
    Ok(cis(T::SQRT_2() * re).scale(vacuum_weyl(h)))
}

/// Out-state expectation against the in-Weyl operators. `j_t` need not be
/// square integrable; only the pairing `(j_t, h)` must converge on the
/// grid, which is verified by comparing the innermost radial decades.
pub fn out_state_weyl<T: Real>(h: &ModeFunction<T>, j_t: &ModeFunction<T>) -> Result<C<T>> {
    if !h.in_dense_domain() {
        return Err(Error::Validation(
            "out_state_weyl needs h in the dense domain (transverse, rapidly decreasing)".into(),
        ));
    }
    h.require_same_grid(j_t)?;
    let grid = h.grid();
    // per-decade partial pairings, ascending in |p|
    let spec = grid.spec();
    let decades = (spec.r_max / spec.r_min).log10().round() as usize;
    let mut blocks: Vec<C<T>> = Vec::with_capacity(decades.max(1));
    let mut lo = T::of(spec.r_min);
    for d in 0..decades.max(1) {
        let hi = if d + 1 == decades.max(1) {
            T::of(spec.r_max)
        } else {
            lo * T::of(10.0)
        };
        let range = grid.radial_range(lo, hi)?;
        let mut acc = Complex::new(T::zero(), T::zero());
        for a in 0..grid.n_angular() {
            let w_ang = grid.angular_nodes()[a].weight;
            let mut dir = Complex::new(T::zero(), T::zero());
            for r in range.clone() {
                let idx = grid.sample_index(a, r);
                dir += crate::vec3::cdot(&j_t.samples()[idx], &h.samples()[idx])
                    .scale(grid.radial_weights()[r]);
            }
            acc += dir.scale(w_ang);
        }
        blocks.push(acc);
        lo = hi;
    }
    let total: C<T> = blocks.iter().fold(Complex::new(T::zero(), T::zero()), |a, b| a + *b);
    if blocks.len() >= 2 {
        let c0 = blocks[0].norm();
        let c1 = blocks[1].norm();
        let floor = T::of(1e-9) * total.norm() + T::min_positive_value();
        if c0 > floor && c0 > T::of(0.6) * c1.max(floor) {
            return Err(Error::Accuracy {
                context: "out_state_weyl pairing convergence",
                estimate: c0.to_f64_lossy(),
                tolerance: (T::of(0.6) * c1).to_f64_lossy(),
            });
        }
    }
    Ok(cis(T::SQRT_2() * total.re).scale(vacuum_weyl(h)))
}

/// Positivity form `omega(B* B)` of `B = sum_n c_n W(h_n)` in the coherent
/// state with pairings `l_values[n] = L(h_n)` and Gram matrix
/// `grams[n][m] = (h_n, h_m)`. The result is real up to roundoff and must
/// be nonnegative.
pub fn coherent_positivity_check<T: Real>(
    l_values: &[C<T>],
    coefficients: &[C<T>],
    grams: &[Vec<C<T>>],
) -> Result<T> {
    let n = coefficients.len();
    if l_values.len() != n || grams.len() != n || grams.iter().any(|row| row.len() != n) {
        return Err(Error::Validation("positivity check: inconsistent dimensions".into()));
    }
    for i in 0..n {
        for j in 0..n {
            if (grams[i][j] - grams[j][i].conj()).norm()
                > T::of(1e-10) * (T::one() + grams[i][j].norm())
            {
                return Err(Error::Validation("gram matrix is not Hermitian".into()));
            }
        }
    }
    let mut acc = Complex::new(T::zero(), T::zero());
    for m in 0..n {
        for k in 0..n {
            // omega(W(h_m)* W(h_k)) = e^{(i/2) Im(h_m, h_k)} omega(W(h_k - h_m))
            let g_mk = grams[m][k];
            let norm2_diff = grams[k][k].re + grams[m][m].re - T::of(2.0) * g_mk.re;
            let weyl_phase = cis(g_mk.im * T::of(0.5));
            let functional = cis(T::SQRT_2() * (l_values[k].re - l_values[m].re))
                .scale((-norm2_diff * T::of(0.25)).exp());
            acc += coefficients[m].conj() * coefficients[k] * weyl_phase * functional;
        }
    }
    Ok(acc.re)
}

// ---------------------------------------------------------------------------
// endpoint decay of the soft tail
// ---------------------------------------------------------------------------

/// `int (omega - p.v)^{-1} e^{i (omega - p.v) t} ft_T(-p) dp/(2 omega)`:
/// the endpoint term whose decay in `t` makes the non-compact-velocity
/// amplitude representation well defined. Evaluated by a 1D Legendre
/// moment sweep per angular node.
pub fn endpoint_tail<T: Real>(f: &TestFunction<T>, v: &R3<T>, t: T) -> Result<C3<T>> {
    let speed = norm(v);
    if speed >= T::one() {
        return Err(Error::Superluminal { speed: speed.to_f64_lossy() });
    }
    if norm(&f.polarization) == T::zero() {
        return Ok(czero3());
    }
    let r_max = f.momentum_cutoff();
    let grid = SphericalGrid::<T>::linear(r_max.to_f64_lossy(), 8, 32, 64)?;
    let mut acc = czero3::<T>();
    for node in grid.angular_nodes() {
        let n = node.dir;
        // ft(-omega n) = polarization * g(omega), complex scalar profile
        let profile_re = |omega: T| {
            let p = scale(&n, -omega);
            f.ft(&p)
        };
        // project the scalar profile through one polarization component;
        // all three share it, so reconstruct from the transverse projector
        let eps = f.polarization;
        let p_eps = crate::emission::project_transverse_real(&n, &eps)?;
        let g_re = |omega: T| {
            let ft = profile_re(omega);
            // scalar profile = ft / polarization; use the largest component
            scalar_profile(&ft, &eps).re
        };
        let g_im = |omega: T| scalar_profile(&profile_re(omega), &eps).im;
        let sre = PiecewiseSeries::adaptive(&g_re, T::zero(), r_max);
        let sim = PiecewiseSeries::adaptive(&g_im, T::zero(), r_max);
        let s = (T::one() - dot(&n, v)) * t;
        let radial = sre.fourier(s) + Complex::new(T::zero(), T::one()) * sim.fourier(s);
        let coef = radial.scale(node.weight / (T::of(2.0) * (T::one() - dot(&n, v))));
        for i in 0..3 {
            acc[i] += coef.scale(p_eps[i]);
        }
    }
    Ok(acc)
}

/// Scalar profile `g` with `ft = polarization * g`, read off the largest
/// polarization component.
fn scalar_profile<T: Real>(ft: &C3<T>, eps: &R3<T>) -> C<T> {
    let mut k = 0;
    for i in 1..3 {
        if eps[i].abs() > eps[k].abs() {
            k = i;
        }
    }
    ft[k].scale(eps[k].recip())
}
