//! Fock / non-Fock classification by quantitative divergence analysis.
//!
//! The out-state is a Fock state exactly when the transverse amplitude is
//! square integrable in the relativistic measure. The diagnostics fit the
//! cumulative shell integrals
//! `I_uv(L) = int_{1<=|p|<=L} |J_T|^2 dp/(2 omega)` against `a + b ln L`
//! (and `I_ir(e) = int_{e<=|p|<=1}` against `a + b ln(1/e)`): a positive
//! fitted log coefficient with small residual is a divergence, and the
//! coefficient itself is checkable against the closed-form angular
//! oracles.

use crate::emission::EmissionAmplitude;
use crate::error::{Error, Result};
use crate::scalar::Real;
use serde::{Deserialize, Serialize};

/// Number of cumulative shells per fit window.
pub const FIT_SHELLS: usize = 13;
pub const MIN_FIT_SHELLS: usize = 8;

/// Classification thresholds (configuration-overridable).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ClassifyThresholds {
    /// A log coefficient counts as divergent when
    /// `b > theta_rel * I(window midpoint)`.
    pub theta_rel: f64,
    /// ... and the fit residual stays below `residual_factor * b`.
    pub residual_factor: f64,
}

impl Default for ClassifyThresholds {
    fn default() -> Self {
        Self {
            theta_rel: 0.05,
            residual_factor: 0.2,
        }
    }
}

/// Fit windows for the two ends of the spectrum.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FitWindows {
    pub uv: [f64; 2],
    pub ir: [f64; 2],
}

impl Default for FitWindows {
    fn default() -> Self {
        Self {
            uv: [10.0, 1e3],
            ir: [1e-4, 1e-1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Fock,
    NonFockUV,
    NonFockIR,
    NonFockBoth,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Classification::Fock => "Fock",
            Classification::NonFockUV => "NonFockUV",
            Classification::NonFockIR => "NonFockIR",
            Classification::NonFockBoth => "NonFockBoth",
        };
        f.write_str(s)
    }
}

/// One fitted log-divergence: shells, coefficient and residual.
#[derive(Debug, Clone)]
pub struct LogFit<T> {
    /// Cumulative shells `(cutoff, integral value)`.
    pub shells: Vec<(T, T)>,
    /// Intercept of the linear fit in the log variable.
    pub intercept: T,
    /// Fitted log coefficient `b`.
    pub b: T,
    /// Root-mean-square fit residual.
    pub residual: T,
    /// Integral value at the window midpoint (threshold reference).
    pub i_mid: T,
}

#[derive(Debug, Clone)]
pub struct DivergenceReport<T> {
    pub uv: LogFit<T>,
    pub ir: LogFit<T>,
    /// Log-log slope of `sup_dir |J_T|` against `omega` over the UV window.
    pub uv_amplitude_exponent: T,
    pub classification: Classification,
    /// `||J_T||^2`, reported only for Fock states.
    pub photon_number: Option<T>,
    pub thresholds: ClassifyThresholds,
    pub windows: FitWindows,
}

impl<T: Real> DivergenceReport<T> {
    /// Re-derive the classification from the stored fields.
    pub fn rederive_classification(&self) -> Classification {
        let uv = divergent(&self.uv, &self.thresholds);
        let ir = divergent(&self.ir, &self.thresholds);
        match (uv.unwrap_or(false), ir.unwrap_or(false)) {
            (true, true) => Classification::NonFockBoth,
            (true, false) => Classification::NonFockUV,
            (false, true) => Classification::NonFockIR,
            (false, false) => Classification::Fock,
        }
    }
}

fn linear_fit<T: Real>(xs: &[T], ys: &[T]) -> (T, T, T) {
    let n = T::of_usize(xs.len());
    let mut sx = T::zero();
    let mut sy = T::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        sx += x;
        sy += y;
    }
    let mx = sx / n;
    let my = sy / n;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = if sxx > T::zero() { sxy / sxx } else { T::zero() };
    let intercept = my - slope * mx;
    let mut rss = T::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        let r = y - (intercept + slope * x);
        rss += r * r;
    }
    let residual = (rss / n).sqrt();
    (intercept, slope, residual)
}

/// Divergence decision for one fit: `Ok(true)` divergent, `Ok(false)`
/// convergent, `Err` ambiguous.
fn divergent<T: Real>(fit: &LogFit<T>, th: &ClassifyThresholds) -> std::result::Result<bool, ()> {
    let threshold = T::of(th.theta_rel) * fit.i_mid;
    if fit.b <= threshold {
        return Ok(false);
    }
    if fit.residual < T::of(th.residual_factor) * fit.b {
        return Ok(true);
    }
    Err(())
}

/// Log-spaced cutoffs in `[lo, hi]`, snapped to grid panel edges.
fn window_cutoffs<T: Real>(
    amp: &EmissionAmplitude<T>,
    lo: f64,
    hi: f64,
    count: usize,
) -> Result<Vec<T>> {
    let grid = amp.grid();
    let spec = grid.spec();
    if lo < spec.r_min * (1.0 - 1e-9) || hi > spec.r_max * (1.0 + 1e-9) || !(lo < hi) {
        return Err(Error::ShellOutOfRange {
            a: lo,
            b: hi,
            r_min: spec.r_min,
            r_max: spec.r_max,
        });
    }
    let mut cutoffs = Vec::with_capacity(count);
    for j in 0..count {
        let f = j as f64 / (count - 1) as f64;
        let raw = T::of(lo * (hi / lo).powf(f));
        let snapped = grid.snap_to_edge(raw);
        if cutoffs.last() != Some(&snapped) {
            cutoffs.push(snapped);
        }
    }
    if cutoffs.len() < MIN_FIT_SHELLS {
        return Err(Error::InsufficientShells {
            got: cutoffs.len(),
            need: MIN_FIT_SHELLS,
        });
    }
    Ok(cutoffs)
}

/// Fit `I_uv(L) = int_{1<=|p|<=L}|J_T|^2 dp/(2 omega)` against `a + b ln L`
/// over the window, together with the amplitude-exponent fit.
pub fn uv_fit<T: Real>(
    amp: &EmissionAmplitude<T>,
    window: [f64; 2],
) -> Result<(LogFit<T>, T)> {
    if window[0] <= 1.0 {
        return Err(Error::Validation(
            "UV fit window must sit strictly above |p| = 1".into(),
        ));
    }
    let grid = amp.grid();
    let base = grid.snap_to_edge(T::one());
    let cutoffs = window_cutoffs(amp, window[0], window[1], FIT_SHELLS)?;
    let mut shells = Vec::with_capacity(cutoffs.len());
    for &c in &cutoffs {
        let v = grid.shell_integral_samples(amp.j_t(), base, c)?;
        shells.push((c, v));
    }
    let xs: Vec<T> = shells.iter().map(|(c, _)| c.ln()).collect();
    let ys: Vec<T> = shells.iter().map(|(_, v)| *v).collect();
    let (intercept, b, residual) = linear_fit(&xs, &ys);
    let mid = grid.snap_to_edge(T::of((window[0] * window[1]).sqrt()));
    let i_mid = grid.shell_integral_samples(amp.j_t(), base, mid)?;
    let exponent = amplitude_exponent(amp, window)?;
    Ok((
        LogFit {
            shells,
            intercept,
            b,
            residual,
            i_mid,
        },
        exponent,
    ))
}

/// Log-log slope of `sup_dir |J_T(omega n)|` over the window.
fn amplitude_exponent<T: Real>(amp: &EmissionAmplitude<T>, window: [f64; 2]) -> Result<T> {
    let grid = amp.grid();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (r, &omega) in grid.radial_nodes().iter().enumerate() {
        let w = omega.to_f64_lossy();
        if w < window[0] || w > window[1] {
            continue;
        }
        let mut sup = T::zero();
        for a in 0..grid.n_angular() {
            sup = sup.max(crate::vec3::cnorm(&amp.j_t()[grid.sample_index(a, r)]));
        }
        if sup > T::zero() {
            xs.push(omega.ln());
            ys.push(sup.ln());
        }
    }
    if xs.len() < MIN_FIT_SHELLS {
        // an identically zero amplitude has no exponent; report 0
        return Ok(T::zero());
    }
    let (_, slope, _) = linear_fit(&xs, &ys);
    Ok(slope)
}

/// Fit `I_ir(e) = int_{e<=|p|<=1}|J_T|^2 dp/(2 omega)` against
/// `a + b ln(1/e)`.
pub fn ir_fit<T: Real>(amp: &EmissionAmplitude<T>, window: [f64; 2]) -> Result<LogFit<T>> {
    if window[1] >= 1.0 {
        return Err(Error::Validation(
            "IR fit window must sit strictly below |p| = 1".into(),
        ));
    }
    let grid = amp.grid();
    let top = grid.snap_to_edge(T::one());
    let cutoffs = window_cutoffs(amp, window[0], window[1], FIT_SHELLS)?;
    let mut shells = Vec::with_capacity(cutoffs.len());
    for &c in &cutoffs {
        let v = grid.shell_integral_samples(amp.j_t(), c, top)?;
        shells.push((c, v));
    }
    let xs: Vec<T> = shells.iter().map(|(c, _)| -(c.ln())).collect();
    let ys: Vec<T> = shells.iter().map(|(_, v)| *v).collect();
    let (intercept, b, residual) = linear_fit(&xs, &ys);
    let mid = grid.snap_to_edge(T::of((window[0] * window[1]).sqrt()));
    let i_mid = grid.shell_integral_samples(amp.j_t(), mid, top)?;
    Ok(LogFit {
        shells,
        intercept,
        b,
        residual,
        i_mid,
    })
}

/// Run both fits and classify. Ambiguous fits (log coefficient above
/// threshold but residual too large to trust) refuse with an
/// inconclusive error.
pub fn classify<T: Real>(
    amp: &EmissionAmplitude<T>,
    windows: FitWindows,
    thresholds: ClassifyThresholds,
) -> Result<DivergenceReport<T>> {
    let (uv, exponent) = uv_fit(amp, windows.uv)?;
    let ir = ir_fit(amp, windows.ir)?;
    let uv_div = divergent(&uv, &thresholds);
    let ir_div = divergent(&ir, &thresholds);
    let describe = |fit: &LogFit<T>| {
        format!(
            "b = {:e}, residual = {:e}, I(mid) = {:e}",
            fit.b.to_f64_lossy(),
            fit.residual.to_f64_lossy(),
            fit.i_mid.to_f64_lossy()
        )
    };
    let classification = match (uv_div, ir_div) {
        (Ok(true), Ok(true)) => Classification::NonFockBoth,
        (Ok(true), Ok(false)) => Classification::NonFockUV,
        (Ok(false), Ok(true)) => Classification::NonFockIR,
        (Ok(false), Ok(false)) => Classification::Fock,
        _ => {
            let mut reason = String::from("fit residuals too large to decide:");
            if uv_div.is_err() {
                reason.push_str(&format!(" UV [{}]", describe(&uv)));
            }
            if ir_div.is_err() {
                reason.push_str(&format!(" IR [{}]", describe(&ir)));
            }
            return Err(Error::Inconclusive { reason });
        }
    };
    let photon_number =
        (classification == Classification::Fock).then(|| amp.transverse_norm2());
    Ok(DivergenceReport {
        uv,
        ir,
        uv_amplitude_exponent: exponent,
        classification,
        photon_number,
        thresholds,
        windows,
    })
}

// ---------------------------------------------------------------------------
// oracle coefficients from the closed forms
// ---------------------------------------------------------------------------

/// Independent prediction of the UV log coefficient of a velocity kick:
/// `(1/2) int |omega * pref * Delta_T(n)|^2 dOmega` by angular quadrature
/// of the closed form.
pub fn oracle_b_uv_kick<T: Real>(
    v_minus: &crate::vec3::R3<T>,
    v_plus: &crate::vec3::R3<T>,
    n_theta: usize,
    n_phi: usize,
) -> Result<T> {
    angular_oracle(n_theta, n_phi, |n| {
        let cf = crate::emission::closed_form_delta(v_minus, v_plus, n)?;
        // at |p| = 1 the closed form already carries the 1/omega factor
        Ok(crate::vec3::add(&cf.delta1_t, &cf.delta2))
    })
}

/// Independent prediction of the IR log coefficient of a boost:
/// `(1/2) int |omega * pref * F_T(n)|^2 dOmega`.
pub fn oracle_b_ir_boost<T: Real>(
    v_in: &crate::vec3::R3<T>,
    v_out: &crate::vec3::R3<T>,
    n_theta: usize,
    n_phi: usize,
) -> Result<T> {
    angular_oracle(n_theta, n_phi, |n| {
        let cf = crate::emission::closed_form_ir(v_in, v_out, n)?;
        Ok(crate::vec3::add(&cf.f1_t, &cf.f2))
    })
}

fn angular_oracle<T: Real>(
    n_theta: usize,
    n_phi: usize,
    transverse_at_unit_momentum: impl Fn(&crate::vec3::R3<T>) -> Result<crate::vec3::R3<T>>,
) -> Result<T> {
    let (ct, wt) = crate::quadrature::gauss_legendre::<T>(n_theta);
    let dphi = T::of(2.0) * T::PI() / T::of_usize(n_phi);
    let pref2 = crate::emission::prefactor::<T>().norm_sqr();
    let mut acc = T::zero();
    for (c, w) in ct.iter().zip(&wt) {
        let s = (T::one() - *c * *c).max(T::zero()).sqrt();
        for m in 0..n_phi {
            let phi = dphi * (T::of_usize(m) + T::of(0.5));
            let (sp, cp) = phi.sin_cos();
            let n = [s * cp, s * sp, *c];
            let v = transverse_at_unit_momentum(&n)?;
            acc += *w * dphi * crate::vec3::norm2(&v) * pref2;
        }
    }
    Ok(acc * T::of(0.5))
}

// ---------------------------------------------------------------------------
// spectra
// ---------------------------------------------------------------------------

/// Photon spectrum `dN/d omega` per radial shell plus an angular slice.
#[derive(Debug, Clone)]
pub struct Spectrum<T> {
    pub omegas: Vec<T>,
    pub dn_domega: Vec<T>,
    /// Total `int dN/domega domega = ||J_T||^2` on the grid.
    pub total: T,
    /// Angular distribution `|J_T(omega n)|^2` at the reference frequency.
    pub angular_reference_omega: T,
    /// One value per angular node, in grid order.
    pub angular_distribution: Vec<T>,
}

/// Spectral decomposition of `||J_T||^2`:
/// `dN/domega (omega_i) = (omega_i / 2) int |J_T(omega_i n)|^2 dOmega`.
/// The angular slice is taken at the radial node nearest `omega_ref`.
pub fn spectrum<T: Real>(amp: &EmissionAmplitude<T>, omega_ref: f64) -> Spectrum<T> {
    let grid = amp.grid();
    let nr = grid.n_radial();
    let mut omegas = Vec::with_capacity(nr);
    let mut dn = Vec::with_capacity(nr);
    let mut total = T::zero();
    let mut ref_idx = 0usize;
    let mut ref_gap = f64::INFINITY;
    for (r, &omega) in grid.radial_nodes().iter().enumerate() {
        let mut ring = T::zero();
        for a in 0..grid.n_angular() {
            ring += grid.angular_nodes()[a].weight
                * crate::vec3::cnorm2(&amp.j_t()[grid.sample_index(a, r)]);
        }
        let value = ring * omega * T::of(0.5);
        omegas.push(omega);
        dn.push(value);
        // integrating dN/domega with the plain dr weight reproduces the norm
        total += value * grid.radial_line_weights()[r];
        let gap = (omega.to_f64_lossy() - omega_ref).abs();
        if gap < ref_gap {
            ref_gap = gap;
            ref_idx = r;
        }
    }
    let angular_distribution = (0..grid.n_angular())
        .map(|a| crate::vec3::cnorm2(&amp.j_t()[grid.sample_index(a, ref_idx)]))
        .collect();
    Spectrum {
        omegas,
        dn_domega: dn,
        total,
        angular_reference_omega: grid.radial_nodes()[ref_idx],
        angular_distribution,
    }
}

impl<T: Real> Spectrum<T> {
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "omega,dn_domega")?;
        for (o, v) in self.omegas.iter().zip(&self.dn_domega) {
            writeln!(w, "{:.17e},{:.17e}", o.to_f64_lossy(), v.to_f64_lossy())?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// serializable report document
// ---------------------------------------------------------------------------

/// Flattened `f64` form of a [`DivergenceReport`] for report files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DivergenceReportDoc {
    pub classification: String,
    pub b_uv: f64,
    pub uv_residual: f64,
    pub uv_i_mid: f64,
    pub b_ir: f64,
    pub ir_residual: f64,
    pub ir_i_mid: f64,
    pub uv_amplitude_exponent: f64,
    pub photon_number: Option<f64>,
    pub theta_rel: f64,
    pub residual_factor: f64,
    pub uv_window: [f64; 2],
    pub ir_window: [f64; 2],
    pub uv_shells: Vec<[f64; 2]>,
    pub ir_shells: Vec<[f64; 2]>,
}

impl<T: Real> DivergenceReport<T> {
    pub fn to_doc(&self) -> DivergenceReportDoc {
        let shells = |fit: &LogFit<T>| {
            fit.shells
                .iter()
                .map(|(c, v)| [c.to_f64_lossy(), v.to_f64_lossy()])
                .collect()
        };
        DivergenceReportDoc {
            classification: self.classification.to_string(),
            b_uv: self.uv.b.to_f64_lossy(),
            uv_residual: self.uv.residual.to_f64_lossy(),
            uv_i_mid: self.uv.i_mid.to_f64_lossy(),
            b_ir: self.ir.b.to_f64_lossy(),
            ir_residual: self.ir.residual.to_f64_lossy(),
            ir_i_mid: self.ir.i_mid.to_f64_lossy(),
            uv_amplitude_exponent: self.uv_amplitude_exponent.to_f64_lossy(),
            photon_number: self.photon_number.map(|p| p.to_f64_lossy()),
            theta_rel: self.thresholds.theta_rel,
            residual_factor: self.thresholds.residual_factor,
            uv_window: self.windows.uv,
            ir_window: self.windows.ir,
            uv_shells: shells(&self.uv),
            ir_shells: shells(&self.ir),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_fit_recovers_line() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 + 0.5 * x).collect();
        let (a, b, r) = linear_fit(&xs, &ys);
        assert!((a - 3.0).abs() < 1e-12 && (b - 0.5).abs() < 1e-12 && r < 1e-12);
    }

    #[test]
    fn oracle_scales_quadratically_in_dv() {
        let b1: f64 = oracle_b_uv_kick(&[0.5, 0.0, 0.0], &[0.0; 3], 64, 128).unwrap();
        let b2 = oracle_b_uv_kick(&[0.25, 0.0, 0.0], &[0.0; 3], 64, 128).unwrap();
        // |dv|^2 scaling holds only approximately (denominators shift too)
        assert!((b1 / b2 - 4.0).abs() < 0.6, "ratio {}", b1 / b2);
        let c1: f64 = oracle_b_ir_boost(&[0.0; 3], &[0.5, 0.0, 0.0], 64, 128).unwrap();
        let c2 = oracle_b_ir_boost(&[0.0; 3], &[0.25, 0.0, 0.0], 64, 128).unwrap();
        assert!((c1 / c2 - 4.0).abs() < 0.6, "ratio {}", c1 / c2);
        assert!(b1 > 0.0 && c1 > 0.0);
    }

    #[test]
    fn kick_and_boost_oracles_agree_for_stop_case() {
        // a kick v -> 0 and a boost 0 -> v probe the same closed-form shape
        let b_kick: f64 = oracle_b_uv_kick(&[0.5, 0.0, 0.0], &[0.0; 3], 64, 128).unwrap();
        let b_boost = oracle_b_ir_boost(&[0.0; 3], &[0.5, 0.0, 0.0], 64, 128).unwrap();
        assert!((b_kick - b_boost).abs() <= 1e-12 * b_kick);
    }
}
