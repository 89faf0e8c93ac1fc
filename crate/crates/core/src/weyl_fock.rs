//! Truncated single-mode Fock-space numerics.
//!
//! Every operator identity used by the functional layer factorizes over
//! modes, so the occupied coherent mode carries all nontrivial content and
//! a single-mode truncation (default cutoff 80) verifies the algebra:
//! creation/annihilation, Weyl operators, the displacement scattering
//! operator and coherent states.

use crate::error::{Error, Result};
use crate::scalar::{Real, C};
use num_complex::Complex;

pub const DEFAULT_CUTOFF: usize = 80;
pub const DEFAULT_TAIL_TOL: f64 = 1e-9;

// ---------------------------------------------------------------------------
// dense complex matrices (small, cutoff-sized)
// ---------------------------------------------------------------------------

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T> {
    n: usize,
    data: Vec<C<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex::new(T::zero(), T::zero()); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for (o, b) in out.data.iter_mut().zip(&other.data) {
            *o += *b;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for (o, b) in out.data.iter_mut().zip(&other.data) {
            *o -= *b;
        }
        out
    }

    pub fn scaled(&self, s: C<T>) -> Self {
        let mut out = self.clone();
        for o in out.data.iter_mut() {
            *o *= s;
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = self[(j, i)].conj();
            }
        }
        out
    }

    pub fn matvec(&self, v: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(self.n, v.len());
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.n];
        for i in 0..self.n {
            let mut acc = Complex::new(T::zero(), T::zero());
            for j in 0..self.n {
                acc += self[(i, j)] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn frobenius_norm(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, c| acc + c.norm_sqr())
            .sqrt()
    }

    /// Frobenius norm restricted to the leading `k x k` block.
    pub fn frobenius_norm_block(&self, k: usize) -> T {
        let mut acc = T::zero();
        for i in 0..k.min(self.n) {
            for j in 0..k.min(self.n) {
                acc += self[(i, j)].norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// Matrix exponential by scaling and squaring with a Taylor core.
    pub fn expm(&self) -> Self {
        let norm = self.frobenius_norm();
        let mut squarings = 0u32;
        let mut scaled = self.clone();
        if norm > T::of(0.5) {
            let s = (norm.to_f64_lossy() / 0.5).log2().ceil().max(0.0) as u32;
            squarings = s;
            let factor = Complex::new(T::of(0.5f64.powi(s as i32)), T::zero());
            scaled = self.scaled(factor);
        }
        // Taylor series to machine precision for ||A|| <= 1/2
        let mut result = Self::identity(self.n);
        let mut term = Self::identity(self.n);
        for k in 1..=24 {
            term = term.mul(&scaled).scaled(Complex::new(T::of_usize(k).recip(), T::zero()));
            result = result.add(&term);
            if term.frobenius_norm() <= T::epsilon() * result.frobenius_norm() {
                break;
            }
        }
        for _ in 0..squarings {
            result = result.mul(&result);
        }
        result
    }
}

impl<T> std::ops::Index<(usize, usize)> for CMatrix<T> {
    type Output = C<T>;
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.data[i * self.n + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for CMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.data[i * self.n + j]
    }
}

// ---------------------------------------------------------------------------
// states and operators
// ---------------------------------------------------------------------------

/// Occupation-number amplitudes of one transverse mode, truncated at
/// `cutoff` (vector length `cutoff + 1`).
#[derive(Debug, Clone)]
pub struct TruncatedFockState<T> {
    pub cutoff: usize,
    pub amplitudes: Vec<C<T>>,
}

impl<T: Real> TruncatedFockState<T> {
    pub fn vacuum(cutoff: usize) -> Self {
        let mut amplitudes = vec![Complex::new(T::zero(), T::zero()); cutoff + 1];
        amplitudes[0] = Complex::new(T::one(), T::zero());
        Self { cutoff, amplitudes }
    }

    pub fn norm(&self) -> T {
        self.amplitudes
            .iter()
            .fold(T::zero(), |a, c| a + c.norm_sqr())
            .sqrt()
    }

    /// Squared amplitude on the last retained level.
    pub fn tail_mass(&self) -> T {
        self.amplitudes[self.cutoff].norm_sqr()
    }

    pub fn inner(&self, other: &Self) -> C<T> {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| {
                acc + a.conj() * b
            })
    }

    pub fn distance(&self, other: &Self) -> T {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .fold(T::zero(), |acc, (a, b)| acc + (*a - *b).norm_sqr())
            .sqrt()
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "n,re,im")?;
        for (n, c) in self.amplitudes.iter().enumerate() {
            writeln!(w, "{n},{:.17e},{:.17e}", c.re.to_f64_lossy(), c.im.to_f64_lossy())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorTag {
    Creation,
    Annihilation,
    Weyl,
    Displacement,
    Number,
    Custom,
}

/// Operator on the truncated space, `(cutoff + 1)^2` complex entries.
#[derive(Debug, Clone)]
pub struct TruncatedOperator<T> {
    pub matrix: CMatrix<T>,
    pub tag: OperatorTag,
}

impl<T: Real> TruncatedOperator<T> {
    pub fn apply(&self, state: &TruncatedFockState<T>) -> TruncatedFockState<T> {
        TruncatedFockState {
            cutoff: state.cutoff,
            amplitudes: self.matrix.matvec(&state.amplitudes),
        }
    }

    /// Debug CSV dump, one row per matrix entry.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "row,col,re,im")?;
        let n = self.matrix.dim();
        for i in 0..n {
            for j in 0..n {
                let v = self.matrix[(i, j)];
                writeln!(
                    w,
                    "{i},{j},{:.17e},{:.17e}",
                    v.re.to_f64_lossy(),
                    v.im.to_f64_lossy()
                )?;
            }
        }
        Ok(())
    }
}

/// Annihilation operator `a |n> = sqrt(n) |n-1>`.
pub fn annihilation<T: Real>(cutoff: usize) -> TruncatedOperator<T> {
    let n = cutoff + 1;
    let mut m = CMatrix::zeros(n);
    for k in 1..n {
        m[(k - 1, k)] = Complex::new(T::of_usize(k).sqrt(), T::zero());
    }
    TruncatedOperator {
        matrix: m,
        tag: OperatorTag::Annihilation,
    }
}

/// Creation operator `a* |n> = sqrt(n+1) |n+1>`.
pub fn creation<T: Real>(cutoff: usize) -> TruncatedOperator<T> {
    let m = annihilation::<T>(cutoff).matrix.adjoint();
    TruncatedOperator {
        matrix: m,
        tag: OperatorTag::Creation,
    }
}

/// Number operator `a* a`.
pub fn number_operator<T: Real>(cutoff: usize) -> TruncatedOperator<T> {
    let n = cutoff + 1;
    let mut m = CMatrix::zeros(n);
    for k in 0..n {
        m[(k, k)] = Complex::new(T::of_usize(k), T::zero());
    }
    TruncatedOperator {
        matrix: m,
        tag: OperatorTag::Number,
    }
}

/// Coherent state `c_n = e^{-|alpha|^2/2} alpha^n / sqrt(n!)`.
///
/// Needs `cutoff >= 10 |alpha|^2 + 20` so the discarded tail stays below
/// the tolerance.
pub fn coherent_state<T: Real>(alpha: C<T>, cutoff: usize) -> Result<TruncatedFockState<T>> {
    let a2 = alpha.norm_sqr();
    let needed = (T::of(10.0) * a2 + T::of(20.0)).to_f64_lossy();
    if (cutoff as f64) < needed {
        return Err(Error::Validation(format!(
            "cutoff {cutoff} too small for |alpha|^2 = {}: need >= {needed:.0}",
            a2.to_f64_lossy()
        )));
    }
    let mut amplitudes = Vec::with_capacity(cutoff + 1);
    let mut c = Complex::new((-a2 * T::of(0.5)).exp(), T::zero());
    amplitudes.push(c);
    for n in 1..=cutoff {
        c = c * alpha.scale(T::of_usize(n).sqrt().recip());
        amplitudes.push(c);
    }
    let state = TruncatedFockState { cutoff, amplitudes };
    if state.tail_mass() > T::of(DEFAULT_TAIL_TOL) {
        return Err(Error::CutoffTooSmall {
            tail: state.tail_mass().to_f64_lossy(),
            tolerance: DEFAULT_TAIL_TOL,
        });
    }
    Ok(state)
}

/// Weyl operator `W(h) = exp(i (h a* + conj(h) a) / sqrt(2))` for a single
/// mode with amplitude `h`.
pub fn weyl_matrix<T: Real>(h: C<T>, cutoff: usize) -> TruncatedOperator<T> {
    let a = annihilation::<T>(cutoff).matrix;
    let adag = creation::<T>(cutoff).matrix;
    let i_over_sqrt2 = Complex::new(T::zero(), T::SQRT_2().recip());
    let gen = adag.scaled(i_over_sqrt2 * h).add(&a.scaled(i_over_sqrt2 * h.conj()));
    TruncatedOperator {
        matrix: gen.expm(),
        tag: OperatorTag::Weyl,
    }
}

/// Scattering operator `S = exp(-alpha a* + conj(alpha) a)`; `S^{-1}`
/// displaces the vacuum onto the coherent state `Omega_alpha` and
/// conjugates `a` to `a - alpha`.
pub fn s_operator<T: Real>(alpha: C<T>, cutoff: usize) -> TruncatedOperator<T> {
    let a = annihilation::<T>(cutoff).matrix;
    let adag = creation::<T>(cutoff).matrix;
    let gen = adag.scaled(-alpha).add(&a.scaled(alpha.conj()));
    TruncatedOperator {
        matrix: gen.expm(),
        tag: OperatorTag::Displacement,
    }
}

/// Scattering amplitude
/// `< (a*_out)^m Omega_out, (a*_in)^n Omega_in >` with all modes equal to
/// the occupied one, evaluated both through the out-operators
/// (`a*_out = a* - conj(alpha)`) and through the `S`-operator rewriting;
/// the two must agree, and the first form is returned.
pub fn scattering_amplitude<T: Real>(
    m_out: usize,
    n_in: usize,
    alpha: C<T>,
    cutoff: usize,
) -> Result<C<T>> {
    if m_out > 6 || n_in > 6 {
        return Err(Error::Validation("scattering amplitude orders capped at 6".into()));
    }
    let adag = creation::<T>(cutoff).matrix;
    let s = s_operator::<T>(alpha, cutoff).matrix;
    let s_inv = s.adjoint();
    let vac = TruncatedFockState::<T>::vacuum(cutoff);

    // out form: (a* - conj(alpha))^m S^{-1} Omega0 against (a*)^n Omega0
    let omega_out = TruncatedFockState {
        cutoff,
        amplitudes: s_inv.matvec(&vac.amplitudes),
    };
    let mut shift = adag.clone();
    for i in 0..shift.dim() {
        shift[(i, i)] -= alpha.conj();
    }
    let mut left = omega_out.amplitudes.clone();
    for _ in 0..m_out {
        left = shift.matvec(&left);
    }
    let mut right = vac.amplitudes.clone();
    for _ in 0..n_in {
        right = adag.matvec(&right);
    }
    let out_form = left
        .iter()
        .zip(&right)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a.conj() * b);

    // S form: (a*)^m Omega0 against S (a*)^n Omega0
    let mut left_s = vac.amplitudes.clone();
    for _ in 0..m_out {
        left_s = adag.matvec(&left_s);
    }
    let right_s = s.matvec(&right);
    let s_form = left_s
        .iter()
        .zip(&right_s)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a.conj() * b);

    let gap = (out_form - s_form).norm();
    if gap > T::of(1e-8) * (T::one() + out_form.norm()) {
        return Err(Error::Accuracy {
            context: "scattering amplitude rewritings disagree",
            estimate: gap.to_f64_lossy(),
            tolerance: 1e-8,
        });
    }
    Ok(out_form)
}


/// Index below which truncation artifacts of displacement-type operators
/// with amplitude `amplitude` are negligible: the displaced spread around
/// level `n` is a few times `amplitude * sqrt(n)`, so the corrupt fringe
/// hugs the cutoff.
pub fn bulk_block(cutoff: usize, amplitude: f64) -> usize {
    let margin = (2.5 * amplitude.abs() * (cutoff as f64).sqrt()).ceil() as usize + 15;
    cutoff.saturating_sub(margin).max(1)
}

/// Reduce a Fock-classified amplitude to the occupation of its single
/// coherent mode: `alpha = ||J_T||`. Refused for non-Fock amplitudes,
/// where the norm is a grid artifact.
pub fn mode_reduce<T: Real>(
    amp: &crate::emission::EmissionAmplitude<T>,
    windows: crate::diagnostics::FitWindows,
    thresholds: crate::diagnostics::ClassifyThresholds,
) -> Result<T> {
    let report = crate::diagnostics::classify(amp, windows, thresholds)?;
    match report.classification {
        crate::diagnostics::Classification::Fock => Ok(amp.transverse_norm2().sqrt()),
        other => Err(Error::NonFock {
            classification: other.to_string(),
        }),
    }
}
