//! Spherical momentum-space grid carrying the relativistic measure
//! `dp / (2 omega)`, `omega = |p|`.
//!
//! Radial direction: log-spaced panels between `r_min` and `r_max`, each
//! integrated with a 4-point Gauss-Legendre rule in `log r`. Angular
//! direction: Gauss-Legendre in `cos theta` times a uniform midpoint rule
//! in `phi`. The combined weight realizes
//! `int dp/(2 omega) = int (r/2) dr dOmega` exactly for polynomial radial
//! integrands over whole panels.

use crate::error::{Error, Result};
use crate::scalar::{Real, C};
use crate::vec3::{cdot, R3};
use serde::{Deserialize, Serialize};

/// Gauss-Legendre points per radial panel.
const GL_PER_PANEL: usize = 4;

/// Grid resolution parameters. Field names match the configuration keys;
/// omitted keys fall back to the defaults below.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub r_min: f64,
    pub r_max: f64,
    pub radial_per_decade: usize,
    pub n_theta: usize,
    pub n_phi: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            r_min: 1e-4,
            r_max: 1e4,
            radial_per_decade: 160,
            n_theta: 32,
            n_phi: 64,
        }
    }
}

/// Nodes and weights for Gauss-Legendre quadrature on `[-1, 1]`,
/// computed by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n >= 1);
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let nf = T::of_usize(n);
    for i in 0..(n + 1) / 2 {
        // Chebyshev-like initial guess
        let guess = (T::PI() * (T::of_usize(i) + T::of(0.75)) / (nf + T::of(0.5))).cos();
        let mut x = guess;
        let mut dp = T::zero();
        for _ in 0..100 {
            // Legendre P_n(x) and derivative via upward recurrence
            let mut p0 = T::one();
            let mut p1 = x;
            for k in 2..=n {
                let kf = T::of_usize(k);
                let p2 = ((T::of(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - T::one());
            let step = p1 / dp;
            x = x - step;
            if step.abs() <= T::epsilon() * T::of(4.0) {
                break;
            }
        }
        let w = T::of(2.0) / ((T::one() - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// One angular node: unit direction and quadrature weight (summing to 4 pi).
#[derive(Debug, Clone)]
pub struct AngularNode<T> {
    pub dir: R3<T>,
    pub weight: T,
    pub cos_theta: T,
    pub phi: T,
}

#[derive(Debug, Clone)]
pub struct SphericalGrid<T> {
    spec: GridSpec,
    /// Radial panel edges, ascending, `panel_edges[0] = r_min`.
    panel_edges: Vec<T>,
    /// Radial nodes, ascending, strictly inside the panels.
    radial_nodes: Vec<T>,
    /// Weight carrying the radial part of `dp/(2 omega)`: `(r/2) dr`.
    radial_weights: Vec<T>,
    /// Plain `dr` weight (used by spectra).
    radial_line_weights: Vec<T>,
    angular: Vec<AngularNode<T>>,
}

impl<T: Real> SphericalGrid<T> {
    pub fn new(spec: GridSpec) -> Result<Self> {
        if !(spec.r_min > 0.0) || !(spec.r_max > spec.r_min) {
            return Err(Error::Validation(format!(
                "need 0 < r_min < r_max, got [{}, {}]",
                spec.r_min, spec.r_max
            )));
        }
        if spec.radial_per_decade < GL_PER_PANEL || spec.n_theta < 2 || spec.n_phi < 2 {
            return Err(Error::Validation("grid resolution too small".into()));
        }
        if spec.n_phi % 2 != 0 {
            // keeps the node set symmetric under p -> -p
            return Err(Error::Validation("n_phi must be even".into()));
        }
        let panels_per_decade = spec.radial_per_decade.div_ceil(GL_PER_PANEL);
        let u_min = T::of(spec.r_min.ln());
        let u_max = T::of(spec.r_max.ln());
        let decades = (spec.r_max / spec.r_min).log10();
        let n_panels = ((panels_per_decade as f64) * decades).round().max(1.0) as usize;

        let (gl_x, gl_w) = gauss_legendre::<T>(GL_PER_PANEL);
        let mut panel_edges = Vec::with_capacity(n_panels + 1);
        for j in 0..=n_panels {
            let u = u_min + (u_max - u_min) * T::of_usize(j) / T::of_usize(n_panels);
            panel_edges.push(u.exp());
        }
        // keep the exact endpoints despite exp/ln round-trips
        panel_edges[0] = T::of(spec.r_min);
        panel_edges[n_panels] = T::of(spec.r_max);

        let mut radial_nodes = Vec::with_capacity(n_panels * GL_PER_PANEL);
        let mut radial_weights = Vec::with_capacity(n_panels * GL_PER_PANEL);
        let mut radial_line_weights = Vec::with_capacity(n_panels * GL_PER_PANEL);
        for j in 0..n_panels {
            let ua = panel_edges[j].ln();
            let ub = panel_edges[j + 1].ln();
            let mid = (ua + ub) * T::of(0.5);
            let half = (ub - ua) * T::of(0.5);
            for (x, w) in gl_x.iter().zip(&gl_w) {
                let u = mid + half * *x;
                let r = u.exp();
                radial_nodes.push(r);
                // d(p)/(2w) radial factor: (r/2) dr = (r^2/2) du
                radial_weights.push(*w * half * r * r * T::of(0.5));
                radial_line_weights.push(*w * half * r);
            }
        }

        let (ct, wt) = gauss_legendre::<T>(spec.n_theta);
        let mut angular = Vec::with_capacity(spec.n_theta * spec.n_phi);
        let dphi = T::of(2.0) * T::PI() / T::of_usize(spec.n_phi);
        for (c, w_theta) in ct.iter().zip(&wt) {
            let s = (T::one() - *c * *c).max(T::zero()).sqrt();
            for m in 0..spec.n_phi {
                let phi = dphi * (T::of_usize(m) + T::of(0.5));
                let (sp, cp) = phi.sin_cos();
                angular.push(AngularNode {
                    dir: [s * cp, s * sp, *c],
                    weight: *w_theta * dphi,
                    cos_theta: *c,
                    phi,
                });
            }
        }

        Ok(Self {
            spec,
            panel_edges,
            radial_nodes,
            radial_weights,
            radial_line_weights,
            angular,
        })
    }

    pub fn with_default_spec() -> Result<Self> {
        Self::new(GridSpec::default())
    }

    /// Linear-radial variant on `[0, r_max]` used by sharp-time wave
    /// kernels, where the integrand is regular at `omega = 0` and the
    /// oscillation scale is uniform in `omega`.
    pub fn linear(r_max: f64, n_panels: usize, n_theta: usize, n_phi: usize) -> Result<Self> {
        if !(r_max > 0.0) || n_panels == 0 || n_theta < 2 || n_phi < 2 || n_phi % 2 != 0 {
            return Err(Error::Validation("bad linear grid parameters".into()));
        }
        let (gl_x, gl_w) = gauss_legendre::<T>(GL_PER_PANEL);
        let mut panel_edges = Vec::with_capacity(n_panels + 1);
        for j in 0..=n_panels {
            panel_edges.push(T::of(r_max) * T::of_usize(j) / T::of_usize(n_panels));
        }
        let mut radial_nodes = Vec::new();
        let mut radial_weights = Vec::new();
        let mut radial_line_weights = Vec::new();
        for j in 0..n_panels {
            let mid = (panel_edges[j] + panel_edges[j + 1]) * T::of(0.5);
            let half = (panel_edges[j + 1] - panel_edges[j]) * T::of(0.5);
            for (x, w) in gl_x.iter().zip(&gl_w) {
                let r = mid + half * *x;
                radial_nodes.push(r);
                radial_weights.push(*w * half * r * T::of(0.5));
                radial_line_weights.push(*w * half);
            }
        }
        let (ct, wt) = gauss_legendre::<T>(n_theta);
        let mut angular = Vec::with_capacity(n_theta * n_phi);
        let dphi = T::of(2.0) * T::PI() / T::of_usize(n_phi);
        for (c, w_theta) in ct.iter().zip(&wt) {
            let s = (T::one() - *c * *c).max(T::zero()).sqrt();
            for m in 0..n_phi {
                let phi = dphi * (T::of_usize(m) + T::of(0.5));
                let (sp, cp) = phi.sin_cos();
                angular.push(AngularNode {
                    dir: [s * cp, s * sp, *c],
                    weight: *w_theta * dphi,
                    cos_theta: *c,
                    phi,
                });
            }
        }
        Ok(Self {
            spec: GridSpec {
                r_min: 0.0,
                r_max,
                radial_per_decade: 0,
                n_theta,
                n_phi,
            },
            panel_edges,
            radial_nodes,
            radial_weights,
            radial_line_weights,
            angular,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn radial_nodes(&self) -> &[T] {
        &self.radial_nodes
    }

    pub fn radial_weights(&self) -> &[T] {
        &self.radial_weights
    }

    pub fn radial_line_weights(&self) -> &[T] {
        &self.radial_line_weights
    }

    pub fn panel_edges(&self) -> &[T] {
        &self.panel_edges
    }

    pub fn angular_nodes(&self) -> &[AngularNode<T>] {
        &self.angular
    }

    pub fn n_radial(&self) -> usize {
        self.radial_nodes.len()
    }

    pub fn n_angular(&self) -> usize {
        self.angular.len()
    }

    /// Total number of momentum samples.
    pub fn len(&self) -> usize {
        self.n_radial() * self.n_angular()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sample layout: direction-major. `index = a * n_radial + r`.
    #[inline]
    pub fn sample_index(&self, angular: usize, radial: usize) -> usize {
        angular * self.n_radial() + radial
    }

    /// Momentum vector of a sample.
    #[inline]
    pub fn momentum(&self, angular: usize, radial: usize) -> R3<T> {
        let d = &self.angular[angular].dir;
        let r = self.radial_nodes[radial];
        [d[0] * r, d[1] * r, d[2] * r]
    }

    /// Full measure weight `dp/(2 omega)` of a sample.
    #[inline]
    pub fn weight(&self, angular: usize, radial: usize) -> T {
        self.angular[angular].weight * self.radial_weights[radial]
    }

    /// Nearest panel edge to `r`; shell boundaries must sit on edges for
    /// the measure to be exact.
    pub fn snap_to_edge(&self, r: T) -> T {
        let mut best = self.panel_edges[0];
        let mut gap = (r - best).abs();
        for &e in &self.panel_edges[1..] {
            let g = (r - e).abs();
            if g < gap {
                gap = g;
                best = e;
            }
        }
        best
    }

    /// Indices of radial nodes lying in panels covered by `[a, b]`
    /// (endpoints snapped to the nearest panel edges).
    pub fn radial_range(&self, a: T, b: T) -> Result<std::ops::Range<usize>> {
        let r_min = self.panel_edges[0];
        let r_max = *self.panel_edges.last().unwrap();
        let eps = T::of(1e-9);
        if a < r_min * (T::one() - eps) || b > r_max * (T::one() + eps) || !(a < b) {
            return Err(Error::ShellOutOfRange {
                a: a.to_f64_lossy(),
                b: b.to_f64_lossy(),
                r_min: r_min.to_f64_lossy(),
                r_max: r_max.to_f64_lossy(),
            });
        }
        let lo = self.snap_to_edge(a);
        let hi = self.snap_to_edge(b);
        let start = self.radial_nodes.partition_point(|&r| r < lo);
        let end = self.radial_nodes.partition_point(|&r| r < hi);
        Ok(start..end)
    }

    /// `int_{a<=|p|<=b} dp/(2 omega)` of the constant 1, for measure checks.
    pub fn shell_measure(&self, a: T, b: T) -> Result<T> {
        let range = self.radial_range(a, b)?;
        let four_pi = T::of(4.0) * T::PI();
        let mut acc = T::zero();
        for i in range {
            acc += self.radial_weights[i];
        }
        Ok(acc * four_pi)
    }

    /// Grid pairing `int conj(f) . g dp/(2 omega)` of two sampled fields
    /// (direction-major layout). Accumulation runs in ascending radial
    /// order inside each direction, directions in index order.
    pub fn pairing_samples(&self, f: &[crate::vec3::C3<T>], g: &[crate::vec3::C3<T>]) -> Result<C<T>> {
        if f.len() != self.len() || g.len() != self.len() {
            return Err(Error::GridMismatch);
        }
        let mut acc = C::new(T::zero(), T::zero());
        for (a, node) in self.angular.iter().enumerate() {
            let mut dir_acc = C::new(T::zero(), T::zero());
            let base = a * self.n_radial();
            for r in 0..self.n_radial() {
                let idx = base + r;
                dir_acc += cdot(&f[idx], &g[idx]).scale(self.radial_weights[r]);
            }
            acc += dir_acc.scale(node.weight);
        }
        Ok(acc)
    }

    /// Shell integral `int_{a<=|p|<=b} |f|^2 dp/(2 omega)`; per-radial-index
    /// partial sums are accumulated in ascending radial order.
    pub fn shell_integral_samples(&self, f: &[crate::vec3::C3<T>], a: T, b: T) -> Result<T> {
        if f.len() != self.len() {
            return Err(Error::GridMismatch);
        }
        let range = self.radial_range(a, b)?;
        let mut acc = T::zero();
        for r in range {
            let mut ring = T::zero();
            for (ai, node) in self.angular.iter().enumerate() {
                let idx = self.sample_index(ai, r);
                ring += node.weight * crate::vec3::cnorm2(&f[idx]);
            }
            acc += ring * self.radial_weights[r];
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre::<f64>(8);
        // degree 15 monomial is integrated exactly
        for k in [0usize, 2, 6, 14] {
            let num: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(k as i32)).sum();
            let exact = 2.0 / (k as f64 + 1.0);
            assert!((num - exact).abs() < 1e-14, "k={k}: {num} vs {exact}");
        }
        for k in [1usize, 3, 9] {
            let num: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(k as i32)).sum();
            assert!(num.abs() < 1e-15);
        }
    }

    #[test]
    fn shell_measure_matches_analytic() {
        let grid = SphericalGrid::<f64>::new(GridSpec {
            r_min: 1e-3,
            r_max: 1e2,
            radial_per_decade: 80,
            n_theta: 8,
            n_phi: 16,
        })
        .unwrap();
        for (a, b) in [(1e-3, 1e2), (1e-2, 1e1), (1.0, 1e2), (1e-3, 1.0)] {
            let got = grid.shell_measure(a, b).unwrap();
            let exact = std::f64::consts::PI * (b * b - a * a);
            assert!(
                ((got - exact) / exact).abs() < 1e-8,
                "[{a},{b}]: {got} vs {exact}"
            );
        }
    }

    #[test]
    fn weights_positive_nodes_interior() {
        let grid = SphericalGrid::<f64>::with_default_spec().unwrap();
        let spec = grid.spec().clone();
        for (&r, &w) in grid.radial_nodes().iter().zip(grid.radial_weights()) {
            assert!(w > 0.0);
            assert!(r > spec.r_min && r < spec.r_max);
        }
        for n in grid.angular_nodes() {
            assert!(n.weight > 0.0);
        }
        let total: f64 = grid.angular_nodes().iter().map(|n| n.weight).sum();
        assert!((total - 4.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn shell_out_of_range_rejected() {
        let grid = SphericalGrid::<f64>::new(GridSpec {
            r_min: 1e-2,
            r_max: 1e2,
            radial_per_decade: 40,
            n_theta: 4,
            n_phi: 8,
        })
        .unwrap();
        assert!(grid.shell_measure(1e-3, 1.0).is_err());
        assert!(grid.shell_measure(1.0, 1e3).is_err());
    }
}
