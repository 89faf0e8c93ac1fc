//! Quantum radiation of a photon field driven by a classical point charge
//! on a prescribed trajectory.
//!
//! The crate computes the coherent emission profile `J(p)` of a
//! piecewise-polynomial trajectory by several cross-checking oscillatory
//! integral representations, projects it onto transverse polarizations,
//! runs UV/IR shell-divergence diagnostics to decide whether the
//! out-state of the field is a Fock state, and verifies the surrounding
//! operator algebra in a truncated single-mode Fock space.
//!
//! All numerics are generic over the scalar type through [`scalar::Real`]
//! (`f32` or `f64`); the `*64` aliases at the crate root pick `f64`,
//! which the quoted tolerances assume.
//!
//! ```
//! use bremweyl::diagnostics::{classify, Classification, ClassifyThresholds, FitWindows};
//! use bremweyl::emission::{compute_amplitude, ComputeOptions};
//! use bremweyl::quadrature::{GridSpec, SphericalGrid};
//! use bremweyl::trajectory::build_kick;
//! use std::sync::Arc;
//!
//! // velocity jump of half the speed of light at t = 0
//! let traj = build_kick(&[0.5, 0.0, 0.0], &[0.0; 3], 2.0)?;
//! let grid = Arc::new(SphericalGrid::<f64>::new(GridSpec {
//!     radial_per_decade: 48,
//!     n_theta: 12,
//!     n_phi: 24,
//!     ..Default::default()
//! })?);
//! let amplitude = compute_amplitude(&traj, &grid, &ComputeOptions::default())?;
//! let report = classify(
//!     &amplitude,
//!     FitWindows::default(),
//!     ClassifyThresholds::default(),
//! )?;
//! // the hard ultraviolet tail pushes the out-state out of Fock space
//! assert_eq!(report.classification, Classification::NonFockUV);
//! assert!(report.photon_number.is_none());
//! # Ok::<(), bremweyl::Error>(())
//! ```

pub mod diagnostics;
pub mod emission;
pub mod error;
pub mod fields;
pub mod quadrature;
pub mod scalar;
pub mod trajectory;
pub mod vec3;
pub mod weyl_fock;

pub use error::{Error, Result};

/// `f64` aliases for the main domain types.
pub type Trajectory64 = trajectory::Trajectory<f64>;
pub type SphericalGrid64 = quadrature::SphericalGrid<f64>;
pub type EmissionAmplitude64 = emission::EmissionAmplitude<f64>;
pub type ModeFunction64 = fields::ModeFunction<f64>;
pub type TestFunction64 = fields::TestFunction<f64>;
pub type DivergenceReport64 = diagnostics::DivergenceReport<f64>;
pub type Spectrum64 = diagnostics::Spectrum<f64>;
pub type TruncatedFockState64 = weyl_fock::TruncatedFockState<f64>;
pub type TruncatedOperator64 = weyl_fock::TruncatedOperator<f64>;

/// `f32` aliases (compile-checked; tolerances in the docs assume `f64`).
pub type Trajectory32 = trajectory::Trajectory<f32>;
pub type SphericalGrid32 = quadrature::SphericalGrid<f32>;
