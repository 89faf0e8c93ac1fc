//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("zero momentum: every frequency formula divides by |p|")]
    ZeroMomentum,

    #[error("superluminal speed {speed} (must be < 1)")]
    Superluminal { speed: f64 },

    #[error("unsupported derivative order {order} (max 3)")]
    UnsupportedOrder { order: usize },

    #[error("evaluation point lies on the particle worldline")]
    OnWorldline,

    #[error("quadrature accuracy failure in {context}: estimate {estimate:e} exceeds tolerance {tolerance:e}")]
    Accuracy {
        context: &'static str,
        estimate: f64,
        tolerance: f64,
    },

    #[error("shell [{a}, {b}] outside grid range [{r_min}, {r_max}]")]
    ShellOutOfRange { a: f64, b: f64, r_min: f64, r_max: f64 },

    #[error("mode functions live on different grids")]
    GridMismatch,

    #[error("representation {representation} not applicable: {reason}")]
    RepresentationInapplicable {
        representation: &'static str,
        reason: String,
    },

    #[error("Fock cutoff too small: tail mass {tail:e} exceeds tolerance {tolerance:e}")]
    CutoffTooSmall { tail: f64, tolerance: f64 },

    #[error("refused: out-state is {classification}, the requested quantity diverges")]
    NonFock { classification: String },

    #[error("not enough shells in fit window: got {got}, need {need}")]
    InsufficientShells { got: usize, need: usize },

    #[error("classification inconclusive: {reason}")]
    Inconclusive { reason: String },

    #[error("invalid input: {0}")]
    Validation(String),
}

pub type Result<V> = std::result::Result<V, Error>;
