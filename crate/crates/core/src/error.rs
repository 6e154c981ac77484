use thiserror::Error;

use crate::train::TrainTrace;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Vector/matrix dimensions do not line up.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A weight, input or intermediate value is NaN or infinite.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// A constructor or configuration precondition was violated.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Operation called on the wrong network kind (plain vs modified).
    #[error("wrong network kind: {0}")]
    WrongKind(String),

    /// Malformed model, dataset or config document.
    #[error("parse error: {0}")]
    Parse(String),

    /// Adaptive quadrature failed to meet its tolerance.
    #[error("quadrature did not converge (interval [{a}, {b}])")]
    QuadratureNonConvergence { a: f64, b: f64 },

    /// Training objective became non-finite or exceeded the divergence guard.
    /// Carries the trace accumulated up to the failing epoch.
    #[error("training diverged at epoch {epoch} (objective {objective})")]
    Divergence {
        epoch: usize,
        objective: f64,
        trace: Box<TrainTrace>,
    },

    /// Slope fit requested on degenerate abscissae.
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    /// Rate study aborted (e.g. most cells diverged).
    #[error("rate study failed: {0}")]
    Study(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
