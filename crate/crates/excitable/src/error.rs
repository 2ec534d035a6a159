//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, EnaError>;

#[derive(Debug, Error)]
pub enum EnaError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("model has no readout; install or train one first")]
    MissingReadout,

    #[error("reservoir draw has numerically zero spectral radius; rebuild with a different seed or lower sparsity")]
    DegenerateReservoir,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("ridge normal matrix is singular; retry with lambda > 0")]
    SingularNormalMatrix,

    #[error("attractor {label} has only {found} local pulse difference vectors (need at least 2); enlarge the radius or the trajectory")]
    StarvedAttractor { label: String, found: usize },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("energy {energy:.3e} at candidate exceeds tolerance {tol:.3e}; not a fixed point")]
    EnergyAboveTolerance { energy: f64, tol: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("{0}")]
    Other(String),
}
