use thiserror::Error;

/// Errors raised while building or analysing a spin-cluster model.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid spin magnitude: {0}")]
    InvalidSpin(String),

    #[error("invalid site list: {0}")]
    InvalidSites(String),

    #[error("Hilbert-space dimension {dim} exceeds the cap {cap}")]
    Capacity { dim: usize, cap: usize },

    #[error("site index {index} out of range (0..{count})")]
    SiteIndex { index: usize, count: usize },

    #[error("operator dimension {got} does not match the expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("spectral parameter {0} lies on a pole")]
    Pole(String),

    #[error("model constraints violated: {}", .0.join("; "))]
    Constraint(Vec<String>),

    #[error("coupling shape mismatch: {0}")]
    Shape(String),

    #[error("internal consistency failure: {0}")]
    Consistency(String),

    #[error("matrix is not Hermitian (relative deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("operator does not commute with total S^z (relative commutator {0:.3e})")]
    NotBlockDiagonal(f64),

    #[error("root set is off-shell (division remainder {0:.3e})")]
    OffShell(f64),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
