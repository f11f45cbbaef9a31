use thiserror::Error;

/// Errors raised anywhere in the discretization / solver pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum BiotError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate cell {cell}: signed area {area:e}")]
    DegenerateCell { cell: usize, area: f64 },

    #[error("no quadrature rule of degree {0} (supported: 1..=6)")]
    UnsupportedQuadrature(usize),

    #[error("factorization failed for block `{block}`: {reason}")]
    Factorization { block: String, reason: String },

    #[error("MINRES breakdown at iteration {iteration}: {reason}")]
    Breakdown { iteration: usize, reason: String },

    #[error("preconditioner is not positive definite (<Pr, r> = {value:e} at iteration {iteration})")]
    IndefinitePreconditioner { iteration: usize, value: f64 },

    #[error("eigensolver failure: {0}")]
    Eigen(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T, E = BiotError> = std::result::Result<T, E>;
