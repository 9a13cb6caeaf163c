//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by graph ingestion, spectral precomputation and the
/// estimators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("edge list contains no edges")]
    EmptyGraph,

    #[error("graph is not strongly connected: {0}")]
    NotStronglyConnected(String),

    #[error("node count {n} exceeds limit {limit} for {operation}")]
    DimensionLimit {
        n: usize,
        limit: usize,
        operation: &'static str,
    },

    #[error("matrix is numerically singular (pivot {pivot:e} at column {column})")]
    SingularMatrix { pivot: f64, column: usize },

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("spectral precondition violated: {0}")]
    SpectralPrecondition(String),

    #[error("truncation-length formula domain invalid: {0}")]
    FormulaDomain(String),

    #[error("cap exhausted: {0}")]
    CapExhausted(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("spectral cache rejected: {0}")]
    CacheMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
