//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by instance validation, graph construction, and solving.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("duplicate points in location set")]
    DuplicatePoints,

    #[error("Cholesky factorization failed on a matrix that should be positive definite")]
    FactorizationFailure,

    #[error("no arc from vertex {from} to vertex {to}")]
    MissingArc { from: usize, to: usize },

    #[error("arc selection violates degree constraints: {0}")]
    DegreeInfeasible(String),

    #[error("infeasible budget: {budget} is below the shortest s-t distance {shortest}")]
    InfeasibleBudget { budget: f64, shortest: f64 },

    #[error("could not generate a connected roadmap after {attempts} seeds")]
    Disconnected { attempts: u32 },

    #[error("enumeration cap of {cap} exceeded")]
    CapExceeded { cap: u64 },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("unsupported instance schema version {found} (expected {expected})")]
    SchemaMismatch { found: u32, expected: u32 },

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
