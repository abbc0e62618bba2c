//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the steering pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A mathematical precondition was violated (dimension mismatch,
    /// non-Hermitian input, parameter out of range, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A configured resource budget was exceeded.
    #[error("resource limit: {0}")]
    Resource(String),

    /// Malformed or inconsistent input data (files, configs, schemas).
    #[error("input error: {0}")]
    Input(String),

    /// The SDP solver failed to produce a certified solution.
    #[error("solver failure: {0}")]
    Solver(String),

    /// An outer optimization loop failed to find a feasible result.
    #[error("search failure: {0}")]
    Search(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 input, 3 solver/search, 4 resource.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Input(_) | Error::Io(_) | Error::Json(_) => 2,
            Error::Solver(_) | Error::Search(_) => 3,
            Error::Resource(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
