//! Error types shared across the engine.

use crate::eig::EigenResult;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid input (out-of-range indices, malformed grids, bad sectors).
    #[error("domain error: {0}")]
    Domain(String),

    /// A requested computation exceeds a configured memory/size budget.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// The iterative eigensolver hit its iteration cap. Carries the best
    /// result obtained so far.
    #[error("eigensolver did not converge: {message}")]
    Convergence {
        message: String,
        best: Box<EigenResult>,
    },

    /// A numerical sanity check failed badly enough to distrust the result
    /// (e.g. a density-matrix eigenvalue far below zero).
    #[error("numerical integrity violation: {0}")]
    NumericalIntegrity(String),

    /// A search did not find what it was looking for (e.g. no interior gap
    /// minimum in a sweep).
    #[error("not found: {0}")]
    NotFound(String),
}

pub type Result<T> = std::result::Result<T, Error>;
