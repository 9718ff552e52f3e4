//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the estimation and inference pipeline.
///
/// The split matters to callers: `InvalidInput`/`DimensionMismatch` mean the
/// request itself was malformed, while `Degenerate`/`Numerical`/`Infeasible`
/// mean a well-formed problem could not be solved (tied responses, vanishing
/// curvature, an empty constraint set, ...).
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed data or parameters (validation failure).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Shapes of the supplied objects do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The problem is degenerate (e.g. all responses tied, zero curvature).
    #[error("degenerate problem: {0}")]
    Degenerate(String),

    /// An iterative routine failed to produce a usable answer.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A constraint system admits no solution.
    #[error("infeasible: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;
