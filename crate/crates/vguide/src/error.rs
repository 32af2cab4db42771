//! Error type shared by every module of the lab.
//!
//! Variants are grouped so that a front end can map them onto exit codes:
//! [`Error::is_input`] covers everything caused by a bad request (invalid
//! parameters, unresolved grids, misuse of stateful objects), the remaining
//! variants are numerical failures detected while computing.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Invalid configuration value (padding factor, tolerances, sizes).
    #[error("configuration error: {0}")]
    Config(String),
    /// A parameter is outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Arguments are individually valid but inconsistent with each other.
    #[error("argument error: {0}")]
    Argument(String),
    /// The grid does not resolve the geometry well enough.
    #[error("resolution error: {0}")]
    Resolution(String),
    /// A mapped support leaves the target window.
    #[error("geometry error: {0}")]
    Geometry(String),
    /// An object was used before a required preparation step.
    #[error("state error: {0}")]
    State(String),
    /// A dense assembly would exceed the configured node cap.
    #[error("capacity error: {0}")]
    Capacity(String),
    /// The eigensolver did not reach its tolerance.
    #[error("solver error: {message} (worst residual {residual:.3e})")]
    Solver { message: String, residual: f64 },
    /// A truncated integral has an unacceptably large tail.
    #[error("truncation error: {0}")]
    Truncation(String),
    /// The boundary layer of the extension is not resolved by the t-grid.
    #[error("boundary-layer resolution error: {0}")]
    BoundaryLayer(String),
    /// Two independent evaluations of the same quantity disagree.
    #[error("consistency error: {0}")]
    Consistency(String),
}

impl Error {
    /// True when the error stems from the request rather than from the numerics.
    pub fn is_input(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Domain(_)
                | Error::Argument(_)
                | Error::Resolution(_)
                | Error::Geometry(_)
                | Error::State(_)
                | Error::Capacity(_)
        )
    }
}
