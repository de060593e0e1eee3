//! Error type shared by every fallible operation in the crate.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument fell outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A sample was too small or too concentrated to estimate from.
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    /// An iterative numeric routine failed to reach its tolerance.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A phantom layout could not be realized on the requested grid.
    #[error("geometry error: {0}")]
    Geometry(String),
}
