use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument fell outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A sample was empty where observations are required.
    #[error("empty sample")]
    EmptySample,

    /// Configuration values failed validation.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A model fit could not be computed from the given data.
    #[error("fit failed: {0}")]
    FitFailed(String),

    /// An iterative optimizer failed to converge, including fallbacks.
    #[error("optimizer failed: {0}")]
    OptimizerFailed(String),

    /// The operation does not support this kind of data.
    #[error("unsupported data: {0}")]
    Unsupported(String),

    /// Too many bootstrap replicate fits failed for the interval to be trusted.
    #[error("too many replicate fit failures: {failed} of {total}")]
    TooManyFailures { failed: usize, total: usize },

    /// A numerical routine lost accuracy or failed to bracket.
    #[error("numerical error: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
