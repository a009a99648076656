use thiserror::Error;

/// Errors produced by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter violates the documented precondition of an operation.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A point, segment or sample lies on (or too close to) the excluded origin.
    #[error("touches the puncture: {0}")]
    Puncture(String),

    /// A test vector has support on nodes where the discrete operators are truncated.
    #[error("test vector touches the boundary: {0}")]
    BoundarySupport(String),

    /// An iterative or direct solve did not produce a usable result.
    #[error("numeric failure in {context}: {diagnostics}")]
    NumericFailure { context: &'static str, diagnostics: String },

    /// The recorded interference pattern cannot be fitted.
    #[error("unusable fringe: {0}")]
    UnusableFringe(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    pub(crate) fn numeric(context: &'static str, diagnostics: impl Into<String>) -> Self {
        Error::NumericFailure { context, diagnostics: diagnostics.into() }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NumericFailure { .. } | Error::UnusableFringe(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
