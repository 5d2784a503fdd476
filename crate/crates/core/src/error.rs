use thiserror::Error;

/// Errors raised by the field laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter or input violates a documented constraint.
    #[error("configuration error: {0}")]
    Config(String),

    /// A requested order, size or index is outside the supported range.
    #[error("range error: {0}")]
    Range(String),

    /// Evaluation hits a genuine singularity (zero mass at zero momentum, endpoint of a density).
    #[error("singularity: {0}")]
    Singularity(String),

    /// A numerical routine did not meet its tolerance.
    #[error("numerical failure: {message} ({diagnostics})")]
    Numerical { message: String, diagnostics: String },

    /// A momentum test function does not satisfy the support class it was requested with.
    #[error("classification error: {0}")]
    Classification(String),

    /// A caller broke a structural precondition (e.g. a non-symmetric matrix).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn numerical(message: impl Into<String>, diagnostics: impl Into<String>) -> Error {
    Error::Numerical {
        message: message.into(),
        diagnostics: diagnostics.into(),
    }
}
