use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config parse error: {0}")]
    Parse(String),

    #[error("invalid value for `{key}`: {reason}")]
    Validation { key: String, reason: String },

    #[error(transparent)]
    Core(#[from] abflux::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn validation(key: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Validation { key: key.into(), reason: reason.into() }
    }

    /// 2 for numeric failures, 1 for everything the user can fix in the input.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numeric() => 2,
            _ => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse(_) => "parse",
            CliError::Validation { .. } => "validation",
            CliError::Core(abflux::Error::NumericFailure { .. }) => "numeric-failure",
            CliError::Core(abflux::Error::UnusableFringe(_)) => "unusable-fringe",
            CliError::Core(_) => "validation",
            CliError::Io(_) => "io",
        }
    }
}
