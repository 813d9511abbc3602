use pstlab::PstError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] PstError),

    /// Bad flags, bad config, unreadable inputs.
    #[error("{0}")]
    Usage(String),

    #[error("writing {path}: {source}")]
    Output { path: String, source: std::io::Error },
}

impl CliError {
    /// 2 for usage and validation errors, 3 for numerical failures, 1 when
    /// an output cannot be written.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(_) | CliError::Usage(_) => 2,
            CliError::Output { .. } => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
