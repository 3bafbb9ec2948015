//! CLI error classes mapped to distinct exit codes.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("invalid config: {0}")]
    ConfigInvalid(String),

    #[error("stage {stage} failed: {message}")]
    StageFailure { stage: &'static str, message: String },

    #[error("series {0:?} not present in the manifest inventory")]
    SeriesMissing(String),
}

impl CliError {
    pub fn from_core(e: wavecorr::Error) -> Self {
        CliError::ConfigInvalid(e.to_string())
    }

    pub fn stage(stage: &'static str) -> impl Fn(wavecorr::Error) -> CliError {
        move |e| CliError::StageFailure {
            stage,
            message: e.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::ConfigInvalid(_) => 2,
            CliError::StageFailure { .. } => 3,
            CliError::SeriesMissing(_) => 4,
        }
    }
}
