use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments, bad config, or unreadable inputs.
    #[error("{0}")]
    Usage(String),

    #[error("cannot read {path}: {source}")]
    MissingInput {
        path: PathBuf,
        source: std::io::Error,
    },

    /// A pipeline stage failed.
    #[error("[{stage}] {source}")]
    Compute {
        stage: String,
        source: lagsynth::Error,
    },

    /// A stage declined to produce a result.
    #[error("[{stage}] {message}")]
    Refused { stage: String, message: String },

    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        source: std::io::Error,
    },

    /// Stored provenance does not match the current inputs.
    #[error("verification failed:\n{0}")]
    Verify(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::MissingInput { .. } => 2,
            CliError::Compute { .. } | CliError::Refused { .. } | CliError::Output { .. } | CliError::Verify(_) => 1,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Attach a stage tag to core errors.
pub trait Stage<T> {
    fn stage(self, stage: &str) -> CliResult<T>;
}

impl<T> Stage<T> for lagsynth::Result<T> {
    fn stage(self, stage: &str) -> CliResult<T> {
        self.map_err(|source| CliError::Compute {
            stage: stage.to_string(),
            source,
        })
    }
}
