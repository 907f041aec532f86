use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{stage}: {source}")]
    Runtime {
        stage: String,
        #[source]
        source: acoustica_core::Error,
    },

    #[error("{failed} of {total} batch runs failed")]
    Batch { failed: usize, total: usize },
}

impl CliError {
    /// 2 for anything wrong with the invocation or the config, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 2,
            _ => 1,
        }
    }

    pub(crate) fn runtime(stage: impl Into<String>) -> impl FnOnce(acoustica_core::Error) -> CliError {
        let stage = stage.into();
        move |source| CliError::Runtime { stage, source }
    }
}
