use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("stage dependency: {0}")]
    StageDependency(String),
    #[error("validation failed for {0} bundle(s); see validation.json")]
    Validation(usize),
    #[error("{context}: {message}")]
    Module { context: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl PipelineError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PipelineError::Io { path: path.into(), source }
    }

    pub fn module(context: impl Into<String>, err: impl std::fmt::Display) -> Self {
        PipelineError::Module { context: context.into(), message: err.to_string() }
    }

    /// Process exit code for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Validation(_) => 2,
            PipelineError::StageDependency(_) => 3,
            _ => 1,
        }
    }
}
