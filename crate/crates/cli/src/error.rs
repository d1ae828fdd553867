use std::path::PathBuf;

use mace_core::adapt::AdaptError;
use mace_core::models::ModelError;
use mace_core::simulators::SimError;
use mace_core::tasks::ik::TaskError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical fault: {0}")]
    Numerical(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// Process exit code: 2 for configuration and input problems, 3 for
    /// numerical faults.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub fn config(msg: impl std::fmt::Display) -> CliError {
        CliError::Config(msg.to_string())
    }

    /// Prefixes the message with where it happened.
    pub fn context(self, at: &str) -> CliError {
        match self {
            CliError::Config(m) => CliError::Config(format!("{at}: {m}")),
            CliError::Numerical(m) => CliError::Numerical(format!("{at}: {m}")),
            io => io,
        }
    }
}

impl From<AdaptError> for CliError {
    fn from(e: AdaptError) -> Self {
        match e {
            AdaptError::Config(m) => CliError::Config(m),
            AdaptError::Model(ModelError::Shape(m)) | AdaptError::Model(ModelError::Schema(m)) => CliError::Config(m),
            AdaptError::Model(ModelError::InvalidParameter(m)) => CliError::Config(m),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::from(AdaptError::Model(e))
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<TaskError> for CliError {
    fn from(e: TaskError) -> Self {
        CliError::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
