use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum WorkbenchError {
    #[error(transparent)]
    Core(#[from] gqml_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: invalid JSON at line {line}, column {column}: {message}")]
    Json { path: PathBuf, line: usize, column: usize, message: String },
    #[error("{path}: line {line}: field `{field}`: {message}")]
    Field { path: PathBuf, line: usize, field: String, message: String },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Format(String),
}

pub type Result<T, E = WorkbenchError> = std::result::Result<T, E>;

impl WorkbenchError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    /// Process exit status: 1 for rejected input, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io { .. } | Self::Core(gqml_core::Error::ImaginaryResidue(_) | gqml_core::Error::Exhausted(_)) => 2,
            _ => 1,
        }
    }
}
