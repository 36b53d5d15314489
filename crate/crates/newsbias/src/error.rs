//! Error families of the command-line pipeline and their exit codes.

use std::path::{Path, PathBuf};

/// Process exit codes, one per error family.
pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const MISSING_ARTIFACT: i32 = 3;
    pub const INPUT: i32 = 4;
    pub const CLASSIFIER: i32 = 5;
    pub const NUMERIC: i32 = 6;
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("missing artifact {0} (run the previous stage first)")]
    MissingArtifact(PathBuf),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("classifier error: {0}")]
    Classifier(String),
    #[error("numeric error: {0}")]
    Numeric(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Io { .. } => exit::IO,
            PipelineError::Config(_) => exit::CONFIG,
            PipelineError::MissingArtifact(_) => exit::MISSING_ARTIFACT,
            PipelineError::Input(_) => exit::INPUT,
            PipelineError::Classifier(_) => exit::CLASSIFIER,
            PipelineError::Numeric(_) => exit::NUMERIC,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Input error prefixed with the offending file (and line, when known).
    pub fn input_at(path: &Path, line: Option<usize>, detail: impl std::fmt::Display) -> Self {
        match line {
            Some(line) => PipelineError::Input(format!("{}:{line}: {detail}", path.display())),
            None => PipelineError::Input(format!("{}: {detail}", path.display())),
        }
    }
}

impl From<newsbias_core::networks::NetworkError> for PipelineError {
    fn from(e: newsbias_core::networks::NetworkError) -> Self {
        PipelineError::Numeric(e.to_string())
    }
}

impl From<newsbias_core::cluster::ClusterError> for PipelineError {
    fn from(e: newsbias_core::cluster::ClusterError) -> Self {
        PipelineError::Numeric(e.to_string())
    }
}

pub type Result<T, E = PipelineError> = std::result::Result<T, E>;
