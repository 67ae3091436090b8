use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("bad file format: {0}")]
    Format(String),
    #[error("training diverged (non-finite loss {loss}); lower the learning rate")]
    DivergedTraining { loss: f64 },
    #[error("ensemble members disagree: {0}")]
    EnsembleMismatch(String),
    #[error("decoding direction mismatch: {0}")]
    Direction(String),
    #[error("input mismatch: {0}")]
    InputMismatch(String),
    #[error("missing artifact for this stage: {}", .0.display())]
    StageDependency(PathBuf),
    #[error("artifact already exists (use --force to overwrite): {}", .0.display())]
    ArtifactExists(PathBuf),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> Self {
        let context = context.into();
        move |source| Error::Io { context, source }
    }
}

impl Error {
    /// Process exit status for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Parse { .. } | Error::Format(_) => 3,
            Error::StageDependency(_) => 4,
            Error::ArtifactExists(_) => 5,
            Error::Io { .. } => 6,
            Error::DivergedTraining { .. } => 7,
            Error::EnsembleMismatch(_) | Error::Direction(_) => 8,
            Error::InputMismatch(_) => 9,
            Error::EmptyInput | Error::EmptyCorpus => 10,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(source: std::io::Error) -> Self {
        Error::Io {
            context: "i/o".to_string(),
            source,
        }
    }
}
