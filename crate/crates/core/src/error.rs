use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error("line {line}: duplicate record for prompt {prompt_id:?} and model {model_id:?}")]
    DuplicateRecord {
        line: usize,
        prompt_id: String,
        model_id: String,
    },

    #[error("line {line}: score is not finite ({value})")]
    NonFiniteScore { line: usize, value: f64 },

    #[error("duplicate Elo entry for model {0:?}")]
    DuplicateModel(String),

    #[error("Elo rating for model {model:?} is not finite ({value})")]
    NonFiniteRating { model: String, value: f64 },

    #[error("unknown model {0:?}")]
    UnknownModel(String),

    #[error("models {a:?} and {b:?} have no shared prompts")]
    NoSharedPrompts { a: String, b: String },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("offset bracket exceeded |delta| > {limit:e} while searching for target {target}")]
    BracketExceeded { limit: f64, target: f64 },

    #[error("joint optimizer diverged after {iterations} iterations (loss {loss})")]
    Divergence { iterations: usize, loss: f64 },

    #[error("no score for prompt {prompt_id:?} and model {model_id:?}")]
    MissingScore { prompt_id: String, model_id: String },
}

/// Coarse failure classes, used by the CLI to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Io,
    Ingest,
    Usage,
    Solver,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidArgument(message.into())
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io { .. } => ErrorClass::Io,
            Error::Malformed { .. }
            | Error::DuplicateRecord { .. }
            | Error::NonFiniteScore { .. }
            | Error::DuplicateModel(_)
            | Error::NonFiniteRating { .. }
            | Error::MissingScore { .. } => ErrorClass::Ingest,
            Error::UnknownModel(_) | Error::InvalidArgument(_) => ErrorClass::Usage,
            Error::NoSharedPrompts { .. } | Error::BracketExceeded { .. } | Error::Divergence { .. } => {
                ErrorClass::Solver
            }
        }
    }
}
