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
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid table: {0}")]
    InvalidTable(String),
    #[error("unknown column '{0}'")]
    UnknownColumn(String),
    #[error("discretization: {0}")]
    Discretization(String),
    #[error("training: {0}")]
    Training(String),
    #[error("prediction: {0}")]
    Prediction(String),
    #[error("evaluation: {0}")]
    Evaluation(String),
    #[error("screening: {0}")]
    Screening(String),
    #[error("synthbench: {0}")]
    Synth(String),
    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
