use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid symbol: {0}")]
    InvalidSymbol(String),

    #[error("{path}: no valid lines")]
    EmptyDataset { path: PathBuf },

    #[error("empty training corpus")]
    EmptyCorpus,

    #[error("length mismatch: {context}")]
    LengthMismatch { context: String },

    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("unsupported model file version {found} (supported: {supported})")]
    VersionMismatch { found: u32, supported: u32 },

    #[error("model file corrupt: {0}")]
    Corrupt(String),

    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),

    #[error("missing model: {0}")]
    MissingModel(String),

    #[error("unknown experiment id: {0}")]
    UnknownExperiment(String),

    #[error("invalid fold plan: k={k} exceeds n={n}")]
    BadFoldCount { k: usize, n: usize },

    #[error("{0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
