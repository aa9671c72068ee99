use std::path::PathBuf;

use chrono::NaiveDate;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("insufficient data: {what} needs at least {required} observations, got {available}")]
    InsufficientData {
        what: &'static str,
        required: usize,
        available: usize,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("ingest error in {path}: {message}")]
    Ingest { path: PathBuf, message: String },

    #[error("ingest error in {path}, row {row}: {message}")]
    IngestRow {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("fetch of {url} failed: {message}")]
    Fetch { url: String, message: String },

    #[error("look-ahead violation: data for {requested} requested while allocating as of {as_of}")]
    LookAhead {
        as_of: NaiveDate,
        requested: NaiveDate,
    },

    #[error("no priced currencies on {0}")]
    EmptyUniverse(NaiveDate),

    #[error("oracle refuses filtration with {points} points (limit {limit})")]
    OracleTooLarge { points: usize, limit: usize },

    #[error("range mismatch: {0}")]
    RangeMismatch(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn insufficient(what: &'static str, required: usize, available: usize) -> Self {
        Error::InsufficientData {
            what,
            required,
            available,
        }
    }
}
