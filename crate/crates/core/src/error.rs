use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the toolkit. Every variant names the offending quantity.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("inconsistent input: {0}")]
    Inconsistent(String),
    #[error("argument error: {0}")]
    Argument(String),
    #[error("invertibility error: {0}")]
    Invertibility(String),
    #[error("sampling error: {0}")]
    Sampling(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("schedule error at k = {k}: {reason}")]
    Schedule { k: String, reason: String },
    #[error("taming error: strictness audit failed at point {point:?} (margin {margin}, required {required})")]
    Taming {
        point: Vec<f64>,
        margin: f64,
        required: f64,
    },
    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
