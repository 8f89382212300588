use std::path::PathBuf;

use thiserror::Error;

use crate::slip::SlipState;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{message}")]
    Invalid {
        field: &'static str,
        message: String,
    },
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("malformed configuration: {0}")]
    Parse(String),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Numerical failures that abort an episode. A fall is not an error.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("plant state became non-finite at t = {t}", t = .last_good.t)]
    NonFiniteState { last_good: Box<SlipState> },
    #[error("non-finite {quantity} in controller update: {value}")]
    NonFiniteController { quantity: &'static str, value: f64 },
}

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("cannot write to {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}
