use std::path::PathBuf;

use thiserror::Error;

/// Violated invariant on a model input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("{0} must be strictly positive and finite")]
    NotPositive(&'static str),
    #[error("{0} must be in {1}")]
    OutOfRange(&'static str, &'static str),
}

/// Configuration loading and validation failures. Each variant names the
/// offending key where one exists.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config file {path} not found")]
    Missing { path: PathBuf },
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Malformed(String),
    #[error("invalid value for {key}: {reason}")]
    Invalid { key: String, reason: String },
    #[error("unknown parameter path {path:?}; valid numeric paths: {}", valid.join(", "))]
    UnknownPath { path: String, valid: Vec<String> },
}

impl ConfigError {
    pub(crate) fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::Invalid {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

impl From<ModelError> for ConfigError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::NotPositive(key) => {
                Self::invalid(key, "must be strictly positive and finite")
            }
            ModelError::OutOfRange(key, range) => Self::invalid(key, format!("must be in {range}")),
        }
    }
}

/// Output and checkpoint I/O failures.
#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
}
