use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("cannot read config {path}: {source}")]
    ReadConfig { path: PathBuf, source: std::io::Error },
    #[error("cannot parse config: {0}")]
    ParseConfig(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("cannot serialize report: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Core(#[from] lmc_core::Error),
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
