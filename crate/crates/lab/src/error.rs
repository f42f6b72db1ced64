use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error(transparent)]
    Core(#[from] gimlab_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("optimizer failure: {0}")]
    Optimizer(String),
}

pub type LabResult<T> = std::result::Result<T, LabError>;

pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> LabError {
    LabError::Config { field: field.into(), reason: reason.into() }
}
