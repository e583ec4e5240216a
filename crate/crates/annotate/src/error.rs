use std::path::PathBuf;

use printlab_core::pipeline::{PipelineError, ValidationIssue};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnnotateError {
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("session {session} has no pair {pair}")]
    UnknownPair { session: String, pair: String },
    #[error("session {0} is finalized")]
    SessionFinalized(String),
    #[error("session {0} is not finalized yet")]
    NotFinalized(String),
    #[error("conflicting override: {0}")]
    ConflictingOverride(String),
    #[error("invalid override: {0}")]
    InvalidOverride(String),
    #[error("stale sequence {sequence}: session is at {last}")]
    StaleSequence { sequence: u64, last: u64 },
    #[error("manifest invalid: {message}")]
    ManifestInvalid {
        message: String,
        issues: Vec<ValidationIssue>,
    },
    #[error("manifest {path} changed since the session was created")]
    ManifestChanged { path: PathBuf },
    #[error("decision log of session {session}, line {line}: {message}")]
    CorruptLog {
        session: String,
        line: usize,
        message: String,
    },
    #[error("invalid request: {0}")]
    BadRequest(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

impl AnnotateError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AnnotateError::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable code carried in error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            AnnotateError::UnknownSession(_) => "unknown_session",
            AnnotateError::UnknownPair { .. } => "unknown_pair",
            AnnotateError::SessionFinalized(_) => "session_finalized",
            AnnotateError::NotFinalized(_) => "not_finalized",
            AnnotateError::ConflictingOverride(_) => "conflicting_override",
            AnnotateError::InvalidOverride(_) => "invalid_override",
            AnnotateError::StaleSequence { .. } => "stale_sequence",
            AnnotateError::ManifestInvalid { .. } => "manifest_invalid",
            AnnotateError::ManifestChanged { .. } => "manifest_changed",
            AnnotateError::CorruptLog { .. } => "corrupt_log",
            AnnotateError::BadRequest(_) => "bad_request",
            AnnotateError::Io { .. } | AnnotateError::Json(_) | AnnotateError::Pipeline(_) => "internal",
        }
    }
}
