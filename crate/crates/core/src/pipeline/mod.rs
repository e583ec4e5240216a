//! End-to-end orchestration: manifests, seeded placement sampling, per-pair
//! evaluation, report assembly and manifest validation.

mod evaluate;
mod manifest;
mod output;
mod sampling;
mod synthetic;
mod validate;

pub use evaluate::{evaluate_pair, run_evaluation, EvaluateOptions, PairInputs, PairResult, SkippedPair};
pub use manifest::{
    load_manifest, EvaluationManifest, LoadedManifest, PairSpec, Thresholds, MANIFEST_VERSION,
};
pub use output::{
    render_pairs_csv, write_outputs, EvaluationReport, IouSummary, QualitySection, ToolkitInfo,
    VerificationSection,
};
pub use sampling::{make_placement, PlacementSamplingConfig};
pub use synthetic::{write_synthetic_corpus, SyntheticCorpus, SyntheticCorpusConfig, SyntheticPairTruth};
pub use validate::{validate_manifest, ValidationIssue, ValidationReport};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::consistency::ConsistencyError;
use crate::geometry::GeometryError;
use crate::hallucination::HallucinationError;
use crate::io::IoError;
use crate::metrics::MetricsError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("unsupported manifest version {0}")]
    UnsupportedVersion(u32),
    #[error("duplicate pair id {0}")]
    DuplicatePairId(String),
    #[error("invalid manifest: {0}")]
    InvalidManifest(String),
    #[error("invalid sampling config: {0}")]
    InvalidSampling(String),
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Consistency(#[from] ConsistencyError),
    #[error(transparent)]
    Hallucination(#[from] HallucinationError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

impl PipelineError {
    pub(crate) fn file(path: &std::path::Path, source: std::io::Error) -> Self {
        PipelineError::File {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Derives an independent seed for the named substream of `seed`.
pub fn substream(seed: u64, name: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(name.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest is 32 bytes"))
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
