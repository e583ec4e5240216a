use printlab_annotate::AnnotateError;
use printlab_core::consistency::ConsistencyError;
use printlab_core::geometry::GeometryError;
use printlab_core::hallucination::HallucinationError;
use printlab_core::io::IoError;
use printlab_core::metrics::MetricsError;
use printlab_core::pipeline::PipelineError;
use printlab_core::stylebank::StyleBankError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Inputs were read but are not acceptable.
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

macro_rules! runtime_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Runtime(e.to_string())
            }
        }
    )*};
}

runtime_from!(
    AnnotateError,
    ConsistencyError,
    GeometryError,
    HallucinationError,
    IoError,
    MetricsError,
    StyleBankError,
    std::io::Error,
    serde_json::Error
);

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::UnsupportedVersion(_)
            | PipelineError::DuplicatePairId(_)
            | PipelineError::InvalidManifest(_) => CliError::Invalid(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}
