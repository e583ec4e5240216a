//! Local errors: one-to-one minutiae matching, matched/missing/spurious
//! counts, removal and addition error, human overrides, aggregation by input
//! quality.

mod counts;
mod log;
mod lsa;
mod matching;
mod overrides;
mod report;

pub use counts::{classify, error_rates, ConsistencyCounts, ErrorRates};
pub use log::{parse_override_log, DecisionRecord};
pub use matching::{match_minutiae, Assignment, MatchTolerance, MatchedPair, DEFAULT_BOX_SIZE};
pub use overrides::{
    apply_overrides, check_conflicts, AnnotationOverride, OverrideAction, Resolution, TargetId,
};
pub use report::{aggregate_local, render_local_table, LocalRecord, LocalReport, LocalSummary};

/// Rectangular minimum-cost assignment used by [`match_minutiae`].
pub use lsa::solve as solve_assignment;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConsistencyError {
    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),
    #[error("unknown minutia id {0}")]
    UnknownId(String),
    #[error("conflicting overrides on {0}")]
    ConflictingOverride(String),
    #[error("minutia id {0:?} already exists in the generated set")]
    DuplicateId(String),
    #[error("invalid override: {0}")]
    InvalidOverride(String),
}
