//! Session state as a pure function of the manifest and the decision log.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use printlab_core::consistency::{
    aggregate_local, apply_overrides, classify, error_rates, match_minutiae, AnnotationOverride, Assignment,
    ConsistencyCounts, ConsistencyError, DecisionRecord, ErrorRates, LocalRecord, LocalReport, MatchTolerance,
    OverrideAction,
};
use printlab_core::geometry::{compute_expected, Minutia, MinutiaKind, MinutiaeSet};
use printlab_core::metrics::{quality_bin, QualityClass};
use printlab_core::pipeline::{LoadedManifest, PairInputs, PairSpec, PipelineError};
use serde::{Deserialize, Serialize};

use crate::AnnotateError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Open,
    Finalized,
}

/// Persisted header of a session (`session.json`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMeta {
    pub session_id: String,
    pub manifest_ref: String,
    pub manifest_path: PathBuf,
    pub manifest_digest: String,
    pub annotator: String,
    pub created_at: DateTime<Utc>,
    pub status: SessionStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finalized_at: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Matched,
    Missing,
    Spurious,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkerColor {
    Green,
    Orange,
    Purple,
}

impl Classification {
    pub fn color(self) -> MarkerColor {
        match self {
            Classification::Matched => MarkerColor::Green,
            Classification::Missing => MarkerColor::Orange,
            Classification::Spurious => MarkerColor::Purple,
        }
    }
}

/// Inputs of one pair that never change during a session.
#[derive(Debug)]
pub(crate) struct PairBase {
    pub spec: PairSpec,
    pub quality_class: Option<QualityClass>,
    pub gt: MinutiaeSet,
    pub expected: MinutiaeSet,
    pub generated: MinutiaeSet,
    pub auto: Assignment,
    pub image_paths: ImagePaths,
}

#[derive(Debug, Clone)]
pub(crate) struct ImagePaths {
    pub exemplar: PathBuf,
    pub ridge_guidance: Option<PathBuf>,
    pub generated: PathBuf,
}

#[derive(Debug, Clone)]
pub(crate) struct PairState {
    pub base: Arc<PairBase>,
    pub decisions: Vec<DecisionRecord>,
    pub assignment: Assignment,
    pub edited: MinutiaeSet,
    pub counts: ConsistencyCounts,
}

impl PairState {
    fn initial(base: Arc<PairBase>) -> Self {
        PairState {
            assignment: base.auto.clone(),
            edited: base.generated.clone(),
            counts: classify(&base.auto),
            decisions: Vec::new(),
            base,
        }
    }

    fn overrides(&self) -> Vec<AnnotationOverride> {
        self.decisions.iter().map(|d| d.override_.clone()).collect()
    }

    fn with_decision(&self, record: DecisionRecord) -> Result<PairState, AnnotateError> {
        let mut overrides = self.overrides();
        overrides.push(record.override_.clone());
        let (assignment, edited) =
            apply_overrides(&self.base.auto, &self.base.expected, &self.base.generated, &overrides)
                .map_err(override_error)?;
        let mut decisions = self.decisions.clone();
        decisions.push(record);
        Ok(PairState {
            base: Arc::clone(&self.base),
            counts: classify(&assignment),
            assignment,
            edited,
            decisions,
        })
    }
}

fn override_error(e: ConsistencyError) -> AnnotateError {
    match e {
        ConsistencyError::ConflictingOverride(t) => AnnotateError::ConflictingOverride(t),
        other => AnnotateError::InvalidOverride(other.to_string()),
    }
}

/// Override body accepted by the decisions endpoint. Annotator and timestamp
/// default to the session annotator and the server clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverrideInput {
    #[serde(flatten)]
    pub action: OverrideAction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRequest {
    /// Client sequence number; the next free number when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence: Option<u64>,
    #[serde(rename = "override")]
    pub override_: OverrideInput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionResponse {
    pub session_id: String,
    pub pair_id: String,
    pub sequence: u64,
    /// True when the sequence number was already recorded with the same action.
    pub duplicate: bool,
    pub counts: ConsistencyCounts,
    pub rates: ErrorRates,
}

pub(crate) enum Prepared {
    Duplicate(DecisionResponse),
    Append(DecisionRecord, Session),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSummary {
    pub pair_id: String,
    pub counts: ConsistencyCounts,
    pub decisions: usize,
}

/// Body of `GET /sessions/{id}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub manifest_ref: String,
    pub manifest_digest: String,
    pub annotator: String,
    pub status: SessionStatus,
    pub created_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finalized_at: Option<DateTime<Utc>>,
    pub cursor: usize,
    pub pair_count: usize,
    pub decisions: usize,
    pub last_sequence: u64,
    pub totals: ConsistencyCounts,
    pub pairs: Vec<PairSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marker {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub kind: MinutiaKind,
    pub classification: Classification,
    pub color: MarkerColor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partner_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRef {
    #[serde(rename = "ref")]
    pub ref_: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairImages {
    pub exemplar: ImageRef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ridge_guidance: Option<ImageRef>,
    pub generated: ImageRef,
}

/// Body of `GET /sessions/{id}/pairs/{pair_id}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairPayload {
    pub session_id: String,
    pub pair_id: String,
    pub index: usize,
    pub status: SessionStatus,
    pub style_label: String,
    pub quality_class: Option<QualityClass>,
    pub frame: [u32; 2],
    pub images: PairImages,
    pub ground_truth: Vec<Minutia>,
    pub expected: Vec<Marker>,
    pub generated: Vec<Marker>,
    pub counts: ConsistencyCounts,
    pub rates: ErrorRates,
    pub overrides: Vec<DecisionRecord>,
    pub legend: BTreeMap<Classification, MarkerColor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportPair {
    pub pair_id: String,
    pub style_label: String,
    pub quality_class: Option<QualityClass>,
    pub counts: ConsistencyCounts,
    pub rates: ErrorRates,
    pub overrides_applied: usize,
}

/// Finalized counts and rates (`export.json`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportDocument {
    pub session_id: String,
    pub manifest_ref: String,
    pub manifest_digest: String,
    pub annotator: String,
    pub finalized_at: DateTime<Utc>,
    pub decisions: usize,
    pub log_digest: String,
    pub tolerance: MatchTolerance,
    pub totals: ConsistencyCounts,
    pub pairs: Vec<ExportPair>,
    pub local: LocalReport,
}

/// Full in-memory state of one session.
#[derive(Debug, Clone)]
pub struct Session {
    pub(crate) meta: SessionMeta,
    pub(crate) tolerance: MatchTolerance,
    pub(crate) pairs: Vec<Arc<PairState>>,
    pub(crate) index: Arc<BTreeMap<String, usize>>,
    pub(crate) log: Vec<DecisionRecord>,
    pub(crate) cursor: usize,
}

impl Session {
    /// Automatic classification of every manifest pair.
    pub fn start(meta: SessionMeta, loaded: &LoadedManifest) -> Result<Session, AnnotateError> {
        let m = &loaded.manifest;
        let mut pairs = Vec::with_capacity(m.pairs.len());
        let mut index = BTreeMap::new();
        for (i, spec) in m.pairs.iter().enumerate() {
            let inputs = PairInputs::load(loaded, spec, None)?;
            let expected = compute_expected(&inputs.gt, &inputs.gt_mask, &inputs.placement)
                .map_err(PipelineError::from)?
                .minutiae;
            let auto = match_minutiae(&expected, &inputs.generated, &m.tolerance);
            let quality_class = spec
                .quality_class
                .or_else(|| spec.quality_score.map(|q| quality_bin(q, &m.quality_bins)));
            let base = PairBase {
                spec: spec.clone(),
                quality_class,
                gt: inputs.gt,
                expected,
                generated: inputs.generated,
                auto,
                image_paths: ImagePaths {
                    exemplar: loaded.resolve(&spec.exemplar_image_ref),
                    ridge_guidance: spec.ridge_guidance_ref.as_deref().map(|r| loaded.resolve(r)),
                    generated: loaded.resolve(&spec.generated_image_ref),
                },
            };
            pairs.push(Arc::new(PairState::initial(Arc::new(base))));
            index.insert(spec.pair_id.clone(), i);
        }
        Ok(Session {
            meta,
            tolerance: m.tolerance,
            pairs,
            index: Arc::new(index),
            log: Vec::new(),
            cursor: 0,
        })
    }

    /// Rebuilds a session by re-applying a decision log in order.
    pub fn replay(
        meta: SessionMeta,
        loaded: &LoadedManifest,
        records: &[DecisionRecord],
    ) -> Result<Session, AnnotateError> {
        let mut session = Session::start(meta, loaded)?;
        for (i, r) in records.iter().enumerate() {
            session = session.appended(r.clone()).map_err(|e| AnnotateError::CorruptLog {
                session: session.meta.session_id.clone(),
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(session)
    }

    pub fn meta(&self) -> &SessionMeta {
        &self.meta
    }

    pub fn log(&self) -> &[DecisionRecord] {
        &self.log
    }

    pub fn last_sequence(&self) -> u64 {
        self.log.last().map_or(0, |r| r.sequence)
    }

    fn pair_index(&self, pair_id: &str) -> Result<usize, AnnotateError> {
        self.index
            .get(pair_id)
            .copied()
            .ok_or_else(|| AnnotateError::UnknownPair {
                session: self.meta.session_id.clone(),
                pair: pair_id.to_string(),
            })
    }

    fn appended(&self, record: DecisionRecord) -> Result<Session, AnnotateError> {
        if record.session_id != self.meta.session_id {
            return Err(AnnotateError::BadRequest(format!(
                "record belongs to session {}",
                record.session_id
            )));
        }
        let last = self.last_sequence();
        if record.sequence <= last {
            return Err(AnnotateError::StaleSequence {
                sequence: record.sequence,
                last,
            });
        }
        let i = self.pair_index(&record.pair_id)?;
        let updated = self.pairs[i].with_decision(record.clone())?;
        let mut next = self.clone();
        next.pairs[i] = Arc::new(updated);
        next.log.push(record);
        next.cursor = i;
        Ok(next)
    }

    /// Validates a decision against the current state without mutating it.
    pub(crate) fn prepare(
        &self,
        pair_id: &str,
        req: DecisionRequest,
        now: DateTime<Utc>,
    ) -> Result<Prepared, AnnotateError> {
        if self.meta.status == SessionStatus::Finalized {
            return Err(AnnotateError::SessionFinalized(self.meta.session_id.clone()));
        }
        let i = self.pair_index(pair_id)?;
        let last = self.last_sequence();
        let sequence = req.sequence.unwrap_or(last + 1);
        if sequence <= last {
            let same = self
                .log
                .iter()
                .find(|r| r.sequence == sequence)
                .filter(|r| r.pair_id == pair_id && r.override_.action == req.override_.action);
            return match same {
                Some(_) => Ok(Prepared::Duplicate(self.response(i, sequence, true))),
                None => Err(AnnotateError::StaleSequence { sequence, last }),
            };
        }
        let record = DecisionRecord {
            session_id: self.meta.session_id.clone(),
            pair_id: pair_id.to_string(),
            sequence,
            timestamp: now,
            override_: AnnotationOverride {
                action: req.override_.action,
                annotator: req
                    .override_
                    .annotator
                    .unwrap_or_else(|| self.meta.annotator.clone()),
                timestamp: req.override_.timestamp.unwrap_or(now),
            },
        };
        let next = self.appended(record.clone())?;
        Ok(Prepared::Append(record, next))
    }

    pub(crate) fn response(&self, i: usize, sequence: u64, duplicate: bool) -> DecisionResponse {
        let p = &self.pairs[i];
        DecisionResponse {
            session_id: self.meta.session_id.clone(),
            pair_id: p.base.spec.pair_id.clone(),
            sequence,
            duplicate,
            counts: p.counts,
            rates: error_rates(p.counts),
        }
    }

    pub(crate) fn response_for(&self, pair_id: &str, sequence: u64) -> Result<DecisionResponse, AnnotateError> {
        Ok(self.response(self.pair_index(pair_id)?, sequence, false))
    }

    /// Corrected counts per pair, in manifest order.
    pub fn counts(&self) -> Vec<(String, ConsistencyCounts)> {
        self.pairs
            .iter()
            .map(|p| (p.base.spec.pair_id.clone(), p.counts))
            .collect()
    }

    fn totals(&self) -> ConsistencyCounts {
        self.pairs.iter().fold(ConsistencyCounts::default(), |acc, p| {
            ConsistencyCounts::new(
                acc.alpha + p.counts.alpha,
                acc.beta + p.counts.beta,
                acc.gamma + p.counts.gamma,
            )
        })
    }

    pub fn view(&self) -> SessionView {
        SessionView {
            session_id: self.meta.session_id.clone(),
            manifest_ref: self.meta.manifest_ref.clone(),
            manifest_digest: self.meta.manifest_digest.clone(),
            annotator: self.meta.annotator.clone(),
            status: self.meta.status,
            created_at: self.meta.created_at,
            finalized_at: self.meta.finalized_at,
            cursor: self.cursor,
            pair_count: self.pairs.len(),
            decisions: self.log.len(),
            last_sequence: self.last_sequence(),
            totals: self.totals(),
            pairs: self
                .pairs
                .iter()
                .map(|p| PairSummary {
                    pair_id: p.base.spec.pair_id.clone(),
                    counts: p.counts,
                    decisions: p.decisions.len(),
                })
                .collect(),
        }
    }

    pub fn pair_payload(&self, pair_id: &str) -> Result<PairPayload, AnnotateError> {
        let i = self.pair_index(pair_id)?;
        let p = &self.pairs[i];
        let b = &p.base;
        let expected = b
            .expected
            .iter()
            .map(|m| {
                let partner = p.assignment.partner_of_expected(&m.id).map(str::to_string);
                let class = if partner.is_some() {
                    Classification::Matched
                } else {
                    Classification::Missing
                };
                marker(m, class, partner)
            })
            .collect();
        let generated = p
            .edited
            .iter()
            .map(|m| {
                let partner = p.assignment.partner_of_generated(&m.id).map(str::to_string);
                let class = if partner.is_some() {
                    Classification::Matched
                } else {
                    Classification::Spurious
                };
                marker(m, class, partner)
            })
            .collect();
        let image = |r: &str, path: &PathBuf| ImageRef {
            ref_: r.to_string(),
            path: path.clone(),
        };
        Ok(PairPayload {
            session_id: self.meta.session_id.clone(),
            pair_id: pair_id.to_string(),
            index: i,
            status: self.meta.status,
            style_label: b.spec.style_label.clone(),
            quality_class: b.quality_class,
            frame: [b.expected.image_width, b.expected.image_height],
            images: PairImages {
                exemplar: image(&b.spec.exemplar_image_ref, &b.image_paths.exemplar),
                ridge_guidance: b
                    .spec
                    .ridge_guidance_ref
                    .as_deref()
                    .zip(b.image_paths.ridge_guidance.as_ref())
                    .map(|(r, path)| image(r, path)),
                generated: image(&b.spec.generated_image_ref, &b.image_paths.generated),
            },
            ground_truth: b.gt.minutiae.clone(),
            expected,
            generated,
            counts: p.counts,
            rates: error_rates(p.counts),
            overrides: p.decisions.clone(),
            legend: [
                Classification::Matched,
                Classification::Missing,
                Classification::Spurious,
            ]
            .into_iter()
            .map(|c| (c, c.color()))
            .collect(),
        })
    }

    pub fn export(&self, finalized_at: DateTime<Utc>, log_digest: String) -> ExportDocument {
        let pairs: Vec<ExportPair> = self
            .pairs
            .iter()
            .map(|p| ExportPair {
                pair_id: p.base.spec.pair_id.clone(),
                style_label: p.base.spec.style_label.clone(),
                quality_class: p.base.quality_class,
                counts: p.counts,
                rates: error_rates(p.counts),
                overrides_applied: p.decisions.len(),
            })
            .collect();
        let records: Vec<LocalRecord> = pairs
            .iter()
            .map(|p| LocalRecord {
                pair_id: p.pair_id.clone(),
                rates: p.rates,
                quality_class: p.quality_class,
            })
            .collect();
        ExportDocument {
            session_id: self.meta.session_id.clone(),
            manifest_ref: self.meta.manifest_ref.clone(),
            manifest_digest: self.meta.manifest_digest.clone(),
            annotator: self.meta.annotator.clone(),
            finalized_at,
            decisions: self.log.len(),
            log_digest,
            tolerance: self.tolerance,
            totals: self.totals(),
            local: aggregate_local(&records),
            pairs,
        }
    }
}

fn marker(m: &Minutia, classification: Classification, partner_id: Option<String>) -> Marker {
    Marker {
        id: m.id.clone(),
        x: m.x,
        y: m.y,
        theta: m.theta,
        kind: m.kind,
        classification,
        color: classification.color(),
        partner_id,
    }
}
