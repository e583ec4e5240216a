//! Human corrections applied on top of the automatic assignment.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::geometry::{Minutia, MinutiaeSet, Provenance};

use super::{Assignment, ConsistencyError, MatchedPair};

/// How a human-added minutia is counted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Resolution {
    /// Also present in the exemplar: paired with `expected_id`.
    Matched { expected_id: String },
    Spurious,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum OverrideAction {
    /// Force `expected_id` and `generated_id` into a pair; any previous
    /// partners become unmatched.
    ConfirmMatch {
        expected_id: String,
        generated_id: String,
    },
    /// The expected minutia is absent from the generated print.
    MarkMissing { expected_id: String },
    /// The generated minutia has no counterpart in the exemplar.
    MarkSpurious { generated_id: String },
    /// A minutia visible in the generated print that the extractor missed.
    AddMinutia {
        minutia: Minutia,
        resolved_as: Resolution,
    },
    /// An extractor artifact with no visual evidence; removed before counting.
    DeleteGeneratedMinutia { generated_id: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationOverride {
    #[serde(flatten)]
    pub action: OverrideAction,
    pub annotator: String,
    pub timestamp: DateTime<Utc>,
}

/// An id in either the expected or the generated set.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "set", content = "id", rename_all = "snake_case")]
pub enum TargetId {
    Expected(String),
    Generated(String),
}

impl std::fmt::Display for TargetId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TargetId::Expected(id) => write!(f, "expected:{id}"),
            TargetId::Generated(id) => write!(f, "generated:{id}"),
        }
    }
}

impl OverrideAction {
    pub fn targets(&self) -> Vec<TargetId> {
        match self {
            OverrideAction::ConfirmMatch {
                expected_id,
                generated_id,
            } => vec![
                TargetId::Expected(expected_id.clone()),
                TargetId::Generated(generated_id.clone()),
            ],
            OverrideAction::MarkMissing { expected_id } => {
                vec![TargetId::Expected(expected_id.clone())]
            }
            OverrideAction::MarkSpurious { generated_id }
            | OverrideAction::DeleteGeneratedMinutia { generated_id } => {
                vec![TargetId::Generated(generated_id.clone())]
            }
            OverrideAction::AddMinutia {
                minutia,
                resolved_as,
            } => {
                let mut t = vec![TargetId::Generated(minutia.id.clone())];
                if let Resolution::Matched { expected_id } = resolved_as {
                    t.push(TargetId::Expected(expected_id.clone()));
                }
                t
            }
        }
    }
}

/// Rejects a batch in which two different actions touch the same id.
pub fn check_conflicts(overrides: &[AnnotationOverride]) -> Result<(), ConsistencyError> {
    let mut claimed: BTreeMap<TargetId, &OverrideAction> = BTreeMap::new();
    for o in overrides {
        for t in o.action.targets() {
            match claimed.get(&t) {
                Some(prev) if **prev != o.action => {
                    return Err(ConsistencyError::ConflictingOverride(t.to_string()))
                }
                Some(_) => {}
                None => {
                    claimed.insert(t, &o.action);
                }
            }
        }
    }
    Ok(())
}

struct State {
    expected: BTreeMap<String, [f64; 2]>,
    generated: Vec<Minutia>,
    partner_of_exp: BTreeMap<String, String>,
    partner_of_gen: BTreeMap<String, String>,
}

impl State {
    fn gen_position(&self, id: &str) -> Option<[f64; 2]> {
        self.generated.iter().find(|m| m.id == id).map(Minutia::position)
    }

    fn require_expected(&self, id: &str) -> Result<(), ConsistencyError> {
        if self.expected.contains_key(id) {
            Ok(())
        } else {
            Err(ConsistencyError::UnknownId(TargetId::Expected(id.into()).to_string()))
        }
    }

    fn require_generated(&self, id: &str) -> Result<(), ConsistencyError> {
        if self.gen_position(id).is_some() {
            Ok(())
        } else {
            Err(ConsistencyError::UnknownId(TargetId::Generated(id.into()).to_string()))
        }
    }

    fn unpair_expected(&mut self, e: &str) {
        if let Some(g) = self.partner_of_exp.remove(e) {
            self.partner_of_gen.remove(&g);
        }
    }

    fn unpair_generated(&mut self, g: &str) {
        if let Some(e) = self.partner_of_gen.remove(g) {
            self.partner_of_exp.remove(&e);
        }
    }

    fn pair(&mut self, e: &str, g: &str) {
        self.unpair_expected(e);
        self.unpair_generated(g);
        self.partner_of_exp.insert(e.into(), g.into());
        self.partner_of_gen.insert(g.into(), e.into());
    }

    fn apply(&mut self, action: &OverrideAction, frame: (u32, u32)) -> Result<(), ConsistencyError> {
        match action {
            OverrideAction::ConfirmMatch {
                expected_id,
                generated_id,
            } => {
                self.require_expected(expected_id)?;
                self.require_generated(generated_id)?;
                self.pair(expected_id, generated_id);
            }
            OverrideAction::MarkMissing { expected_id } => {
                self.require_expected(expected_id)?;
                self.unpair_expected(expected_id);
            }
            OverrideAction::MarkSpurious { generated_id } => {
                self.require_generated(generated_id)?;
                self.unpair_generated(generated_id);
            }
            OverrideAction::AddMinutia {
                minutia,
                resolved_as,
            } => {
                if self.gen_position(&minutia.id).is_some() {
                    return Err(ConsistencyError::DuplicateId(minutia.id.clone()));
                }
                let (w, h) = frame;
                let inside = minutia.x.is_finite()
                    && minutia.y.is_finite()
                    && minutia.x >= 0.0
                    && minutia.y >= 0.0
                    && minutia.x < f64::from(w)
                    && minutia.y < f64::from(h);
                if !inside {
                    return Err(ConsistencyError::InvalidOverride(format!(
                        "added minutia {:?} lies outside the {w}x{h} image",
                        minutia.id
                    )));
                }
                if let Resolution::Matched { expected_id } = resolved_as {
                    self.require_expected(expected_id)?;
                }
                let mut m = minutia.clone();
                m.theta = crate::geometry::normalize_degrees(m.theta);
                self.generated.push(m);
                if let Resolution::Matched { expected_id } = resolved_as {
                    self.pair(expected_id, &minutia.id);
                }
            }
            OverrideAction::DeleteGeneratedMinutia { generated_id } => {
                self.require_generated(generated_id)?;
                self.unpair_generated(generated_id);
                self.generated.retain(|m| &m.id != generated_id);
            }
        }
        Ok(())
    }
}

/// Applies human overrides in timestamp order (stable for equal timestamps).
///
/// Returns the corrected assignment and the corrected generated set, whose
/// provenance becomes `HumanEdited` when at least one override was applied.
pub fn apply_overrides(
    assignment: &Assignment,
    expected: &MinutiaeSet,
    generated: &MinutiaeSet,
    overrides: &[AnnotationOverride],
) -> Result<(Assignment, MinutiaeSet), ConsistencyError> {
    if overrides.is_empty() {
        return Ok((assignment.clone(), generated.clone()));
    }
    check_conflicts(overrides)?;

    let mut state = State {
        expected: expected.iter().map(|m| (m.id.clone(), m.position())).collect(),
        generated: generated.minutiae.clone(),
        partner_of_exp: BTreeMap::new(),
        partner_of_gen: BTreeMap::new(),
    };
    for p in &assignment.pairs {
        state.require_expected(&p.expected_id)?;
        state.require_generated(&p.generated_id)?;
        state.pair(&p.expected_id, &p.generated_id);
    }

    let mut ordered: Vec<&AnnotationOverride> = overrides.iter().collect();
    ordered.sort_by_key(|o| o.timestamp);
    let mut applied: Vec<&OverrideAction> = Vec::new();
    let frame = (generated.image_width, generated.image_height);
    for o in ordered {
        // identical repeats are idempotent
        if applied.contains(&&o.action) {
            continue;
        }
        state.apply(&o.action, frame)?;
        applied.push(&o.action);
    }

    let mut out = Assignment::default();
    for (e, g) in &state.partner_of_exp {
        let ep = state.expected[e];
        let gp = state.gen_position(g).expect("paired generated id exists");
        out.pairs.push(MatchedPair {
            expected_id: e.clone(),
            generated_id: g.clone(),
            dx: gp[0] - ep[0],
            dy: gp[1] - ep[1],
        });
    }
    out.unmatched_expected = state
        .expected
        .keys()
        .filter(|e| !state.partner_of_exp.contains_key(*e))
        .cloned()
        .collect();
    let mut unmatched_gen: BTreeSet<String> = BTreeSet::new();
    for m in &state.generated {
        if !state.partner_of_gen.contains_key(&m.id) {
            unmatched_gen.insert(m.id.clone());
        }
    }
    out.unmatched_generated = unmatched_gen.into_iter().collect();

    let edited = MinutiaeSet {
        image_width: generated.image_width,
        image_height: generated.image_height,
        provenance: Provenance::HumanEdited,
        minutiae: state.generated,
    };
    Ok((out, edited))
}
