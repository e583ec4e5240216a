//! HTTP service backing manual review of automatic minutiae classifications.
//!
//! A session is opened against an evaluation manifest. Every pair starts with
//! the automatic assignment; examiners post overrides that are appended to a
//! per-session log, and finalizing writes corrected counts and rates. State is
//! always recomputable from the manifest and the log, which is also the
//! crash-recovery path.

mod api;
mod error;
mod session;
mod store;

pub use api::{router, serve, status_of};
pub use error::AnnotateError;
pub use session::{
    Classification, DecisionRequest, DecisionResponse, ExportDocument, ExportPair, ImageRef, Marker, MarkerColor,
    OverrideInput, PairImages, PairPayload, PairSummary, Session, SessionMeta, SessionStatus, SessionView,
};
pub use store::{parse_decision_log, replay_session_dir, CreateSession, FinalizeResponse, SessionStore};
