//! Identity-consistency evaluation for exemplar-to-impression fingerprint
//! generators.
//!
//! The crate propagates known placement transforms to ground-truth minutiae
//! and masks, matches the result against what a generator produced, and
//! reports local (minutiae) and global (foreground hallucination) errors. It
//! also manages a latent style bank of precomputed embeddings and the
//! verification/quality analytics used to validate generated impressions.

pub mod geometry;
pub mod hallucination;
pub mod io;
pub mod consistency;
pub mod metrics;
pub mod pipeline;
pub mod report;
pub mod stylebank;
