use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::LoadedManifest;
use crate::geometry::Provenance;
use crate::io::{read_mask, read_minutiae, read_placement};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationIssue {
    /// Pair id, or `None` for manifest-level problems.
    pub pair_id: Option<String>,
    pub field: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub pairs: usize,
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }

    fn push(&mut self, pair_id: Option<&str>, field: &str, message: impl Into<String>) {
        self.issues.push(ValidationIssue {
            pair_id: pair_id.map(str::to_string),
            field: field.to_string(),
            message: message.into(),
        });
    }
}

/// Checks references, file formats, frame dimensions and id uniqueness.
pub fn validate_manifest(loaded: &LoadedManifest) -> ValidationReport {
    let m = &loaded.manifest;
    let mut report = ValidationReport {
        pairs: m.pairs.len(),
        issues: Vec::new(),
    };
    if let Err(e) = m.check() {
        report.push(None, "manifest", e.to_string());
    }
    if m.pairs.is_empty() {
        report.push(None, "pairs", "manifest lists no pairs");
    }
    for (field, r) in [("scores_ref", &m.scores_ref), ("quality_ref", &m.quality_ref)] {
        if let Some(r) = r {
            if !loaded.resolve(r).is_file() {
                report.push(None, field, format!("missing file {r}"));
            }
        }
    }

    let mut seen = BTreeSet::new();
    for p in &m.pairs {
        let id = Some(p.pair_id.as_str());
        if !seen.insert(p.pair_id.as_str()) {
            report.push(id, "pair_id", "duplicate pair id");
        }
        let mut missing = false;
        for (field, r) in p.refs() {
            if !loaded.resolve(r).is_file() {
                report.push(id, field, format!("missing file {r}"));
                missing = true;
            }
        }
        if missing {
            continue;
        }
        let gt = read_minutiae(&loaded.resolve(&p.gt_minutiae_ref), Provenance::GroundTruth);
        let gt_mask = read_mask(&loaded.resolve(&p.gt_mask_ref));
        let gen = read_minutiae(&loaded.resolve(&p.generated_minutiae_ref), Provenance::Generated);
        let gen_mask = read_mask(&loaded.resolve(&p.generated_mask_ref));
        let placement = p.placement_ref.as_ref().map(|r| read_placement(&loaded.resolve(r)));
        for (field, err) in [
            ("gt_minutiae_ref", gt.as_ref().err()),
            ("gt_mask_ref", gt_mask.as_ref().err()),
            ("generated_minutiae_ref", gen.as_ref().err()),
            ("generated_mask_ref", gen_mask.as_ref().err()),
        ] {
            if let Some(e) = err {
                report.push(id, field, e.to_string());
            }
        }
        if let Some(Err(e)) = &placement {
            report.push(id, "placement_ref", e.to_string());
        }
        let (Ok(gt), Ok(gt_mask), Ok(gen), Ok(gen_mask)) = (gt, gt_mask, gen, gen_mask) else {
            continue;
        };
        if (gt.image_width, gt.image_height) != gt_mask.dimensions() {
            report.push(
                id,
                "gt_mask_ref",
                format!(
                    "ground-truth minutiae frame {}x{} differs from mask {}x{}",
                    gt.image_width,
                    gt.image_height,
                    gt_mask.width(),
                    gt_mask.height()
                ),
            );
        }
        let frame = match &placement {
            Some(Ok(t)) => t.frame(),
            Some(Err(_)) => continue,
            None => gt_mask.dimensions(),
        };
        if gen_mask.dimensions() != frame {
            report.push(
                id,
                "generated_mask_ref",
                format!(
                    "generated mask {}x{} differs from the expected frame {}x{}",
                    gen_mask.width(),
                    gen_mask.height(),
                    frame.0,
                    frame.1
                ),
            );
        }
        if (gen.image_width, gen.image_height) != frame {
            report.push(
                id,
                "generated_minutiae_ref",
                format!(
                    "generated minutiae frame {}x{} differs from the expected frame {}x{}",
                    gen.image_width, gen.image_height, frame.0, frame.1
                ),
            );
        }
    }
    report
}
