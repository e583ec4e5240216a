use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{sha256_hex, PipelineError};
use crate::consistency::MatchTolerance;
use crate::hallucination::{DEFAULT_BOOTSTRAP_RESAMPLES, DEFAULT_IOU_THRESHOLD};
use crate::metrics::{ChannelRanges, QualityBinConfig, QualityClass, DEFAULT_TMR_THRESHOLD};

pub const MANIFEST_VERSION: u32 = 1;

fn default_version() -> u32 {
    MANIFEST_VERSION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    pub iou: f64,
    pub tmr: f64,
    pub skip_degenerate: bool,
    pub bootstrap_resamples: usize,
    pub score_bin_width: f64,
    pub quality_bin_width: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            iou: DEFAULT_IOU_THRESHOLD,
            tmr: DEFAULT_TMR_THRESHOLD,
            skip_degenerate: false,
            bootstrap_resamples: DEFAULT_BOOTSTRAP_RESAMPLES,
            score_bin_width: 10.0,
            quality_bin_width: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSpec {
    pub pair_id: String,
    pub exemplar_image_ref: String,
    pub gt_minutiae_ref: String,
    pub gt_mask_ref: String,
    /// Absent means the identity placement on the ground-truth frame.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub placement_ref: Option<String>,
    pub generated_image_ref: String,
    pub generated_minutiae_ref: String,
    pub generated_mask_ref: String,
    pub style_label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality_class: Option<QualityClass>,
    /// Binned with the manifest's quality config when no class is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ridge_guidance_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub override_log_ref: Option<String>,
}

impl PairSpec {
    /// Every file reference with its field name, in a fixed order.
    pub fn refs(&self) -> Vec<(&'static str, &str)> {
        let mut out = vec![
            ("exemplar_image_ref", self.exemplar_image_ref.as_str()),
            ("gt_minutiae_ref", self.gt_minutiae_ref.as_str()),
            ("gt_mask_ref", self.gt_mask_ref.as_str()),
        ];
        if let Some(p) = &self.placement_ref {
            out.push(("placement_ref", p));
        }
        out.push(("generated_image_ref", &self.generated_image_ref));
        out.push(("generated_minutiae_ref", &self.generated_minutiae_ref));
        out.push(("generated_mask_ref", &self.generated_mask_ref));
        if let Some(p) = &self.ridge_guidance_ref {
            out.push(("ridge_guidance_ref", p));
        }
        if let Some(p) = &self.override_log_ref {
            out.push(("override_log_ref", p));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationManifest {
    #[serde(default = "default_version")]
    pub version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerance: MatchTolerance,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub quality_bins: QualityBinConfig,
    /// Generation prompt, recorded as metadata only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
    pub pairs: Vec<PairSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality_ref: Option<String>,
    /// Declared LFIQA range; NFIQ2 is always [0, 100].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lfiqa_range: Option<[i64; 2]>,
}

impl EvaluationManifest {
    pub fn channel_ranges(&self) -> ChannelRanges {
        let mut r = ChannelRanges::default();
        if let Some([lo, hi]) = self.lfiqa_range {
            r.lfiqa = (lo, hi);
        }
        r
    }

    /// Manifest-level checks whose failure makes the whole run meaningless.
    pub fn check(&self) -> Result<(), PipelineError> {
        if self.version != MANIFEST_VERSION {
            return Err(PipelineError::UnsupportedVersion(self.version));
        }
        self.tolerance.validate()?;
        QualityBinConfig::new(self.quality_bins.mu, self.quality_bins.sigma)?;
        let t = &self.thresholds;
        if !(0.0..=1.0).contains(&t.iou) {
            return Err(PipelineError::InvalidManifest(format!("iou threshold {} outside [0, 1]", t.iou)));
        }
        if !t.tmr.is_finite() {
            return Err(PipelineError::InvalidManifest("tmr threshold must be finite".into()));
        }
        for w in [t.score_bin_width, t.quality_bin_width] {
            if !(w > 0.0 && w.is_finite()) {
                return Err(PipelineError::InvalidManifest(format!("bin width must be positive, got {w}")));
            }
        }
        if let Some([lo, hi]) = self.lfiqa_range {
            if lo > hi {
                return Err(PipelineError::InvalidManifest(format!("empty lfiqa range [{lo}, {hi}]")));
            }
        }
        let mut seen = BTreeSet::new();
        for p in &self.pairs {
            if p.pair_id.is_empty() {
                return Err(PipelineError::InvalidManifest("empty pair id".into()));
            }
            if p.style_label.trim().is_empty() {
                return Err(PipelineError::InvalidManifest(format!("pair {} has an empty style label", p.pair_id)));
            }
            if !seen.insert(p.pair_id.as_str()) {
                return Err(PipelineError::DuplicatePairId(p.pair_id.clone()));
            }
        }
        Ok(())
    }
}

/// A parsed manifest together with where it came from.
#[derive(Debug, Clone)]
pub struct LoadedManifest {
    pub manifest: EvaluationManifest,
    pub path: PathBuf,
    pub base_dir: PathBuf,
    pub digest: String,
}

impl LoadedManifest {
    pub fn from_parts(manifest: EvaluationManifest, path: PathBuf, raw: &[u8]) -> Self {
        let base_dir = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        LoadedManifest {
            manifest,
            path,
            base_dir,
            digest: sha256_hex(raw),
        }
    }

    /// Resolves a reference relative to the manifest directory.
    pub fn resolve(&self, r: &str) -> PathBuf {
        let p = Path::new(r);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

/// Parses a manifest file; structural problems are reported by
/// [`EvaluationManifest::check`] or [`super::validate_manifest`].
pub fn load_manifest(path: &Path) -> Result<LoadedManifest, PipelineError> {
    let raw = std::fs::read(path).map_err(|e| PipelineError::file(path, e))?;
    let manifest: EvaluationManifest = serde_json::from_slice(&raw)?;
    Ok(LoadedManifest::from_parts(manifest, path.to_path_buf(), &raw))
}
