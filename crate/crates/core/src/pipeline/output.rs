use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::evaluate::{PairResult, SkippedPair};
use super::{PipelineError, Thresholds};
use crate::consistency::{render_local_table, LocalReport, MatchTolerance};
use crate::hallucination::{render_style_table, HallucinationReport};
use crate::metrics::{
    render_tmr_table, HistogramPair, OverlapRow, Protocol, QualityBinConfig, ScatterReport, TmrTable,
};
use crate::report::format_fixed_half_up;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolkitInfo {
    pub name: String,
    pub version: String,
}

impl ToolkitInfo {
    pub fn current() -> Self {
        ToolkitInfo {
            name: "printlab".into(),
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IouSummary {
    pub n: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub degenerate: usize,
}

impl IouSummary {
    pub fn from_pairs(pairs: &[PairResult]) -> Option<IouSummary> {
        if pairs.is_empty() {
            return None;
        }
        let ious: Vec<f64> = pairs.iter().map(|p| p.iou.iou).collect();
        Some(IouSummary {
            n: ious.len(),
            mean: ious.iter().sum::<f64>() / ious.len() as f64,
            min: ious.iter().copied().fold(f64::INFINITY, f64::min),
            max: ious.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            degenerate: pairs.iter().filter(|p| p.iou.degenerate).count(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FmrEntry {
    pub style_label: String,
    pub protocol: Protocol,
    pub fmr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationSection {
    pub threshold: f64,
    pub tmr: TmrTable,
    pub fmr: Vec<FmrEntry>,
    pub distributions: Vec<HistogramPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualitySection {
    pub bin_width: f64,
    pub nfiq2: ScatterReport,
    pub lfiqa: ScatterReport,
    pub nfiq2_overlap: Vec<OverlapRow>,
    pub lfiqa_overlap: Vec<OverlapRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub toolkit: ToolkitInfo,
    pub manifest_digest: String,
    pub seed: u64,
    pub tolerance: MatchTolerance,
    pub thresholds: Thresholds,
    pub quality_bins: QualityBinConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
    /// SHA-256 of every input file, keyed by manifest reference.
    pub input_digests: BTreeMap<String, String>,
    /// Pairs per input-quality class.
    pub quality_split: BTreeMap<String, usize>,
    pub pairs: Vec<PairResult>,
    pub skipped: Vec<SkippedPair>,
    pub local: LocalReport,
    pub global: Vec<HallucinationReport>,
    pub iou_summary: Option<IouSummary>,
    pub verification: Option<VerificationSection>,
    pub quality: Option<QualitySection>,
}

impl EvaluationReport {
    pub fn to_json(&self) -> Result<String, PipelineError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// Per-pair table: id, style, class, counts, rates (as fractions) and IoU.
pub fn render_pairs_csv(report: &EvaluationReport) -> String {
    let mut out = String::from("pair_id,style_label,quality_class,alpha,beta,gamma,removal,addition,iou,hallucination_score\n");
    for p in &report.pairs {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            csv_field(&p.pair_id),
            csv_field(&p.style_label),
            p.quality_class.map_or("", |c| c.label()),
            p.counts.alpha,
            p.counts.beta,
            p.counts.gamma,
            p.rates.removal,
            p.rates.addition,
            p.iou.iou,
            p.iou.hallucination_score
        );
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn render_summary(report: &EvaluationReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} {}", report.toolkit.name, report.toolkit.version);
    let _ = writeln!(s, "manifest sha256 {}", report.manifest_digest);
    let _ = writeln!(s, "seed {}", report.seed);
    let _ = writeln!(s, "evaluated {} skipped {}", report.pairs.len(), report.skipped.len());
    for sk in &report.skipped {
        let _ = writeln!(s, "  skipped {}: {}", sk.pair_id, sk.reason);
    }
    if let Some(iou) = &report.iou_summary {
        let _ = writeln!(
            s,
            "IoU mean {} min {} max {}",
            format_fixed_half_up(iou.mean, 4),
            format_fixed_half_up(iou.min, 4),
            format_fixed_half_up(iou.max, 4)
        );
    }
    s
}

/// Writes `report.json`, `summary.txt`, `local.txt`, `global.txt`,
/// `pairs.csv` and, with scores, `tmr.txt` into `dir`.
pub fn write_outputs(report: &EvaluationReport, dir: &Path) -> Result<(), PipelineError> {
    std::fs::create_dir_all(dir).map_err(|e| PipelineError::file(dir, e))?;
    let write = |name: &str, body: String| {
        let p = dir.join(name);
        std::fs::write(&p, body).map_err(|e| PipelineError::file(&p, e))
    };
    write("report.json", report.to_json()?)?;
    write("summary.txt", render_summary(report))?;
    write("local.txt", render_local_table(&report.local))?;
    write("global.txt", render_style_table(&report.global))?;
    write("pairs.csv", render_pairs_csv(report))?;
    if let Some(v) = &report.verification {
        write("tmr.txt", render_tmr_table(&v.tmr))?;
    }
    Ok(())
}
