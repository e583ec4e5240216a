//! Verification and quality analytics: TMR/FMR at a fixed threshold,
//! genuine/impostor score histograms, μ±σ quality binning, per-style quality
//! scatter and histogram overlap.

mod ingest;
mod verification;

pub use ingest::{
    group_scores, parse_quality_csv, parse_scores_csv, read_quality_csv, read_scores_csv,
    ChannelRanges, ScoreLabel, ScoreRow,
};
pub use verification::{
    fmr_at_threshold, render_tmr_table, score_distributions, tmr_at_threshold, tmr_table,
    HistogramBin, HistogramPair, MatchScoreSet, Protocol, TmrRow, TmrTable, DEFAULT_TMR_THRESHOLD,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no genuine scores")]
    EmptyGenuine,
    #[error("no impostor scores")]
    EmptyImpostor,
    #[error("empty input")]
    EmptyInput,
    #[error("bin width must be positive, got {0}")]
    InvalidBinWidth(f64),
    #[error("sigma must be positive, got {0}")]
    InvalidSigma(f64),
    #[error("non-finite score")]
    NonFiniteScore,
    #[error("quality {q} outside [{min}, {max}] for {channel:?}")]
    QualityOutOfRange {
        q: i64,
        min: i64,
        max: i64,
        channel: QualityChannel,
    },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// Input-quality class of an exemplar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QualityClass {
    High,
    Average,
    Low,
}

impl QualityClass {
    pub fn label(self) -> &'static str {
        match self {
            QualityClass::High => "High",
            QualityClass::Average => "Average",
            QualityClass::Low => "Low",
        }
    }
}

/// Bin boundaries `μ ± σ` for quality classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityBinConfig {
    pub mu: f64,
    pub sigma: f64,
}

impl Default for QualityBinConfig {
    fn default() -> Self {
        QualityBinConfig {
            mu: 47.67,
            sigma: 23.16,
        }
    }
}

impl QualityBinConfig {
    pub fn new(mu: f64, sigma: f64) -> Result<Self, MetricsError> {
        if !(sigma > 0.0 && sigma.is_finite() && mu.is_finite()) {
            return Err(MetricsError::InvalidSigma(sigma));
        }
        Ok(QualityBinConfig { mu, sigma })
    }
}

/// High above `μ+σ`, Low below `μ−σ`, Average on the closed middle interval.
pub fn quality_bin(q: f64, cfg: &QualityBinConfig) -> QualityClass {
    if q > cfg.mu + cfg.sigma {
        QualityClass::High
    } else if q < cfg.mu - cfg.sigma {
        QualityClass::Low
    } else {
        QualityClass::Average
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QualityChannel {
    Nfiq2,
    Lfiqa,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Real,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualityRecord {
    pub image_ref: String,
    pub q: i64,
    pub channel: QualityChannel,
    pub origin: Origin,
    pub style_label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub style_label: String,
    pub avg_real: f64,
    pub avg_synthetic: f64,
    /// Drives the marker size: number of real references for the style.
    pub n_real: usize,
    pub n_synthetic: usize,
    /// `avg_synthetic − avg_real`; zero lies on the diagonal.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterReport {
    pub channel: QualityChannel,
    pub rows: Vec<ScatterRow>,
    /// Styles lacking either real or synthetic records.
    pub incomplete: Vec<String>,
}

/// Per-style average quality of real vs synthetic prints on one channel.
///
/// Sums are accumulated as integers, so the result does not depend on record
/// order.
pub fn per_style_quality_scatter(records: &[QualityRecord], channel: QualityChannel) -> ScatterReport {
    #[derive(Default)]
    struct Acc {
        real: (i64, usize),
        syn: (i64, usize),
    }
    let mut by_style: BTreeMap<&str, Acc> = BTreeMap::new();
    for r in records.iter().filter(|r| r.channel == channel) {
        let acc = by_style.entry(r.style_label.as_str()).or_default();
        let slot = match r.origin {
            Origin::Real => &mut acc.real,
            Origin::Synthetic => &mut acc.syn,
        };
        slot.0 += r.q;
        slot.1 += 1;
    }
    let mut rows = Vec::new();
    let mut incomplete = Vec::new();
    for (style, acc) in by_style {
        if acc.real.1 == 0 || acc.syn.1 == 0 {
            incomplete.push(style.to_string());
            continue;
        }
        let avg_real = acc.real.0 as f64 / acc.real.1 as f64;
        let avg_synthetic = acc.syn.0 as f64 / acc.syn.1 as f64;
        rows.push(ScatterRow {
            style_label: style.to_string(),
            avg_real,
            avg_synthetic,
            n_real: acc.real.1,
            n_synthetic: acc.syn.1,
            delta: avg_synthetic - avg_real,
        });
    }
    ScatterReport {
        channel,
        rows,
        incomplete,
    }
}

/// Bin index under left-closed, right-open bins anchored at 0.
pub(crate) fn bin_index(value: f64, width: f64) -> i64 {
    (value / width).floor() as i64
}

/// Histogram normalised to unit mass, keyed by bin index.
pub fn normalized_histogram(values: &[f64], bin_width: f64) -> Result<BTreeMap<i64, f64>, MetricsError> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(MetricsError::InvalidBinWidth(bin_width));
    }
    if values.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(MetricsError::NonFiniteScore);
    }
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(bin_index(*v, bin_width)).or_default() += 1;
    }
    let n = values.len() as f64;
    Ok(counts.into_iter().map(|(k, c)| (k, c as f64 / n)).collect())
}

/// Overlap coefficient `Σ_b min(p_real(b), p_syn(b))` of the two normalised
/// histograms.
pub fn quality_histogram_overlap(real_q: &[f64], syn_q: &[f64], bin_width: f64) -> Result<f64, MetricsError> {
    let a = normalized_histogram(real_q, bin_width)?;
    let b = normalized_histogram(syn_q, bin_width)?;
    let overlap = a
        .iter()
        .filter_map(|(k, pa)| b.get(k).map(|pb| pa.min(*pb)))
        .sum::<f64>();
    Ok(overlap.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapRow {
    pub style_label: String,
    pub overlap: f64,
    pub n_real: usize,
    pub n_synthetic: usize,
}

/// Histogram overlap per style for one channel; styles missing either side
/// are skipped.
pub fn overlap_by_style(
    records: &[QualityRecord],
    channel: QualityChannel,
    bin_width: f64,
) -> Result<Vec<OverlapRow>, MetricsError> {
    let mut by_style: BTreeMap<&str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in records.iter().filter(|r| r.channel == channel) {
        let e = by_style.entry(r.style_label.as_str()).or_default();
        match r.origin {
            Origin::Real => e.0.push(r.q as f64),
            Origin::Synthetic => e.1.push(r.q as f64),
        }
    }
    let mut rows = Vec::new();
    for (style, (real, syn)) in by_style {
        if real.is_empty() || syn.is_empty() {
            continue;
        }
        rows.push(OverlapRow {
            style_label: style.to_string(),
            overlap: quality_histogram_overlap(&real, &syn, bin_width)?,
            n_real: real.len(),
            n_synthetic: syn.len(),
        });
    }
    Ok(rows)
}
