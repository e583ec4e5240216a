use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{bin_index, MetricsError};
use crate::report::{format_fixed_half_up, TextTable};

pub const DEFAULT_TMR_THRESHOLD: f64 = 48.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    #[serde(alias = "real", alias = "Real")]
    RealPair,
    #[serde(alias = "synthetic", alias = "Synthetic")]
    SyntheticPair,
    #[serde(alias = "hybrid", alias = "Hybrid")]
    HybridPair,
}

impl Protocol {
    pub const ALL: [Protocol; 3] = [Protocol::RealPair, Protocol::SyntheticPair, Protocol::HybridPair];

    pub fn label(self) -> &'static str {
        match self {
            Protocol::RealPair => "Real",
            Protocol::SyntheticPair => "Synthetic",
            Protocol::HybridPair => "Hybrid",
        }
    }

    pub fn parse(s: &str) -> Option<Protocol> {
        match s.trim().to_ascii_lowercase().replace(['-', ' '], "_").as_str() {
            "real" | "real_pair" | "realpair" => Some(Protocol::RealPair),
            "synthetic" | "synthetic_pair" | "syntheticpair" => Some(Protocol::SyntheticPair),
            "hybrid" | "hybrid_pair" | "hybridpair" => Some(Protocol::HybridPair),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchScoreSet {
    pub genuine: Vec<f64>,
    pub impostor: Vec<f64>,
    pub protocol: Protocol,
    pub style_label: String,
}

impl MatchScoreSet {
    pub fn new(style_label: impl Into<String>, protocol: Protocol) -> Self {
        MatchScoreSet {
            genuine: Vec::new(),
            impostor: Vec::new(),
            protocol,
            style_label: style_label.into(),
        }
    }

    pub fn validate(&self) -> Result<(), MetricsError> {
        if self.genuine.iter().chain(&self.impostor).any(|s| !s.is_finite()) {
            return Err(MetricsError::NonFiniteScore);
        }
        Ok(())
    }
}

fn rate_at(scores: &[f64], threshold: f64) -> f64 {
    let hits = scores.iter().filter(|s| **s >= threshold).count();
    100.0 * hits as f64 / scores.len() as f64
}

/// Percentage of genuine scores at or above `threshold`.
pub fn tmr_at_threshold(s: &MatchScoreSet, threshold: f64) -> Result<f64, MetricsError> {
    s.validate()?;
    if s.genuine.is_empty() {
        return Err(MetricsError::EmptyGenuine);
    }
    Ok(rate_at(&s.genuine, threshold))
}

/// Percentage of impostor scores at or above `threshold`.
pub fn fmr_at_threshold(s: &MatchScoreSet, threshold: f64) -> Result<f64, MetricsError> {
    s.validate()?;
    if s.impostor.is_empty() {
        return Err(MetricsError::EmptyImpostor);
    }
    Ok(rate_at(&s.impostor, threshold))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub genuine: u64,
    pub impostor: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramPair {
    pub style_label: String,
    pub protocol: Protocol,
    pub bin_width: f64,
    /// Contiguous bins spanning both distributions.
    pub bins: Vec<HistogramBin>,
    pub n_genuine: usize,
    pub n_impostor: usize,
    pub genuine_empty: bool,
    pub impostor_empty: bool,
}

/// Genuine and impostor histograms over a shared set of `[k·w, (k+1)·w)` bins.
pub fn score_distributions(s: &MatchScoreSet, bin_width: f64) -> Result<HistogramPair, MetricsError> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(MetricsError::InvalidBinWidth(bin_width));
    }
    s.validate()?;
    let mut counts: BTreeMap<i64, (u64, u64)> = BTreeMap::new();
    for g in &s.genuine {
        counts.entry(bin_index(*g, bin_width)).or_default().0 += 1;
    }
    for i in &s.impostor {
        counts.entry(bin_index(*i, bin_width)).or_default().1 += 1;
    }
    let mut bins = Vec::new();
    if let (Some(lo), Some(hi)) = (counts.keys().next().copied(), counts.keys().next_back().copied()) {
        for k in lo..=hi {
            let (genuine, impostor) = counts.get(&k).copied().unwrap_or((0, 0));
            bins.push(HistogramBin {
                lower: k as f64 * bin_width,
                upper: (k + 1) as f64 * bin_width,
                genuine,
                impostor,
            });
        }
    }
    Ok(HistogramPair {
        style_label: s.style_label.clone(),
        protocol: s.protocol,
        bin_width,
        bins,
        n_genuine: s.genuine.len(),
        n_impostor: s.impostor.len(),
        genuine_empty: s.genuine.is_empty(),
        impostor_empty: s.impostor.is_empty(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TmrRow {
    pub style_label: String,
    pub real: Option<f64>,
    pub synthetic: Option<f64>,
    pub hybrid: Option<f64>,
}

impl TmrRow {
    pub fn get(&self, p: Protocol) -> Option<f64> {
        match p {
            Protocol::RealPair => self.real,
            Protocol::SyntheticPair => self.synthetic,
            Protocol::HybridPair => self.hybrid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TmrTable {
    pub threshold: f64,
    pub rows: Vec<TmrRow>,
}

/// One row per style; a cell is empty when the style has no genuine scores
/// under that protocol.
pub fn tmr_table(sets: &[MatchScoreSet], threshold: f64) -> Result<TmrTable, MetricsError> {
    let mut rows: BTreeMap<&str, TmrRow> = BTreeMap::new();
    for s in sets {
        let row = rows.entry(s.style_label.as_str()).or_insert_with(|| TmrRow {
            style_label: s.style_label.clone(),
            real: None,
            synthetic: None,
            hybrid: None,
        });
        let value = match tmr_at_threshold(s, threshold) {
            Ok(v) => Some(v),
            Err(MetricsError::EmptyGenuine) => None,
            Err(e) => return Err(e),
        };
        match s.protocol {
            Protocol::RealPair => row.real = value,
            Protocol::SyntheticPair => row.synthetic = value,
            Protocol::HybridPair => row.hybrid = value,
        }
    }
    Ok(TmrTable {
        threshold,
        rows: rows.into_values().collect(),
    })
}

pub fn render_tmr_table(table: &TmrTable) -> String {
    let mut t = TextTable::new(["Style", "Real", "Synthetic", "Hybrid"].map(String::from).to_vec());
    for row in &table.rows {
        let mut cells = vec![row.style_label.clone()];
        for p in Protocol::ALL {
            cells.push(row.get(p).map_or_else(|| "-".to_string(), |v| format_fixed_half_up(v, 2)));
        }
        t.row(cells);
    }
    format!("TMR (%) at threshold {}\n{}", table.threshold, t.render())
}
