use serde::{Deserialize, Serialize};

use crate::metrics::QualityClass;
use crate::report::{format_fixed_half_up, TextTable};

use super::ErrorRates;

/// Per-pair input to the local-error aggregation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalRecord {
    pub pair_id: String,
    pub rates: ErrorRates,
    pub quality_class: Option<QualityClass>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalSummary {
    pub label: String,
    pub pairs: usize,
    /// Mean removal error as a fraction.
    pub mean_removal: f64,
    /// Mean addition error as a fraction.
    pub mean_addition: f64,
    pub degenerate_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalReport {
    /// Non-empty quality classes in High, Average, Low order.
    pub classes: Vec<LocalSummary>,
    pub total: LocalSummary,
}

fn summarize(label: &str, records: &[&LocalRecord]) -> LocalSummary {
    let n = records.len();
    let (mut rem, mut add) = (0.0, 0.0);
    for r in records {
        rem += r.rates.removal;
        add += r.rates.addition;
    }
    let mean = |s: f64| if n == 0 { 0.0 } else { s / n as f64 };
    LocalSummary {
        label: label.to_string(),
        pairs: n,
        mean_removal: mean(rem),
        mean_addition: mean(add),
        degenerate_pairs: records.iter().filter(|r| r.rates.degenerate).count(),
    }
}

/// Mean removal/addition per input-quality class and overall.
///
/// Records are reduced in `pair_id` order so the result does not depend on
/// the order in which pair evaluations finished. Pairs without a quality
/// class only contribute to the total.
pub fn aggregate_local(records: &[LocalRecord]) -> LocalReport {
    let mut sorted: Vec<&LocalRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.pair_id.cmp(&b.pair_id));
    let classes = [QualityClass::High, QualityClass::Average, QualityClass::Low]
        .into_iter()
        .filter_map(|class| {
            let members: Vec<&LocalRecord> = sorted
                .iter()
                .copied()
                .filter(|r| r.quality_class == Some(class))
                .collect();
            (!members.is_empty()).then(|| summarize(class.label(), &members))
        })
        .collect();
    LocalReport {
        classes,
        total: summarize("Total", &sorted),
    }
}

/// Renders the local-error table with percentages rounded half-up to two
/// decimals.
pub fn render_local_table(report: &LocalReport) -> String {
    let columns: Vec<&LocalSummary> = report.classes.iter().chain([&report.total]).collect();
    let mut table = TextTable::new(
        std::iter::once("Local Error Type".to_string())
            .chain(columns.iter().map(|c| c.label.clone()))
            .collect(),
    );
    let pct = |v: f64| format_fixed_half_up(v * 100.0, 2);
    table.row(
        std::iter::once("Removal (%)".to_string())
            .chain(columns.iter().map(|c| pct(c.mean_removal)))
            .collect(),
    );
    table.row(
        std::iter::once("Addition (%)".to_string())
            .chain(columns.iter().map(|c| pct(c.mean_addition)))
            .collect(),
    );
    table.row(
        std::iter::once("Pairs".to_string())
            .chain(columns.iter().map(|c| c.pairs.to_string()))
            .collect(),
    );
    table.render()
}
