//! Global errors: mask IoU, hallucination score `1 − IoU`, threshold error
//! rate with bootstrap uncertainty, per-style aggregation and overlays.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::BinaryMask;
use crate::report::{format_fixed_half_up, TextTable};

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.8;
pub const DEFAULT_BOOTSTRAP_RESAMPLES: usize = 1000;
pub const DEFAULT_BOOTSTRAP_SEED: u64 = 0x5EED_1007;
pub const UNCERTAINTY_LABEL: &str = "bootstrap (toolkit convention)";

#[derive(Debug, Error)]
pub enum HallucinationError {
    #[error("mask dimensions differ: {left:?} vs {right:?}")]
    DimensionMismatch { left: (u32, u32), right: (u32, u32) },
    #[error("no pairs to aggregate")]
    EmptyInput,
    #[error("style label must not be empty")]
    EmptyLabel,
    #[error("threshold must lie in [0, 1], got {0}")]
    InvalidThreshold(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IouResult {
    pub intersection: u64,
    pub union: u64,
    pub iou: f64,
    pub hallucination_score: f64,
    /// Both masks empty; IoU is taken as 1.
    pub degenerate: bool,
}

fn check_dims(a: &BinaryMask, b: &BinaryMask) -> Result<(), HallucinationError> {
    if a.dimensions() != b.dimensions() {
        return Err(HallucinationError::DimensionMismatch {
            left: a.dimensions(),
            right: b.dimensions(),
        });
    }
    Ok(())
}

pub fn mask_iou(expected: &BinaryMask, generated: &BinaryMask) -> Result<IouResult, HallucinationError> {
    check_dims(expected, generated)?;
    let intersection = expected.and(generated).expect("dimensions checked").count_ones() as u64;
    let union = expected.or(generated).expect("dimensions checked").count_ones() as u64;
    let degenerate = union == 0;
    let iou = if degenerate {
        1.0
    } else {
        intersection as f64 / union as f64
    };
    Ok(IouResult {
        intersection,
        union,
        iou,
        hallucination_score: 1.0 - iou,
        degenerate,
    })
}

/// Foreground in the generated print outside the expected mask.
pub fn hallucinated_region(expected: &BinaryMask, generated: &BinaryMask) -> Result<BinaryMask, HallucinationError> {
    check_dims(expected, generated)?;
    Ok(generated.and_not(expected).expect("dimensions checked"))
}

/// Overlay levels: 0 background, 128 expected ∧ generated, 255 hallucinated.
pub fn overlay_levels(expected: &BinaryMask, generated: &BinaryMask) -> Result<Vec<u8>, HallucinationError> {
    check_dims(expected, generated)?;
    let (w, h) = expected.dimensions();
    let mut out = Vec::with_capacity(w as usize * h as usize);
    for y in 0..h {
        for x in 0..w {
            let e = expected.get(x, y);
            let g = generated.get(x, y);
            out.push(match (e, g) {
                (true, true) => 128,
                (false, true) => 255,
                _ => 0,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateOptions {
    pub threshold: f64,
    pub resamples: usize,
    pub seed: u64,
    pub skip_degenerate: bool,
}

impl Default for RateOptions {
    fn default() -> Self {
        RateOptions {
            threshold: DEFAULT_IOU_THRESHOLD,
            resamples: DEFAULT_BOOTSTRAP_RESAMPLES,
            seed: DEFAULT_BOOTSTRAP_SEED,
            skip_degenerate: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub n: usize,
    pub errors: usize,
    pub rate_percent: f64,
    pub uncertainty_percent: f64,
}

/// Percentage of pairs with `iou < threshold`, and the standard deviation of
/// that percentage over seeded bootstrap resamples.
pub fn hallucination_rate(results: &[IouResult], opts: &RateOptions) -> Result<RateEstimate, HallucinationError> {
    if !(0.0..=1.0).contains(&opts.threshold) {
        return Err(HallucinationError::InvalidThreshold(opts.threshold));
    }
    let flags: Vec<bool> = results
        .iter()
        .filter(|r| !(opts.skip_degenerate && r.degenerate))
        .map(|r| r.iou < opts.threshold)
        .collect();
    if flags.is_empty() {
        return Err(HallucinationError::EmptyInput);
    }
    let n = flags.len();
    let errors = flags.iter().filter(|f| **f).count();
    Ok(RateEstimate {
        n,
        errors,
        rate_percent: 100.0 * errors as f64 / n as f64,
        uncertainty_percent: bootstrap_sd(&flags, opts.resamples, opts.seed),
    })
}

fn bootstrap_sd(flags: &[bool], resamples: usize, seed: u64) -> f64 {
    if resamples < 2 {
        return 0.0;
    }
    let n = flags.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rates: Vec<f64> = (0..resamples)
        .map(|_| {
            let hits = (0..n).filter(|_| flags[rng.gen_range(0..n)]).count();
            100.0 * hits as f64 / n as f64
        })
        .collect();
    let mean = rates.iter().sum::<f64>() / resamples as f64;
    let var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (resamples - 1) as f64;
    var.sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HallucinationReport {
    pub style_label: String,
    pub n: usize,
    pub errors: usize,
    pub error_rate_percent: f64,
    pub uncertainty_percent: f64,
    pub threshold: f64,
    pub per_pair: Vec<IouResult>,
}

/// One report per style, highest error rate first; ties break on label.
///
/// Each style's bootstrap stream is seeded from `opts.seed` and the label, so
/// a style's uncertainty does not depend on which other styles are present.
pub fn aggregate_by_style(
    per_pair: &[(IouResult, String)],
    opts: &RateOptions,
) -> Result<Vec<HallucinationReport>, HallucinationError> {
    let mut groups: BTreeMap<&str, Vec<IouResult>> = BTreeMap::new();
    for (r, label) in per_pair {
        if label.is_empty() {
            return Err(HallucinationError::EmptyLabel);
        }
        groups.entry(label.as_str()).or_default().push(*r);
    }
    let mut reports = Vec::with_capacity(groups.len());
    for (label, results) in groups {
        let style_opts = RateOptions {
            seed: style_seed(opts.seed, label),
            ..*opts
        };
        let est = match hallucination_rate(&results, &style_opts) {
            Ok(e) => e,
            Err(HallucinationError::EmptyInput) => continue,
            Err(e) => return Err(e),
        };
        reports.push(HallucinationReport {
            style_label: label.to_string(),
            n: est.n,
            errors: est.errors,
            error_rate_percent: est.rate_percent,
            uncertainty_percent: est.uncertainty_percent,
            threshold: opts.threshold,
            per_pair: results,
        });
    }
    reports.sort_by(|a, b| {
        b.error_rate_percent
            .total_cmp(&a.error_rate_percent)
            .then_with(|| a.style_label.cmp(&b.style_label))
    });
    Ok(reports)
}

fn style_seed(seed: u64, label: &str) -> u64 {
    // FNV-1a over the label, folded into the base seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    seed ^ h
}

/// Table with one row per style: label, n, rate and uncertainty.
pub fn render_style_table(reports: &[HallucinationReport]) -> String {
    let threshold = reports.first().map_or(DEFAULT_IOU_THRESHOLD, |r| r.threshold);
    let mut t = TextTable::new(
        ["Style", "n", "Error rate (%)", "Uncertainty (%)"]
            .map(String::from)
            .to_vec(),
    );
    for r in reports {
        t.row(vec![
            r.style_label.clone(),
            r.n.to_string(),
            format_fixed_half_up(r.error_rate_percent, 2),
            format!("± {}", format_fixed_half_up(r.uncertainty_percent, 3)),
        ]);
    }
    format!(
        "Global hallucination error rate (IoU < {threshold})\nUncertainty: {UNCERTAINTY_LABEL}\n{}",
        t.render()
    )
}
