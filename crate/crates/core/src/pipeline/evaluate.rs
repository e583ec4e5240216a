use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::output::{EvaluationReport, FmrEntry, IouSummary, QualitySection, ToolkitInfo, VerificationSection};
use super::{sha256_hex, substream, LoadedManifest, PairSpec, PipelineError};
use crate::consistency::{
    aggregate_local, apply_overrides, classify, error_rates, match_minutiae, parse_override_log,
    AnnotationOverride, ConsistencyCounts, ErrorRates, LocalRecord, MatchTolerance,
};
use crate::geometry::{compute_expected, BinaryMask, MinutiaeSet, PlacementTransform, Provenance};
use crate::hallucination::{aggregate_by_style, mask_iou, IouResult, RateOptions};
use crate::io::{read_mask, read_minutiae, read_placement};
use crate::metrics::{
    fmr_at_threshold, group_scores, overlap_by_style, per_style_quality_scatter, quality_bin,
    read_quality_csv, read_scores_csv, score_distributions, tmr_table, MetricsError, QualityBinConfig,
    QualityChannel, QualityClass,
};

#[derive(Debug, Clone, Default)]
pub struct EvaluateOptions {
    /// Replaces the manifest seed.
    pub seed: Option<u64>,
    /// Contents of an override log applied on top of per-pair logs.
    pub override_log: Option<String>,
}

/// Everything one pair's evaluation reads, already loaded.
#[derive(Debug, Clone)]
pub struct PairInputs {
    pub gt: MinutiaeSet,
    pub gt_mask: BinaryMask,
    pub placement: PlacementTransform,
    pub generated: MinutiaeSet,
    pub generated_mask: BinaryMask,
    pub overrides: Vec<AnnotationOverride>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairResult {
    pub pair_id: String,
    pub style_label: String,
    pub quality_class: Option<QualityClass>,
    pub quality_score: Option<f64>,
    pub counts: ConsistencyCounts,
    pub rates: ErrorRates,
    pub iou: IouResult,
    pub expected_minutiae: usize,
    pub generated_minutiae: usize,
    pub overrides_applied: usize,
    pub total_displacement: f64,
    /// Expected minutiae lost to a singular TPS Jacobian.
    pub dropped_minutiae: Vec<String>,
    pub diverged_pixels: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedPair {
    pub pair_id: String,
    pub reason: String,
}

impl PairInputs {
    pub fn load(
        loaded: &LoadedManifest,
        pair: &PairSpec,
        extra_log: Option<&str>,
    ) -> Result<PairInputs, PipelineError> {
        let gt = read_minutiae(&loaded.resolve(&pair.gt_minutiae_ref), Provenance::GroundTruth)?;
        let gt_mask = read_mask(&loaded.resolve(&pair.gt_mask_ref))?;
        let placement = match &pair.placement_ref {
            Some(r) => read_placement(&loaded.resolve(r))?,
            None => PlacementTransform::identity(gt_mask.width(), gt_mask.height())?,
        };
        let generated = read_minutiae(&loaded.resolve(&pair.generated_minutiae_ref), Provenance::Generated)?;
        let generated_mask = read_mask(&loaded.resolve(&pair.generated_mask_ref))?;
        let mut overrides = Vec::new();
        if let Some(r) = &pair.override_log_ref {
            let path = loaded.resolve(r);
            let text = std::fs::read_to_string(&path).map_err(|e| PipelineError::file(&path, e))?;
            overrides.extend(parse_override_log(&text, &pair.pair_id)?);
        }
        if let Some(text) = extra_log {
            overrides.extend(parse_override_log(text, &pair.pair_id)?);
        }
        Ok(PairInputs {
            gt,
            gt_mask,
            placement,
            generated,
            generated_mask,
            overrides,
        })
    }
}

/// Expected set, matching, overrides, counts and IoU for one pair.
pub fn evaluate_pair(
    pair: &PairSpec,
    inputs: &PairInputs,
    tolerance: &MatchTolerance,
    bins: &QualityBinConfig,
) -> Result<PairResult, PipelineError> {
    let expected = compute_expected(&inputs.gt, &inputs.gt_mask, &inputs.placement)?;
    let assignment = match_minutiae(&expected.minutiae, &inputs.generated, tolerance);
    let (assignment, generated) =
        apply_overrides(&assignment, &expected.minutiae, &inputs.generated, &inputs.overrides)?;
    let counts = classify(&assignment);
    let iou = mask_iou(&expected.mask, &inputs.generated_mask)?;
    let quality_class = pair
        .quality_class
        .or_else(|| pair.quality_score.map(|q| quality_bin(q, bins)));
    Ok(PairResult {
        pair_id: pair.pair_id.clone(),
        style_label: pair.style_label.clone(),
        quality_class,
        quality_score: pair.quality_score,
        counts,
        rates: error_rates(counts),
        iou,
        expected_minutiae: expected.minutiae.len(),
        generated_minutiae: generated.len(),
        overrides_applied: inputs.overrides.len(),
        total_displacement: assignment.total_displacement(),
        dropped_minutiae: expected.dropped.into_iter().map(|d| d.id).collect(),
        diverged_pixels: expected.diverged_pixels,
    })
}

fn digest_file(loaded: &LoadedManifest, r: &str) -> Option<String> {
    std::fs::read(loaded.resolve(r)).ok().map(|b| sha256_hex(&b))
}

/// Runs every manifest pair and assembles the report. Pairs whose inputs
/// fail to load or evaluate are listed as skipped.
pub fn run_evaluation(loaded: &LoadedManifest, opts: &EvaluateOptions) -> Result<EvaluationReport, PipelineError> {
    let m = &loaded.manifest;
    m.check()?;
    let seed = opts.seed.unwrap_or(m.seed);

    let outcomes: Vec<Result<PairResult, String>> = m
        .pairs
        .par_iter()
        .map(|pair| {
            PairInputs::load(loaded, pair, opts.override_log.as_deref())
                .and_then(|inputs| evaluate_pair(pair, &inputs, &m.tolerance, &m.quality_bins))
                .map_err(|e| e.to_string())
        })
        .collect();

    let mut pairs = Vec::new();
    let mut skipped = Vec::new();
    for (spec, outcome) in m.pairs.iter().zip(outcomes) {
        match outcome {
            Ok(r) => pairs.push(r),
            Err(reason) => skipped.push(SkippedPair {
                pair_id: spec.pair_id.clone(),
                reason,
            }),
        }
    }

    let local = aggregate_local(
        &pairs
            .iter()
            .map(|p| LocalRecord {
                pair_id: p.pair_id.clone(),
                rates: p.rates,
                quality_class: p.quality_class,
            })
            .collect::<Vec<_>>(),
    );
    let rate_opts = RateOptions {
        threshold: m.thresholds.iou,
        resamples: m.thresholds.bootstrap_resamples,
        seed: substream(seed, "bootstrap"),
        skip_degenerate: m.thresholds.skip_degenerate,
    };
    let global = aggregate_by_style(
        &pairs
            .iter()
            .map(|p| (p.iou, p.style_label.clone()))
            .collect::<Vec<_>>(),
        &rate_opts,
    )?;

    let mut quality_split = BTreeMap::new();
    for p in &pairs {
        let label = p.quality_class.map_or("Unclassified", QualityClass::label);
        *quality_split.entry(label.to_string()).or_insert(0usize) += 1;
    }

    let verification = match &m.scores_ref {
        Some(r) => Some(verification_section(&read_scores_csv(&loaded.resolve(r))?, m.thresholds.tmr, m.thresholds.score_bin_width)?),
        None => None,
    };
    let quality = match &m.quality_ref {
        Some(r) => {
            let records = read_quality_csv(&loaded.resolve(r), &m.channel_ranges())?;
            Some(QualitySection {
                bin_width: m.thresholds.quality_bin_width,
                nfiq2: per_style_quality_scatter(&records, QualityChannel::Nfiq2),
                lfiqa: per_style_quality_scatter(&records, QualityChannel::Lfiqa),
                nfiq2_overlap: overlap_by_style(&records, QualityChannel::Nfiq2, m.thresholds.quality_bin_width)?,
                lfiqa_overlap: overlap_by_style(&records, QualityChannel::Lfiqa, m.thresholds.quality_bin_width)?,
            })
        }
        None => None,
    };

    let mut refs = BTreeSet::new();
    for p in &m.pairs {
        refs.extend(p.refs().into_iter().map(|(_, r)| r.to_string()));
    }
    refs.extend(m.scores_ref.iter().cloned());
    refs.extend(m.quality_ref.iter().cloned());
    let mut input_digests: BTreeMap<String, String> = refs
        .into_par_iter()
        .filter_map(|r| digest_file(loaded, &r).map(|d| (r, d)))
        .collect();
    if let Some(log) = &opts.override_log {
        input_digests.insert("<override log>".into(), sha256_hex(log.as_bytes()));
    }

    Ok(EvaluationReport {
        toolkit: ToolkitInfo::current(),
        manifest_digest: loaded.digest.clone(),
        seed,
        tolerance: m.tolerance,
        thresholds: m.thresholds.clone(),
        quality_bins: m.quality_bins,
        prompt: m.prompt.clone(),
        input_digests,
        iou_summary: IouSummary::from_pairs(&pairs),
        quality_split,
        pairs,
        skipped,
        local,
        global,
        verification,
        quality,
    })
}

fn verification_section(
    rows: &[crate::metrics::ScoreRow],
    threshold: f64,
    bin_width: f64,
) -> Result<VerificationSection, PipelineError> {
    let sets = group_scores(rows);
    let tmr = tmr_table(&sets, threshold)?;
    let mut fmr = Vec::new();
    let mut distributions = Vec::new();
    for s in &sets {
        match fmr_at_threshold(s, threshold) {
            Ok(v) => fmr.push(FmrEntry {
                style_label: s.style_label.clone(),
                protocol: s.protocol,
                fmr: v,
            }),
            Err(MetricsError::EmptyImpostor) => {}
            Err(e) => return Err(e.into()),
        }
        distributions.push(score_distributions(s, bin_width)?);
    }
    Ok(VerificationSection {
        threshold,
        tmr,
        fmr,
        distributions,
    })
}
