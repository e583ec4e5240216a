//! Synthetic evaluation corpora with known injected defects, for self-tests
//! and benchmarking the pipeline without generator outputs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    make_placement, substream, EvaluationManifest, PairSpec, PipelineError, PlacementSamplingConfig,
    Thresholds, MANIFEST_VERSION,
};
use crate::consistency::MatchTolerance;
use crate::geometry::{compute_expected, BinaryMask, Minutia, MinutiaKind, MinutiaeSet, Provenance};
use crate::io::{encode_mask, write_mask, write_minutiae, write_placement};
use crate::metrics::{QualityBinConfig, QualityClass};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCorpusConfig {
    pub pairs: usize,
    pub seed: u64,
    pub width: u32,
    pub height: u32,
    /// Ground-truth minutiae per exemplar.
    pub minutiae: usize,
    /// Minimum distance between ground-truth minutiae.
    pub min_separation: f64,
    pub sampling: PlacementSamplingConfig,
    /// Up to this many expected minutiae are left out of each generated set.
    pub max_deleted: usize,
    /// Up to this many spurious minutiae are added to each generated set.
    pub max_injected: usize,
    /// Positional noise on reproduced minutiae, per axis.
    pub jitter: f64,
    /// Probability that a generated mask gains a hallucinated blob.
    pub hallucination_probability: f64,
    pub styles: Vec<String>,
    /// Also write `scores.csv` and `quality.csv`.
    pub with_metrics: bool,
}

impl SyntheticCorpusConfig {
    pub fn new(pairs: usize, seed: u64) -> Self {
        let (width, height) = (160, 160);
        SyntheticCorpusConfig {
            pairs,
            seed,
            width,
            height,
            minutiae: 24,
            min_separation: 18.0,
            sampling: PlacementSamplingConfig {
                rotation_deg: 10.0,
                translation: 8.0,
                tps_jitter: 3.0,
                crop_margin: 0.1,
                ..PlacementSamplingConfig::new(width, height)
            },
            max_deleted: 3,
            max_injected: 3,
            jitter: 1.0,
            hallucination_probability: 0.4,
            styles: vec!["crossmatch".into(), "futronic".into(), "morpho".into()],
            with_metrics: true,
        }
    }
}

/// What was done to each pair, for checking evaluation results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticPairTruth {
    pub pair_id: String,
    pub expected: usize,
    pub deleted: Vec<String>,
    pub injected: Vec<String>,
    pub hallucinated: bool,
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub manifest_path: PathBuf,
    pub truth: Vec<SyntheticPairTruth>,
}

fn ellipse(w: u32, h: u32, rx: f64, ry: f64) -> Result<BinaryMask, PipelineError> {
    let (cx, cy) = (f64::from(w - 1) / 2.0, f64::from(h - 1) / 2.0);
    Ok(BinaryMask::from_fn(w, h, |x, y| {
        let dx = (f64::from(x) - cx) / rx;
        let dy = (f64::from(y) - cy) / ry;
        dx * dx + dy * dy <= 1.0
    })?)
}

fn sample_gt(rng: &mut ChaCha8Rng, mask: &BinaryMask, cfg: &SyntheticCorpusConfig) -> Vec<Minutia> {
    let mut out: Vec<Minutia> = Vec::new();
    let mut attempts = 0;
    while out.len() < cfg.minutiae && attempts < 100_000 {
        attempts += 1;
        let x = rng.gen_range(0.0..f64::from(cfg.width - 1));
        let y = rng.gen_range(0.0..f64::from(cfg.height - 1));
        if !mask.get(x.round() as u32, y.round() as u32) {
            continue;
        }
        if out.iter().any(|m| (m.x - x).hypot(m.y - y) < cfg.min_separation) {
            continue;
        }
        let kind = if rng.gen_bool(0.5) {
            MinutiaKind::Ending
        } else {
            MinutiaKind::Bifurcation
        };
        out.push(Minutia::new(format!("m{:03}", out.len()), x, y, rng.gen_range(0.0..360.0), kind));
    }
    out
}

fn rel(p: &Path, base: &Path) -> String {
    p.strip_prefix(base).unwrap_or(p).to_string_lossy().replace('\\', "/")
}

/// Writes a corpus under `dir` and returns the manifest path with per-pair
/// ground truth about the injected defects.
pub fn write_synthetic_corpus(dir: &Path, cfg: &SyntheticCorpusConfig) -> Result<SyntheticCorpus, PipelineError> {
    let (w, h) = (cfg.width, cfg.height);
    let tol = MatchTolerance::default();
    let separation = 4.0 * tol.box_half_width;
    let gt_mask = ellipse(w, h, f64::from(w) * 0.42, f64::from(h) * 0.46)?;
    let bins = QualityBinConfig::default();
    let mut pairs = Vec::new();
    let mut truth = Vec::new();
    let mut scores = String::from("probe_ref,gallery_ref,score,label,protocol,style_label\n");
    let mut quality = String::from("image_ref,q,channel,origin,style_label\n");

    for i in 0..cfg.pairs {
        let pair_id = format!("pair-{i:04}");
        let mut rng = ChaCha8Rng::seed_from_u64(substream(cfg.seed, &pair_id));
        let pdir = dir.join("pairs").join(&pair_id);
        std::fs::create_dir_all(&pdir).map_err(|e| PipelineError::file(&pdir, e))?;

        let gt = MinutiaeSet::new(w, h, Provenance::GroundTruth, sample_gt(&mut rng, &gt_mask, cfg))?;
        let placement = make_placement(substream(cfg.seed, &format!("placement/{pair_id}")), &cfg.sampling)?;
        let expected = compute_expected(&gt, &gt_mask, &placement)?;

        let mut exp_ids: Vec<&Minutia> = expected.minutiae.iter().collect();
        exp_ids.shuffle(&mut rng);
        let n_del = rng.gen_range(0..=cfg.max_deleted.min(exp_ids.len()));
        let mut deleted: Vec<String> = exp_ids[..n_del].iter().map(|m| m.id.clone()).collect();
        deleted.sort();

        let clamp = |v: f64, hi: u32| v.clamp(0.0, f64::from(hi - 1));
        let mut generated: Vec<Minutia> = expected
            .minutiae
            .iter()
            .filter(|m| !deleted.contains(&m.id))
            .map(|m| {
                let dx = if cfg.jitter > 0.0 { rng.gen_range(-cfg.jitter..=cfg.jitter) } else { 0.0 };
                let dy = if cfg.jitter > 0.0 { rng.gen_range(-cfg.jitter..=cfg.jitter) } else { 0.0 };
                Minutia::new(
                    format!("g{}", m.id),
                    clamp(m.x + dx, w),
                    clamp(m.y + dy, h),
                    m.theta + rng.gen_range(-5.0..5.0),
                    m.kind,
                )
            })
            .collect();

        let n_inj = rng.gen_range(0..=cfg.max_injected);
        let mut injected = Vec::new();
        let mut attempts = 0;
        while injected.len() < n_inj && attempts < 10_000 {
            attempts += 1;
            let x = rng.gen_range(0.0..f64::from(w - 1));
            let y = rng.gen_range(0.0..f64::from(h - 1));
            let far = expected
                .minutiae
                .iter()
                .map(|m| [m.x, m.y])
                .chain(generated.iter().map(|m| [m.x, m.y]))
                .all(|p| (p[0] - x).hypot(p[1] - y) > separation);
            if far {
                let id = format!("s{:02}", injected.len());
                generated.push(Minutia::new(id.clone(), x, y, rng.gen_range(0.0..360.0), MinutiaKind::Unknown));
                injected.push(id);
            }
        }
        let generated = MinutiaeSet::new(w, h, Provenance::Generated, generated)?;

        let hallucinated = rng.gen_bool(cfg.hallucination_probability);
        let generated_mask = if hallucinated {
            // centred on background so the blob always adds foreground
            let (mut cx, mut cy) = (0.0, 0.0);
            for _ in 0..10_000 {
                cx = rng.gen_range(0.0..f64::from(w));
                cy = rng.gen_range(0.0..f64::from(h));
                if !expected.mask.get(cx as u32, cy as u32) {
                    break;
                }
            }
            let r = rng.gen_range(10.0..f64::from(w.min(h)) / 3.0);
            let blob = BinaryMask::from_fn(w, h, |x, y| (f64::from(x) - cx).hypot(f64::from(y) - cy) <= r)?;
            expected.mask.or(&blob)?
        } else {
            expected.mask.clone()
        };

        let write_err = |p: &Path| {
            let p = p.to_path_buf();
            move |e: std::io::Error| PipelineError::file(&p, e)
        };
        let exemplar = pdir.join("exemplar.pgm");
        std::fs::write(&exemplar, encode_mask(&gt_mask)).map_err(write_err(&exemplar))?;
        let generated_image = pdir.join("generated.pgm");
        std::fs::write(&generated_image, encode_mask(&generated_mask)).map_err(write_err(&generated_image))?;
        write_minutiae(&pdir.join("gt.json"), &gt)?;
        write_mask(&pdir.join("gt_mask.pgm"), &gt_mask)?;
        write_placement(&pdir.join("placement.json"), &placement)?;
        write_minutiae(&pdir.join("generated.json"), &generated)?;
        write_mask(&pdir.join("generated_mask.pgm"), &generated_mask)?;

        let quality_class = if i % 2 == 0 { QualityClass::High } else { QualityClass::Low };
        let quality_score = match quality_class {
            QualityClass::High => rng.gen_range((bins.mu + bins.sigma + 1.0).ceil()..=100.0).round(),
            _ => rng.gen_range(0.0..=(bins.mu - bins.sigma - 1.0).floor()).round(),
        };
        let style = &cfg.styles[i % cfg.styles.len()];
        pairs.push(PairSpec {
            pair_id: pair_id.clone(),
            exemplar_image_ref: rel(&exemplar, dir),
            gt_minutiae_ref: rel(&pdir.join("gt.json"), dir),
            gt_mask_ref: rel(&pdir.join("gt_mask.pgm"), dir),
            placement_ref: Some(rel(&pdir.join("placement.json"), dir)),
            generated_image_ref: rel(&generated_image, dir),
            generated_minutiae_ref: rel(&pdir.join("generated.json"), dir),
            generated_mask_ref: rel(&pdir.join("generated_mask.pgm"), dir),
            style_label: style.clone(),
            quality_class: Some(quality_class),
            quality_score: Some(quality_score),
            ridge_guidance_ref: None,
            override_log_ref: None,
        });
        truth.push(SyntheticPairTruth {
            pair_id: pair_id.clone(),
            expected: expected.minutiae.len(),
            deleted,
            injected,
            hallucinated,
        });

        if cfg.with_metrics {
            for (protocol, shift) in [("real", 0.0), ("synthetic", 8.0), ("hybrid", 4.0)] {
                let g: f64 = rng.gen_range(20.0..120.0) + shift;
                let imp: f64 = rng.gen_range(0.0..40.0);
                let _ = writeln!(scores, "{pair_id}-e,{pair_id}-{protocol},{g:.1},genuine,{protocol},{style}");
                let _ = writeln!(scores, "{pair_id}-e,other-{protocol},{imp:.1},impostor,{protocol},{style}");
            }
            for (origin, channel) in [("real", "nfiq2"), ("synthetic", "nfiq2"), ("real", "lfiqa"), ("synthetic", "lfiqa")] {
                let q: i64 = rng.gen_range(5..95);
                let _ = writeln!(quality, "{pair_id}-{origin}.png,{q},{channel},{origin},{style}");
            }
        }
    }

    let (scores_ref, quality_ref) = if cfg.with_metrics {
        let s = dir.join("scores.csv");
        std::fs::write(&s, scores).map_err(|e| PipelineError::file(&s, e))?;
        let q = dir.join("quality.csv");
        std::fs::write(&q, quality).map_err(|e| PipelineError::file(&q, e))?;
        (Some("scores.csv".to_string()), Some("quality.csv".to_string()))
    } else {
        (None, None)
    };

    let manifest = EvaluationManifest {
        version: MANIFEST_VERSION,
        seed: cfg.seed,
        tolerance: tol,
        thresholds: Thresholds::default(),
        quality_bins: bins,
        prompt: Some("A slap fingerprint image, high quality, CrossMatch, FTIR Optical".into()),
        pairs,
        scores_ref,
        quality_ref,
        lfiqa_range: None,
    };
    let manifest_path = dir.join("manifest.json");
    let body = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(&manifest_path, body).map_err(|e| PipelineError::file(&manifest_path, e))?;
    Ok(SyntheticCorpus { manifest_path, truth })
}
