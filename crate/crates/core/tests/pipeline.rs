//! End-to-end evaluation on hand-built and synthetic manifests.

use std::path::Path;

use printlab_core::consistency::{
    apply_overrides, classify, match_minutiae, ConsistencyCounts, MatchTolerance,
};
use printlab_core::geometry::{
    compute_expected, BinaryMask, Minutia, MinutiaKind, MinutiaeSet, Provenance,
};
use printlab_core::hallucination::mask_iou;
use printlab_core::io::{write_mask, write_minutiae};
use printlab_core::metrics::QualityClass;
use printlab_core::pipeline::{
    load_manifest, run_evaluation, validate_manifest, write_outputs, write_synthetic_corpus,
    EvaluateOptions, EvaluationManifest, PairInputs, PairSpec, SyntheticCorpusConfig,
};
use tempfile::TempDir;

fn square(w: u32, x0: u32, x1: u32, y0: u32, y1: u32) -> BinaryMask {
    BinaryMask::from_fn(w, w, |x, y| (x0..x1).contains(&x) && (y0..y1).contains(&y)).unwrap()
}

fn m(id: &str, x: f64, y: f64) -> Minutia {
    Minutia::new(id, x, y, 45.0, MinutiaKind::Ending)
}

struct PairFiles<'a> {
    id: &'a str,
    gt: Vec<Minutia>,
    gt_mask: BinaryMask,
    generated: Vec<Minutia>,
    generated_mask: BinaryMask,
    class: Option<QualityClass>,
    style: &'a str,
}

fn write_pair(dir: &Path, p: &PairFiles) -> PairSpec {
    let (w, h) = p.gt_mask.dimensions();
    let sub = dir.join(p.id);
    std::fs::create_dir_all(&sub).unwrap();
    write_minutiae(&sub.join("gt.json"), &MinutiaeSet::new(w, h, Provenance::GroundTruth, p.gt.clone()).unwrap()).unwrap();
    write_mask(&sub.join("gt.pgm"), &p.gt_mask).unwrap();
    write_minutiae(&sub.join("gen.json"), &MinutiaeSet::new(w, h, Provenance::Generated, p.generated.clone()).unwrap()).unwrap();
    write_mask(&sub.join("gen.pgm"), &p.generated_mask).unwrap();
    std::fs::write(sub.join("exemplar.png"), b"x").unwrap();
    std::fs::write(sub.join("generated.png"), b"y").unwrap();
    PairSpec {
        pair_id: p.id.into(),
        exemplar_image_ref: format!("{}/exemplar.png", p.id),
        gt_minutiae_ref: format!("{}/gt.json", p.id),
        gt_mask_ref: format!("{}/gt.pgm", p.id),
        placement_ref: None,
        generated_image_ref: format!("{}/generated.png", p.id),
        generated_minutiae_ref: format!("{}/gen.json", p.id),
        generated_mask_ref: format!("{}/gen.pgm", p.id),
        style_label: p.style.into(),
        quality_class: p.class,
        quality_score: None,
        ridge_guidance_ref: None,
        override_log_ref: None,
    }
}

fn write_manifest(dir: &Path, pairs: Vec<PairSpec>) -> std::path::PathBuf {
    let manifest: EvaluationManifest = serde_json::from_value(serde_json::json!({ "seed": 1, "pairs": pairs })).unwrap();
    let path = dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest).unwrap()).unwrap();
    path
}

fn four() -> Vec<Minutia> {
    vec![m("a", 10.0, 10.0), m("b", 30.0, 10.0), m("c", 10.0, 30.0), m("d", 30.0, 30.0)]
}

#[test]
fn identity_pair_has_no_errors() {
    let dir = TempDir::new().unwrap();
    let mask = square(48, 2, 40, 2, 40);
    let spec = write_pair(dir.path(), &PairFiles {
        id: "p1",
        gt: four(),
        gt_mask: mask.clone(),
        generated: four(),
        generated_mask: mask,
        class: Some(QualityClass::High),
        style: "CrossMatch",
    });
    let loaded = load_manifest(&write_manifest(dir.path(), vec![spec])).unwrap();
    let report = run_evaluation(&loaded, &EvaluateOptions::default()).unwrap();
    assert_eq!(report.pairs.len(), 1);
    let p = &report.pairs[0];
    assert_eq!((p.rates.removal, p.rates.addition, p.iou.iou), (0.0, 0.0, 1.0));
    assert_eq!(p.counts, ConsistencyCounts::new(4, 0, 0));
}

#[test]
fn three_pairs_with_known_defects() {
    let dir = TempDir::new().unwrap();
    let full = square(48, 0, 48, 0, 48);
    let a = write_pair(dir.path(), &PairFiles {
        id: "a",
        gt: four(),
        gt_mask: full.clone(),
        generated: four()[..3].to_vec(),
        generated_mask: full.clone(),
        class: Some(QualityClass::High),
        style: "S1",
    });
    let mut injected = four();
    injected.push(m("z", 20.0, 40.0));
    let b = write_pair(dir.path(), &PairFiles {
        id: "b",
        gt: four(),
        gt_mask: full.clone(),
        generated: injected,
        generated_mask: full,
        class: Some(QualityClass::Low),
        style: "S1",
    });
    let c = write_pair(dir.path(), &PairFiles {
        id: "c",
        gt: vec![m("a", 12.0, 12.0)],
        gt_mask: square(48, 10, 20, 10, 20),
        generated: vec![m("g", 13.0, 11.0)],
        generated_mask: square(48, 10, 25, 10, 20),
        class: Some(QualityClass::Low),
        style: "S2",
    });
    let loaded = load_manifest(&write_manifest(dir.path(), vec![a, b, c])).unwrap();
    let r = run_evaluation(&loaded, &EvaluateOptions::default()).unwrap();

    assert_eq!(r.pairs[0].counts, ConsistencyCounts::new(3, 1, 0));
    assert_eq!(r.pairs[1].counts, ConsistencyCounts::new(4, 0, 1));
    assert_eq!(r.pairs[2].counts, ConsistencyCounts::new(1, 0, 0));
    assert_eq!(r.pairs[2].iou.iou, 100.0 / 150.0);

    // High: a only. Low: b and c. Total: mean of the three.
    assert_eq!(r.local.classes[0].label, "High");
    assert_eq!(r.local.classes[0].mean_removal, 0.25);
    assert_eq!(r.local.classes[1].label, "Low");
    assert_eq!(r.local.classes[1].mean_addition, 0.1);
    assert!((r.local.total.mean_removal - 0.25 / 3.0).abs() < 1e-15);
    assert!((r.local.total.mean_addition - 0.2 / 3.0).abs() < 1e-15);

    // S2's single pair has IoU 2/3 < 0.8; S1 has none below.
    assert_eq!(r.global[0].style_label, "S2");
    assert_eq!(r.global[0].error_rate_percent, 100.0);
    assert_eq!(r.global[1].error_rate_percent, 0.0);
    assert_eq!(r.quality_split["High"], 1);
    assert_eq!(r.quality_split["Low"], 2);
}

#[test]
fn override_log_is_applied() {
    let dir = TempDir::new().unwrap();
    let full = square(48, 0, 48, 0, 48);
    let mut injected = four();
    injected.push(m("z", 20.0, 40.0));
    let mut spec = write_pair(dir.path(), &PairFiles {
        id: "p",
        gt: four(),
        gt_mask: full.clone(),
        generated: injected,
        generated_mask: full,
        class: None,
        style: "S",
    });
    let line = r#"{"session_id":"s1","pair_id":"p","sequence":1,"timestamp":"2024-05-01T10:00:00Z","override":{"action":"delete_generated_minutia","generated_id":"z","annotator":"ex","timestamp":"2024-05-01T10:00:00Z"}}"#;
    std::fs::write(dir.path().join("p/decisions.jsonl"), format!("{line}\n")).unwrap();
    spec.override_log_ref = Some("p/decisions.jsonl".into());
    let loaded = load_manifest(&write_manifest(dir.path(), vec![spec])).unwrap();
    let r = run_evaluation(&loaded, &EvaluateOptions::default()).unwrap();
    assert_eq!(r.pairs[0].counts, ConsistencyCounts::new(4, 0, 0));
    assert_eq!(r.pairs[0].overrides_applied, 1);
    assert_eq!(r.quality_split["Unclassified"], 1);
}

#[test]
fn synthetic_corpus_round_trip() {
    let dir = TempDir::new().unwrap();
    let corpus = write_synthetic_corpus(dir.path(), &SyntheticCorpusConfig::new(24, 77)).unwrap();
    let loaded = load_manifest(&corpus.manifest_path).unwrap();
    assert!(validate_manifest(&loaded).is_valid());

    let first = run_evaluation(&loaded, &EvaluateOptions::default()).unwrap();
    let second = run_evaluation(&loaded, &EvaluateOptions::default()).unwrap();
    assert_eq!(first.to_json().unwrap(), second.to_json().unwrap());
    assert_eq!(first.pairs.len() + first.skipped.len(), 24);
    assert!(first.skipped.is_empty());
    assert_eq!(first.quality_split["High"], 12);
    assert_eq!(first.quality_split["Low"], 12);
    assert!(first.verification.is_some() && first.quality.is_some());

    for (p, t) in first.pairs.iter().zip(&corpus.truth) {
        assert_eq!(p.pair_id, t.pair_id);
        assert_eq!(p.counts.beta as usize, t.deleted.len(), "{}", p.pair_id);
        assert_eq!(p.counts.gamma as usize, t.injected.len(), "{}", p.pair_id);
        assert_eq!(p.counts.alpha as usize, t.expected - t.deleted.len());
        assert_eq!(p.iou.iou < 1.0, t.hallucinated, "{}", p.pair_id);
    }

    // Module-level recomputation agrees with the pipeline.
    let tol = MatchTolerance::default();
    for (spec, p) in loaded.manifest.pairs.iter().zip(&first.pairs) {
        let inputs = PairInputs::load(&loaded, spec, None).unwrap();
        let expected = compute_expected(&inputs.gt, &inputs.gt_mask, &inputs.placement).unwrap();
        let a = match_minutiae(&expected.minutiae, &inputs.generated, &tol);
        let (a, _) = apply_overrides(&a, &expected.minutiae, &inputs.generated, &[]).unwrap();
        assert_eq!(classify(&a), p.counts);
        assert_eq!(mask_iou(&expected.mask, &inputs.generated_mask).unwrap(), p.iou);
    }

    let out1 = dir.path().join("out1");
    let out2 = dir.path().join("out2");
    write_outputs(&first, &out1).unwrap();
    write_outputs(&second, &out2).unwrap();
    for name in ["report.json", "summary.txt", "local.txt", "global.txt", "pairs.csv", "tmr.txt"] {
        assert_eq!(std::fs::read(out1.join(name)).unwrap(), std::fs::read(out2.join(name)).unwrap(), "{name}");
    }

    let reseeded = run_evaluation(&loaded, &EvaluateOptions { seed: Some(5), ..Default::default() }).unwrap();
    assert_eq!(reseeded.seed, 5);
    assert_eq!(reseeded.pairs, first.pairs);
}

#[test]
fn corrupt_pair_is_skipped_and_validation_names_issues() {
    let dir = TempDir::new().unwrap();
    let corpus = write_synthetic_corpus(dir.path(), &SyntheticCorpusConfig { with_metrics: false, ..SyntheticCorpusConfig::new(4, 3) }).unwrap();
    std::fs::write(dir.path().join("pairs/pair-0001/generated.json"), "{ nope").unwrap();
    std::fs::remove_file(dir.path().join("pairs/pair-0002/gt_mask.pgm")).unwrap();
    write_mask(&dir.path().join("pairs/pair-0003/generated_mask.pgm"), &BinaryMask::new(10, 10).unwrap()).unwrap();

    let loaded = load_manifest(&corpus.manifest_path).unwrap();
    let r = run_evaluation(&loaded, &EvaluateOptions::default()).unwrap();
    let skipped: Vec<&str> = r.skipped.iter().map(|s| s.pair_id.as_str()).collect();
    assert_eq!(skipped, vec!["pair-0001", "pair-0002", "pair-0003"]);
    assert_eq!(r.pairs.len() + r.skipped.len(), 4);

    let v = validate_manifest(&loaded);
    assert!(!v.is_valid());
    let fields: Vec<(Option<&str>, &str)> = v.issues.iter().map(|i| (i.pair_id.as_deref(), i.field.as_str())).collect();
    assert!(fields.contains(&(Some("pair-0001"), "generated_minutiae_ref")));
    assert!(fields.contains(&(Some("pair-0002"), "gt_mask_ref")));
    assert!(fields.contains(&(Some("pair-0003"), "generated_mask_ref")));
}

#[test]
fn duplicate_ids_are_fatal() {
    let dir = TempDir::new().unwrap();
    let mask = square(48, 0, 48, 0, 48);
    let files = PairFiles { id: "p", gt: four(), gt_mask: mask.clone(), generated: four(), generated_mask: mask, class: None, style: "S" };
    let spec = write_pair(dir.path(), &files);
    let loaded = load_manifest(&write_manifest(dir.path(), vec![spec.clone(), spec])).unwrap();
    assert!(run_evaluation(&loaded, &EvaluateOptions::default()).is_err());
    assert!(validate_manifest(&loaded).issues.iter().any(|i| i.field == "pair_id"));
}
