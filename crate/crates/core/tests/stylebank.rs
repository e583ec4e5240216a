//! Style bank ingest, partition, sampling and retrieval properties.

use std::collections::BTreeMap;

use printlab_core::stylebank::{
    bank_stats, build_bank, encode_payload, nearest_styles, sample_style, BankManifest,
    ManifestEntry, StyleBank, StyleDescriptor,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DATASETS: [(&str, usize); 7] = [
    ("IIITD-SLF", 120),
    ("IIITD-MUST", 16327),
    ("IIITD-MOLF", 4400),
    ("MSP", 2030),
    ("NIST-SD27", 258),
    ("NIST-SD302", 3452),
    ("LFWild", 1770),
];

/// 40 surfaces and 15 techniques combined into 45 styles.
fn style_of(k: usize) -> (String, String) {
    let m = k % 45;
    let (s, t) = if m < 40 { (m, m % 15) } else { (m - 40, (m - 40 + 1) % 15) };
    (format!("Surface {s:02}"), format!("Technique {t:02}"))
}

fn table2_bank(dim: usize) -> StyleBank {
    let mut rng = ChaCha8Rng::seed_from_u64(28357);
    let mut entries = Vec::new();
    let mut rows = Vec::new();
    for (ds, count) in DATASETS {
        for _ in 0..count {
            let k = entries.len();
            let (surface, technique) = style_of(k);
            entries.push(ManifestEntry {
                entry_id: format!("e{k:05}"),
                surface,
                technique,
                quality_level: None,
                source_dataset: ds.into(),
                source_image_ref: format!("{ds}/{k}.png"),
                row_index: k,
            });
            rows.push((0..dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect());
        }
    }
    let manifest = BankManifest { version: 1, dimension: dim, entries };
    build_bank(&manifest, &encode_payload(&rows)).unwrap()
}

fn scan(bank: &StyleBank, q: &[f32], k: usize) -> Vec<(String, f64)> {
    let qn: f64 = q.iter().map(|v| f64::from(*v).powi(2)).sum::<f64>().sqrt();
    let mut all: Vec<(String, f64)> = bank
        .entries()
        .iter()
        .map(|e| {
            let en: f64 = e.embedding.iter().map(|v| f64::from(*v).powi(2)).sum::<f64>().sqrt();
            let dot: f64 = e.embedding.iter().zip(q).map(|(a, b)| f64::from(*a) * f64::from(*b)).sum();
            (e.entry_id.clone(), if en == 0.0 { 0.0 } else { dot / (en * qn) })
        })
        .collect();
    all.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

fn same_ranking(got: &[printlab_core::stylebank::Neighbor], want: &[(String, f64)]) -> bool {
    got.len() == want.len()
        && got
            .iter()
            .zip(want)
            .all(|(g, w)| g.entry_id == w.0 && (g.similarity - w.1).abs() < 1e-9)
}

#[test]
fn table2_shaped_bank() {
    let bank = table2_bank(8);
    let stats = bank_stats(&bank);
    assert_eq!(stats.entries, 28_357);
    assert_eq!(stats.styles, 45);
    assert_eq!(stats.surfaces, 40);
    assert_eq!(stats.techniques, 15);
    for (ds, count) in DATASETS {
        assert_eq!(stats.per_dataset[ds], count);
    }
    assert_eq!(stats.per_style.iter().map(|s| s.count).sum::<usize>(), 28_357);

    let parts = bank.partition();
    assert_eq!(parts.len(), 45);
    let mut seen = BTreeMap::new();
    for ids in parts.values() {
        for id in ids {
            *seen.entry(id.clone()).or_insert(0) += 1;
        }
    }
    assert_eq!(seen.len(), 28_357);
    assert!(seen.values().all(|c| *c == 1));

    let d = StyleDescriptor::new("surface 07", "technique 07");
    for seed in [0, 1, 99, u64::MAX] {
        let a = sample_style(&bank, &d, seed).unwrap();
        assert_eq!(a.entry_id, sample_style(&bank, &d, seed).unwrap().entry_id);
        assert_eq!(a.descriptor.key(), d.key());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..5 {
        let q: Vec<f32> = (0..8).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
        assert!(same_ranking(&nearest_styles(&bank, &q, 10).unwrap(), &scan(&bank, &q, 10)));
    }
}

#[test]
fn sampling_is_uniform_within_a_partition() {
    let entries = (0..100)
        .map(|k| ManifestEntry {
            entry_id: format!("e{k:03}"),
            surface: "ceramic".into(),
            technique: "black powder dusting".into(),
            quality_level: None,
            source_dataset: "d".into(),
            source_image_ref: String::new(),
            row_index: k,
        })
        .collect();
    let rows: Vec<Vec<f32>> = (0..100).map(|k| vec![k as f32 + 1.0]).collect();
    let bank = build_bank(&BankManifest { version: 1, dimension: 1, entries }, &encode_payload(&rows)).unwrap();
    let d = StyleDescriptor::new("ceramic", "black powder dusting");
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let draws = 10_000u64;
    for seed in 0..draws {
        *counts.entry(sample_style(&bank, &d, seed).unwrap().entry_id.clone()).or_default() += 1;
    }
    let p: f64 = 1.0 / 100.0;
    let sd = (draws as f64 * p * (1.0 - p)).sqrt();
    let mean = draws as f64 * p;
    assert_eq!(counts.len(), 100);
    for (id, c) in counts {
        assert!((60..=140).contains(&c), "{id}: {c}");
        assert!((c as f64 - mean).abs() <= 4.0 * sd, "{id}: {c}");
    }
}

fn random_bank(seed: u64, n: usize, dim: usize) -> StyleBank {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries = (0..n)
        .map(|k| ManifestEntry {
            entry_id: format!("e{k:04}"),
            surface: format!("s{}", k % 3),
            technique: "t".into(),
            quality_level: None,
            source_dataset: "d".into(),
            source_image_ref: String::new(),
            row_index: k,
        })
        .collect();
    let rows: Vec<Vec<f32>> = (0..n).map(|_| (0..dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect()).collect();
    build_bank(&BankManifest { version: 1, dimension: dim, entries }, &encode_payload(&rows)).unwrap()
}

proptest! {
    #[test]
    fn knn_equals_scan(seed in any::<u64>(), n in 1usize..300, dim in 1usize..12, k in 1usize..20) {
        let bank = random_bank(seed, n, dim);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
        let q: Vec<f32> = (0..dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
        prop_assume!(q.iter().any(|v| *v != 0.0));
        prop_assert!(same_ranking(&nearest_styles(&bank, &q, k).unwrap(), &scan(&bank, &q, k)));
    }

    #[test]
    fn knn_is_scale_invariant(seed in any::<u64>(), n in 1usize..200, alpha_exp in -8i32..8) {
        let bank = random_bank(seed, n, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 7);
        let q: Vec<f32> = (0..6).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
        let alpha = 2f32.powi(alpha_exp) * 1.5;
        let scaled: Vec<f32> = q.iter().map(|v| v * alpha).collect();
        let a: Vec<String> = nearest_styles(&bank, &q, 10).unwrap().into_iter().map(|n| n.entry_id).collect();
        let b: Vec<String> = nearest_styles(&bank, &scaled, 10).unwrap().into_iter().map(|n| n.entry_id).collect();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn partitions_cover_disjointly(seed in any::<u64>(), n in 0usize..200) {
        let bank = random_bank(seed, n, 2);
        let parts = bank.partition();
        let total: usize = parts.values().map(Vec::len).sum();
        prop_assert_eq!(total, n);
        let mut all: Vec<&String> = parts.values().flatten().collect();
        all.sort();
        all.dedup();
        prop_assert_eq!(all.len(), n);
        prop_assert_eq!(bank.style_count(), parts.len());
    }
}
