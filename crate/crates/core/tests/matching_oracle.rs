//! One-to-one matching against exhaustive enumeration, plus matching and
//! override properties.

use chrono::{TimeZone, Utc};
use printlab_core::consistency::{
    apply_overrides, classify, error_rates, match_minutiae, AnnotationOverride, ConsistencyCounts,
    MatchTolerance, OverrideAction, Resolution,
};
use printlab_core::geometry::{Minutia, MinutiaKind, MinutiaeSet, Provenance};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn set(prov: Provenance, pts: &[(f64, f64)], prefix: &str) -> MinutiaeSet {
    let ms = pts
        .iter()
        .enumerate()
        .map(|(i, (x, y))| Minutia::new(format!("{prefix}{i}"), *x, *y, 0.0, MinutiaKind::Ending))
        .collect();
    MinutiaeSet::new(64, 64, prov, ms).unwrap()
}

/// Best (count, total displacement) over every partial injection.
fn oracle(exp: &[(f64, f64)], gen: &[(f64, f64)], hw: f64) -> (usize, f64) {
    fn rec(i: usize, exp: &[(f64, f64)], gen: &[(f64, f64)], used: &mut Vec<bool>, hw: f64, cnt: usize, tot: f64, best: &mut (usize, f64)) {
        if i == exp.len() {
            if cnt > best.0 || (cnt == best.0 && tot < best.1) {
                *best = (cnt, tot);
            }
            return;
        }
        rec(i + 1, exp, gen, used, hw, cnt, tot, best);
        for j in 0..gen.len() {
            let (dx, dy) = (gen[j].0 - exp[i].0, gen[j].1 - exp[i].1);
            if !used[j] && dx.abs() <= hw && dy.abs() <= hw {
                used[j] = true;
                rec(i + 1, exp, gen, used, hw, cnt + 1, tot + dx.hypot(dy), best);
                used[j] = false;
            }
        }
    }
    let mut best = (0, 0.0);
    rec(0, exp, gen, &mut vec![false; gen.len()], hw, 0, 0.0, &mut best);
    best
}

#[test]
fn equals_exhaustive_oracle_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let tol = MatchTolerance::default();
    for _ in 0..200 {
        let ne = rng.gen_range(0..=6);
        let ng = rng.gen_range(0..=6);
        // A small arena so that boxes overlap and ties are common.
        let exp: Vec<(f64, f64)> = (0..ne).map(|_| (rng.gen_range(10.0..30.0), rng.gen_range(10.0..30.0))).collect();
        let gen: Vec<(f64, f64)> = (0..ng).map(|_| (rng.gen_range(10.0..30.0), rng.gen_range(10.0..30.0))).collect();
        let a = match_minutiae(&set(Provenance::Expected, &exp, "e"), &set(Provenance::Generated, &gen, "g"), &tol);
        let (count, total) = oracle(&exp, &gen, tol.box_half_width);
        assert_eq!(a.pairs.len(), count);
        assert!((a.total_displacement() - total).abs() < 1e-9, "{} vs {total}", a.total_displacement());
        assert_eq!(a.pairs.len() + a.unmatched_expected.len(), ne);
        assert_eq!(a.pairs.len() + a.unmatched_generated.len(), ng);
    }
}

#[test]
fn box_edge_is_inclusive() {
    let tol = MatchTolerance::default();
    let a = match_minutiae(
        &set(Provenance::Expected, &[(20.0, 20.0)], "e"),
        &set(Provenance::Generated, &[(24.5, 15.5)], "g"),
        &tol,
    );
    assert_eq!(a.pairs.len(), 1);
    let b = match_minutiae(
        &set(Provenance::Expected, &[(20.0, 20.0)], "e"),
        &set(Provenance::Generated, &[(24.6, 20.0)], "g"),
        &tol,
    );
    assert!(b.pairs.is_empty());
    let wide = match_minutiae(
        &set(Provenance::Expected, &[(20.0, 20.0)], "e"),
        &set(Provenance::Generated, &[(24.6, 20.0)], "g"),
        &MatchTolerance::half_width_nine(),
    );
    assert_eq!(wide.pairs.len(), 1);
}

/// Well-separated points on a 16-px lattice with a random sub-pixel offset.
fn lattice(rng: &mut ChaCha8Rng, n: usize) -> Vec<(f64, f64)> {
    let mut cells: Vec<(u32, u32)> = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).collect();
    cells.shuffle(rng);
    cells[..n]
        .iter()
        .map(|(i, j)| (8.0 + 20.0 * f64::from(*i), 8.0 + 20.0 * f64::from(*j)))
        .collect()
}

fn sized_set(prov: Provenance, pts: &[(f64, f64)], prefix: &str, w: u32) -> MinutiaeSet {
    let ms = pts
        .iter()
        .enumerate()
        .map(|(i, (x, y))| Minutia::new(format!("{prefix}{i:02}"), *x, *y, 0.0, MinutiaKind::Ending))
        .collect();
    MinutiaeSet::new(w, w, prov, ms).unwrap()
}

proptest! {
    #[test]
    fn injection_soundness(seed in any::<u64>(), k in 0usize..5, j in 0usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base: Vec<(f64, f64)> = (0..10).map(|i| (10.0 + 30.0 * f64::from(i % 5), 10.0 + 30.0 * f64::from(i / 5))).collect();
        let exp = sized_set(Provenance::Expected, &base, "e", 200);
        let mut kept: Vec<(f64, f64)> = base.clone();
        kept.shuffle(&mut rng);
        kept.truncate(base.len() - k);
        let mut gen: Vec<(f64, f64)> = kept
            .iter()
            .map(|(x, y)| (x + rng.gen_range(-2.0..2.0), y + rng.gen_range(-2.0..2.0)))
            .collect();
        for i in 0..j {
            gen.push((10.0 + 30.0 * i as f64, 150.0 + rng.gen_range(0.0..20.0)));
        }
        let a = match_minutiae(&exp, &sized_set(Provenance::Generated, &gen, "g", 200), &MatchTolerance::default());
        prop_assert_eq!(classify(&a), ConsistencyCounts::new((10 - k) as u64, k as u64, j as u64));
    }

    #[test]
    fn symmetric_under_role_swap(seed in any::<u64>(), ne in 0usize..7, ng in 0usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let exp: Vec<(f64, f64)> = (0..ne).map(|_| (rng.gen_range(10.0..30.0), rng.gen_range(10.0..30.0))).collect();
        let gen: Vec<(f64, f64)> = (0..ng).map(|_| (rng.gen_range(10.0..30.0), rng.gen_range(10.0..30.0))).collect();
        let tol = MatchTolerance::default();
        let ab = match_minutiae(&set(Provenance::Expected, &exp, "e"), &set(Provenance::Generated, &gen, "g"), &tol);
        let ba = match_minutiae(&set(Provenance::Expected, &gen, "g"), &set(Provenance::Generated, &exp, "e"), &tol);
        prop_assert_eq!(ab.pairs.len(), ba.pairs.len());
        prop_assert!((ab.total_displacement() - ba.total_displacement()).abs() < 1e-9);
    }

    #[test]
    fn identical_sets_match_completely(seed in any::<u64>(), n in 0usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = lattice(&mut rng, n.min(9));
        let a = match_minutiae(&set(Provenance::Expected, &pts, "e"), &set(Provenance::Generated, &pts, "g"), &MatchTolerance::default());
        let r = error_rates(classify(&a));
        prop_assert_eq!((r.removal, r.addition), (0.0, 0.0));
        prop_assert_eq!(a.total_displacement(), 0.0);
    }

    #[test]
    fn larger_box_never_loses_pairs(seed in any::<u64>(), hw in 0.5f64..10.0, extra in 0.0f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let exp: Vec<(f64, f64)> = (0..5).map(|_| (rng.gen_range(10.0..40.0), rng.gen_range(10.0..40.0))).collect();
        let gen: Vec<(f64, f64)> = (0..5).map(|_| (rng.gen_range(10.0..40.0), rng.gen_range(10.0..40.0))).collect();
        let (e, g) = (set(Provenance::Expected, &exp, "e"), set(Provenance::Generated, &gen, "g"));
        let small = match_minutiae(&e, &g, &MatchTolerance::new(hw, None).unwrap());
        let big = match_minutiae(&e, &g, &MatchTolerance::new(hw + extra, None).unwrap());
        prop_assert!(big.pairs.len() >= small.pairs.len());
    }

    #[test]
    fn rate_identities(alpha in 0u64..10_000, beta in 0u64..10_000, gamma in 0u64..10_000) {
        let r = error_rates(ConsistencyCounts::new(alpha, beta, gamma));
        prop_assert!((0.0..=1.0).contains(&r.removal) && (0.0..=1.0).contains(&r.addition));
        if alpha + beta > 0 {
            prop_assert_eq!(r.removal, beta as f64 / (alpha + beta) as f64);
        }
        if alpha + gamma > 0 {
            prop_assert_eq!(r.addition, gamma as f64 / (alpha + gamma) as f64);
        }
        prop_assert_eq!(r.degenerate, alpha + beta == 0 || alpha + gamma == 0);
    }

    #[test]
    fn override_application_is_order_independent(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = lattice(&mut rng, 6);
        let exp = set(Provenance::Expected, &pts, "e");
        let gen = set(Provenance::Generated, &pts[..4], "g");
        let a = match_minutiae(&exp, &gen, &MatchTolerance::default());
        let ts = |s: u32| Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, s).unwrap();
        let mut overrides = vec![
            AnnotationOverride { action: OverrideAction::DeleteGeneratedMinutia { generated_id: "g0".into() }, annotator: "x".into(), timestamp: ts(1) },
            AnnotationOverride { action: OverrideAction::MarkMissing { expected_id: "e1".into() }, annotator: "x".into(), timestamp: ts(2) },
            AnnotationOverride {
                action: OverrideAction::AddMinutia {
                    minutia: Minutia::new("h0", pts[4].0 + 1.0, pts[4].1, 0.0, MinutiaKind::Ending),
                    resolved_as: Resolution::Matched { expected_id: "e4".into() },
                },
                annotator: "x".into(),
                timestamp: ts(3),
            },
        ];
        let (first, _) = apply_overrides(&a, &exp, &gen, &overrides).unwrap();
        overrides.shuffle(&mut rng);
        let (second, _) = apply_overrides(&a, &exp, &gen, &overrides).unwrap();
        prop_assert_eq!(classify(&first), classify(&second));
        prop_assert_eq!(classify(&first), ConsistencyCounts::new(3, 3, 1));
    }
}
