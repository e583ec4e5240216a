//! TPS fitting checked against an independent dense solve and closed-form
//! re-evaluation.

use printlab_core::geometry::{
    angular_difference, apply_tps_to_minutiae, fit_tps, AffineTransform, Minutia, MinutiaKind,
    MinutiaeSet, Provenance, TpsWarp, JACOBIAN_STEP,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn u(r2: f64) -> f64 {
    if r2 == 0.0 {
        0.0
    } else {
        r2 * r2.ln()
    }
}

/// Gaussian elimination with partial pivoting on an augmented copy.
fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Returns (weights, affine) per axis, affine as [a0, a1, a2].
fn oracle_fit(src: &[[f64; 2]], dst: &[[f64; 2]]) -> [(Vec<f64>, [f64; 3]); 2] {
    let n = src.len();
    let mut a = vec![vec![0.0; n + 3]; n + 3];
    for i in 0..n {
        for j in 0..n {
            let dx = src[i][0] - src[j][0];
            let dy = src[i][1] - src[j][1];
            a[i][j] = u(dx * dx + dy * dy);
        }
        a[i][n] = 1.0;
        a[i][n + 1] = src[i][0];
        a[i][n + 2] = src[i][1];
        a[n][i] = 1.0;
        a[n + 1][i] = src[i][0];
        a[n + 2][i] = src[i][1];
    }
    let axis = |k: usize| {
        let mut b: Vec<f64> = dst.iter().map(|p| p[k]).collect();
        b.extend([0.0; 3]);
        let x = gauss_solve(a.clone(), b);
        (x[..n].to_vec(), [x[n], x[n + 1], x[n + 2]])
    };
    [axis(0), axis(1)]
}

fn closed_form(fit: &[(Vec<f64>, [f64; 3]); 2], src: &[[f64; 2]], p: [f64; 2]) -> [f64; 2] {
    let eval = |k: usize| {
        let (w, a) = &fit[k];
        let mut v = a[0] + a[1] * p[0] + a[2] * p[1];
        for (j, s) in src.iter().enumerate() {
            v += w[j] * u((p[0] - s[0]).powi(2) + (p[1] - s[1]).powi(2));
        }
        v
    };
    [eval(0), eval(1)]
}

fn random_controls(rng: &mut ChaCha8Rng, n: usize) -> (Vec<[f64; 2]>, Vec<[f64; 2]>) {
    let mut src: Vec<[f64; 2]> = Vec::new();
    while src.len() < n {
        let p = [rng.gen_range(0.0..200.0), rng.gen_range(0.0..200.0)];
        if src.iter().all(|q| (q[0] - p[0]).hypot(q[1] - p[1]) > 15.0) {
            src.push(p);
        }
    }
    let dst = src
        .iter()
        .map(|p| [p[0] + rng.gen_range(-6.0..6.0), p[1] + rng.gen_range(-6.0..6.0)])
        .collect();
    (src, dst)
}

#[test]
fn displaced_square_matches_oracle() {
    let src = [[0.0, 0.0], [100.0, 0.0], [100.0, 100.0], [0.0, 100.0]];
    let dst = [[0.0, 0.0], [100.0, 0.0], [100.0, 100.0], [10.0, 110.0]];
    let warp = fit_tps(&src, &dst, 0.0).unwrap();
    for (s, d) in src.iter().zip(&dst) {
        let o = warp.apply(*s);
        assert!((o[0] - d[0]).abs() < 1e-6 && (o[1] - d[1]).abs() < 1e-6);
    }
    let oracle = oracle_fit(&src, &dst);
    for k in 0..2 {
        for (w, ow) in warp.kernel_weights()[k].iter().zip(&oracle[k].0) {
            assert!((w - ow).abs() < 1e-9, "{w} vs {ow}");
        }
        for (a, oa) in warp.affine_part()[k].iter().zip(&oracle[k].1) {
            assert!((a - oa).abs() < 1e-6);
        }
    }
}

#[test]
fn random_fits_match_oracle_everywhere() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [3, 5, 9, 16] {
        let (src, dst) = random_controls(&mut rng, n);
        let warp = fit_tps(&src, &dst, 0.0).unwrap();
        let oracle = oracle_fit(&src, &dst);
        for (s, d) in src.iter().zip(&dst) {
            let o = warp.apply(*s);
            assert!((o[0] - d[0]).abs() < 1e-6 && (o[1] - d[1]).abs() < 1e-6);
        }
        for _ in 0..200 {
            let p = [rng.gen_range(-20.0..220.0), rng.gen_range(-20.0..220.0)];
            let a = warp.apply(p);
            let b = closed_form(&oracle, &src, p);
            assert!((a[0] - b[0]).abs() < 1e-6 && (a[1] - b[1]).abs() < 1e-6, "{a:?} vs {b:?}");
        }
    }
}

#[test]
fn affine_targets_reduce_to_affine() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let t = AffineTransform::new([[1.05, 0.2, 7.0], [-0.1, 0.93, -3.0]]).unwrap();
    let (src, _) = random_controls(&mut rng, 12);
    let dst: Vec<[f64; 2]> = src.iter().map(|p| t.apply(*p)).collect();
    let warp = fit_tps(&src, &dst, 0.0).unwrap();
    let mut max_err: f64 = 0.0;
    for i in 0..50 {
        for j in 0..50 {
            let p = [f64::from(i) * 4.0, f64::from(j) * 4.0];
            let a = warp.apply(p);
            let b = t.apply(p);
            max_err = max_err.max((a[0] - b[0]).abs()).max((a[1] - b[1]).abs());
        }
    }
    assert!(max_err < 1e-6, "max grid error {max_err}");
}

fn rel_err(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            num += (a[i][j] - b[i][j]).powi(2);
            den += b[i][j].powi(2);
        }
    }
    (num / den).sqrt()
}

fn fd_jacobian(w: &TpsWarp, p: [f64; 2], h: f64) -> [[f64; 2]; 2] {
    let f = |q: [f64; 2]| w.apply(q);
    let (px, mx) = (f([p[0] + h, p[1]]), f([p[0] - h, p[1]]));
    let (py, my) = (f([p[0], p[1] + h]), f([p[0], p[1] - h]));
    [
        [(px[0] - mx[0]) / (2.0 * h), (py[0] - my[0]) / (2.0 * h)],
        [(px[1] - mx[1]) / (2.0 * h), (py[1] - my[1]) / (2.0 * h)],
    ]
}

#[test]
fn orientation_updates_follow_the_jacobian() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let (src, dst) = random_controls(&mut rng, 9);
        let warp = fit_tps(&src, &dst, 0.0).unwrap();
        let mut ms = Vec::new();
        for k in 0..30 {
            let (x, y) = (rng.gen_range(5.0..195.0), rng.gen_range(5.0..195.0));
            ms.push(Minutia::new(format!("m{k}"), x, y, rng.gen_range(0.0..360.0), MinutiaKind::Ending));
        }
        let set = MinutiaeSet::new(200, 200, Provenance::GroundTruth, ms.clone()).unwrap();
        let out = apply_tps_to_minutiae(&set, &warp);
        assert!(out.dropped.is_empty());
        for (m, o) in ms.iter().zip(out.set.iter()) {
            let p = [m.x, m.y];
            let analytic = warp.jacobian(p);
            let fine = fd_jacobian(&warp, p, 1e-4);
            assert!(rel_err(fine, analytic) < 1e-4);
            let step = fd_jacobian(&warp, p, JACOBIAN_STEP);
            let (s, c) = m.theta.to_radians().sin_cos();
            let v = [step[0][0] * c + step[0][1] * s, step[1][0] * c + step[1][1] * s];
            let want = v[1].atan2(v[0]).to_degrees();
            assert!(angular_difference(o.theta, want) <= 1e-4 * want.abs().max(1.0));
        }
    }
}

proptest! {
    #[test]
    fn control_targets_are_reproduced(seed in 0u64..10_000, n in 3usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (src, dst) = random_controls(&mut rng, n);
        let warp = fit_tps(&src, &dst, 0.0).unwrap();
        for (s, d) in src.iter().zip(&dst) {
            let o = warp.apply(*s);
            prop_assert!((o[0] - d[0]).abs() < 1e-6 && (o[1] - d[1]).abs() < 1e-6);
        }
    }

    #[test]
    fn rotations_shift_theta_exactly(phi in -180.0f64..180.0, theta in 0.0f64..360.0) {
        let t = AffineTransform::rotation_about(phi, [50.0, 50.0]);
        let set = MinutiaeSet::new(100, 100, Provenance::GroundTruth,
            vec![Minutia::new("a", 50.0, 50.0, theta, MinutiaKind::Ending)]).unwrap();
        let out = printlab_core::geometry::apply_affine_to_minutiae(&set, &t).unwrap();
        let want = (theta + phi).rem_euclid(360.0);
        prop_assert!(angular_difference(out.minutiae[0].theta, want) < 1e-9);
    }
}
