//! Thin-plate-spline warps.
//!
//! Kernel convention: `U(r) = r² ln(r²)` with `U(0) = 0`. A fitted warp maps
//! `p` to `a0 + a1·x + a2·y + Σ_j w_j U(|p − s_j|)` independently per output axis.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::affine::{push_direction, AffineTransform, SINGULAR_EPS};
use super::minutiae::{MinutiaeSet, Provenance};
use super::GeometryError;

/// Step for the central-difference Jacobian used on minutia orientations.
pub const JACOBIAN_STEP: f64 = 0.5;

/// Iteration cap for the fixed-point inverse.
pub const INVERSE_MAX_ITERATIONS: usize = 20;

/// Convergence tolerance (pixels) for the fixed-point inverse.
pub const INVERSE_TOLERANCE: f64 = 0.1;

/// `r² ln(r²)` evaluated from the squared distance.
#[inline]
pub fn kernel(r2: f64) -> f64 {
    if r2 <= 0.0 {
        0.0
    } else {
        r2 * r2.ln()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TpsParts", into = "TpsParts")]
pub struct TpsWarp {
    control_source: Vec<[f64; 2]>,
    control_target: Vec<[f64; 2]>,
    /// `[a0, a1, a2]` per output axis.
    affine_part: [[f64; 3]; 2],
    /// One weight per control point, per output axis.
    kernel_weights: [Vec<f64>; 2],
    regularization: f64,
}

/// Serialized form of a [`TpsWarp`]; validated on the way back in.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct TpsParts {
    control_source: Vec<[f64; 2]>,
    control_target: Vec<[f64; 2]>,
    affine_part: [[f64; 3]; 2],
    kernel_weights: [Vec<f64>; 2],
    regularization: f64,
}

impl TryFrom<TpsParts> for TpsWarp {
    type Error = GeometryError;

    fn try_from(p: TpsParts) -> Result<Self, Self::Error> {
        TpsWarp::from_parts(
            p.control_source,
            p.control_target,
            p.affine_part,
            p.kernel_weights,
            p.regularization,
        )
    }
}

impl From<TpsWarp> for TpsParts {
    fn from(w: TpsWarp) -> Self {
        TpsParts {
            control_source: w.control_source,
            control_target: w.control_target,
            affine_part: w.affine_part,
            kernel_weights: w.kernel_weights,
            regularization: w.regularization,
        }
    }
}

impl TpsWarp {
    /// The identity warp on the corners of a `width × height` frame.
    pub fn identity(width: u32, height: u32) -> Self {
        let w = f64::from(width.max(1));
        let h = f64::from(height.max(1));
        let pts = vec![[0.0, 0.0], [w, 0.0], [0.0, h], [w, h]];
        TpsWarp {
            control_source: pts.clone(),
            control_target: pts,
            affine_part: [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            kernel_weights: [vec![0.0; 4], vec![0.0; 4]],
            regularization: 0.0,
        }
    }

    /// Reassembles a warp from stored coefficients (e.g. a placement file).
    pub fn from_parts(
        control_source: Vec<[f64; 2]>,
        control_target: Vec<[f64; 2]>,
        affine_part: [[f64; 3]; 2],
        kernel_weights: [Vec<f64>; 2],
        regularization: f64,
    ) -> Result<Self, GeometryError> {
        let n = control_source.len();
        if n < 3 || control_target.len() != n {
            return Err(GeometryError::ControlPointCount {
                source_len: n,
                target_len: control_target.len(),
            });
        }
        if kernel_weights[0].len() != n || kernel_weights[1].len() != n {
            return Err(GeometryError::DegenerateControlPoints(
                "kernel weight count differs from control point count".into(),
            ));
        }
        let finite = control_source
            .iter()
            .chain(&control_target)
            .flatten()
            .chain(affine_part.iter().flatten())
            .chain(kernel_weights.iter().flatten())
            .all(|v| v.is_finite());
        if !finite || !(regularization >= 0.0) {
            return Err(GeometryError::DegenerateControlPoints(
                "non-finite coefficient".into(),
            ));
        }
        Ok(TpsWarp {
            control_source,
            control_target,
            affine_part,
            kernel_weights,
            regularization,
        })
    }

    pub fn control_source(&self) -> &[[f64; 2]] {
        &self.control_source
    }

    pub fn control_target(&self) -> &[[f64; 2]] {
        &self.control_target
    }

    pub fn affine_part(&self) -> [[f64; 3]; 2] {
        self.affine_part
    }

    pub fn kernel_weights(&self) -> &[Vec<f64>; 2] {
        &self.kernel_weights
    }

    pub fn regularization(&self) -> f64 {
        self.regularization
    }

    /// True when the warp is exactly affine (all bending weights zero).
    pub fn is_affine(&self) -> bool {
        self.kernel_weights.iter().flatten().all(|w| *w == 0.0)
    }

    pub fn affine(&self) -> Result<AffineTransform, GeometryError> {
        let [ax, ay] = self.affine_part;
        AffineTransform::new([[ax[1], ax[2], ax[0]], [ay[1], ay[2], ay[0]]])
    }

    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        let [ax, ay] = &self.affine_part;
        let mut out = [
            ax[0] + ax[1] * p[0] + ax[2] * p[1],
            ay[0] + ay[1] * p[0] + ay[2] * p[1],
        ];
        for (j, s) in self.control_source.iter().enumerate() {
            let dx = p[0] - s[0];
            let dy = p[1] - s[1];
            let u = kernel(dx * dx + dy * dy);
            out[0] += self.kernel_weights[0][j] * u;
            out[1] += self.kernel_weights[1][j] * u;
        }
        out
    }

    /// Analytic Jacobian `∂(out_x, out_y)/∂(x, y)` at `p`.
    pub fn jacobian(&self, p: [f64; 2]) -> [[f64; 2]; 2] {
        let [ax, ay] = &self.affine_part;
        let mut j = [[ax[1], ax[2]], [ay[1], ay[2]]];
        for (k, s) in self.control_source.iter().enumerate() {
            let dx = p[0] - s[0];
            let dy = p[1] - s[1];
            let r2 = dx * dx + dy * dy;
            if r2 <= 0.0 {
                continue;
            }
            // d/dx [r² ln r²] = 2 dx (ln r² + 1)
            let g = 2.0 * (r2.ln() + 1.0);
            for axis in 0..2 {
                let w = self.kernel_weights[axis][k];
                j[axis][0] += w * g * dx;
                j[axis][1] += w * g * dy;
            }
        }
        j
    }

    /// Central-difference Jacobian with step `h`.
    pub fn numerical_jacobian(&self, p: [f64; 2], h: f64) -> [[f64; 2]; 2] {
        let px = self.apply([p[0] + h, p[1]]);
        let mx = self.apply([p[0] - h, p[1]]);
        let py = self.apply([p[0], p[1] + h]);
        let my = self.apply([p[0], p[1] - h]);
        let inv = 1.0 / (2.0 * h);
        [
            [(px[0] - mx[0]) * inv, (py[0] - my[0]) * inv],
            [(px[1] - mx[1]) * inv, (py[1] - my[1]) * inv],
        ]
    }

    /// Solves `warp(q) = p` by fixed-point iteration seeded with the inverse
    /// of the affine part. Returns `None` if it does not settle within
    /// [`INVERSE_MAX_ITERATIONS`] steps to [`INVERSE_TOLERANCE`] pixels.
    pub fn inverse_apply(&self, p: [f64; 2]) -> Option<[f64; 2]> {
        let [ax, ay] = &self.affine_part;
        let det = ax[1] * ay[2] - ax[2] * ay[1];
        if det.abs() < SINGULAR_EPS {
            return None;
        }
        let inv = [[ay[2] / det, -ax[2] / det], [-ay[1] / det, ax[1] / det]];
        let step = |r: [f64; 2]| {
            [
                inv[0][0] * r[0] + inv[0][1] * r[1],
                inv[1][0] * r[0] + inv[1][1] * r[1],
            ]
        };
        let mut q = step([p[0] - ax[0], p[1] - ay[0]]);
        for _ in 0..=INVERSE_MAX_ITERATIONS {
            let f = self.apply(q);
            let r = [p[0] - f[0], p[1] - f[1]];
            if (r[0] * r[0] + r[1] * r[1]).sqrt() <= INVERSE_TOLERANCE {
                return Some(q);
            }
            let d = step(r);
            q = [q[0] + d[0], q[1] + d[1]];
            if !(q[0].is_finite() && q[1].is_finite()) {
                return None;
            }
        }
        None
    }
}

fn check_control_points(source: &[[f64; 2]], regularization: f64) -> Result<(), GeometryError> {
    if source.iter().flatten().any(|v| !v.is_finite()) {
        return Err(GeometryError::DegenerateControlPoints(
            "non-finite control point".into(),
        ));
    }
    let n = source.len() as f64;
    let mx = source.iter().map(|p| p[0]).sum::<f64>() / n;
    let my = source.iter().map(|p| p[1]).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in source {
        let dx = p[0] - mx;
        let dy = p[1] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let trace = sxx + syy;
    if trace <= 0.0 || (sxx * syy - sxy * sxy) <= 1e-12 * trace * trace {
        return Err(GeometryError::DegenerateControlPoints(
            "control points are collinear".into(),
        ));
    }
    if regularization == 0.0 {
        for (i, a) in source.iter().enumerate() {
            for b in &source[i + 1..] {
                if (a[0] - b[0]).hypot(a[1] - b[1]) < 1e-9 {
                    return Err(GeometryError::DegenerateControlPoints(
                        "duplicated control point".into(),
                    ));
                }
            }
        }
    }
    Ok(())
}

/// Fits the interpolating (or, with `regularization > 0`, smoothing) spline
/// taking `source[j]` to `target[j]`.
pub fn fit_tps(
    source: &[[f64; 2]],
    target: &[[f64; 2]],
    regularization: f64,
) -> Result<TpsWarp, GeometryError> {
    let n = source.len();
    if n < 3 || target.len() != n {
        return Err(GeometryError::ControlPointCount {
            source_len: n,
            target_len: target.len(),
        });
    }
    if !(regularization >= 0.0) || !regularization.is_finite() {
        return Err(GeometryError::DegenerateControlPoints(
            "regularization must be finite and non-negative".into(),
        ));
    }
    if target.iter().flatten().any(|v| !v.is_finite()) {
        return Err(GeometryError::DegenerateControlPoints(
            "non-finite target point".into(),
        ));
    }
    check_control_points(source, regularization)?;

    let size = n + 3;
    let mut system = DMatrix::<f64>::zeros(size, size);
    for i in 0..n {
        for j in 0..n {
            let dx = source[i][0] - source[j][0];
            let dy = source[i][1] - source[j][1];
            system[(i, j)] = kernel(dx * dx + dy * dy);
        }
        system[(i, i)] += regularization;
        let row = [1.0, source[i][0], source[i][1]];
        for (k, v) in row.into_iter().enumerate() {
            system[(i, n + k)] = v;
            system[(n + k, i)] = v;
        }
    }
    let mut rhs = DMatrix::<f64>::zeros(size, 2);
    for i in 0..n {
        rhs[(i, 0)] = target[i][0];
        rhs[(i, 1)] = target[i][1];
    }

    let solution = system
        .clone()
        .full_piv_lu()
        .solve(&rhs)
        .ok_or_else(|| GeometryError::DegenerateControlPoints("singular TPS system".into()))?;
    if solution.iter().any(|v| !v.is_finite()) {
        return Err(GeometryError::DegenerateControlPoints(
            "non-finite TPS solution".into(),
        ));
    }

    let column = |c: usize| -> DVector<f64> { solution.column(c).into_owned() };
    let (sx, sy) = (column(0), column(1));
    let weights = [
        sx.rows(0, n).iter().copied().collect::<Vec<_>>(),
        sy.rows(0, n).iter().copied().collect::<Vec<_>>(),
    ];
    let affine_part = [[sx[n], sx[n + 1], sx[n + 2]], [sy[n], sy[n + 1], sy[n + 2]]];

    Ok(TpsWarp {
        control_source: source.to_vec(),
        control_target: target.to_vec(),
        affine_part,
        kernel_weights: weights,
        regularization,
    })
}

/// Record of a minutia removed because the warp folds at its location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedMinutia {
    pub id: String,
    pub determinant: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TpsMinutiaeResult {
    pub set: MinutiaeSet,
    pub dropped: Vec<DroppedMinutia>,
}

/// Pushes positions through the warp and orientations through the local
/// central-difference Jacobian. Minutiae where the Jacobian determinant is
/// `<= 1e-9` are dropped and reported.
pub fn apply_tps_to_minutiae(set: &MinutiaeSet, warp: &TpsWarp) -> TpsMinutiaeResult {
    let mut minutiae = Vec::with_capacity(set.len());
    let mut dropped = Vec::new();
    for m in set.iter() {
        let p = m.position();
        let jac = warp.numerical_jacobian(p, JACOBIAN_STEP);
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det <= SINGULAR_EPS {
            dropped.push(DroppedMinutia {
                id: m.id.clone(),
                determinant: det,
            });
            continue;
        }
        let [x, y] = warp.apply(p);
        let mut out = m.clone();
        out.x = x;
        out.y = y;
        out.theta = push_direction(jac, m.theta);
        minutiae.push(out);
    }
    TpsMinutiaeResult {
        set: set.with_minutiae(Provenance::Expected, minutiae),
        dropped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const TRIPLE: [[f64; 2]; 3] = [[0.0, 0.0], [10.0, 0.0], [3.0, 8.0]];

    #[test]
    fn kernel_zero_at_origin() {
        assert_eq!(kernel(0.0), 0.0);
        assert_abs_diff_eq!(kernel(std::f64::consts::E), std::f64::consts::E, epsilon = 1e-12);
    }

    #[test]
    fn same_points_give_identity() {
        let w = fit_tps(&TRIPLE, &TRIPLE, 0.0).unwrap();
        let [ax, ay] = w.affine_part();
        for (v, e) in ax.iter().zip([0.0, 1.0, 0.0]) {
            assert_abs_diff_eq!(*v, e, epsilon = 1e-8);
        }
        for (v, e) in ay.iter().zip([0.0, 0.0, 1.0]) {
            assert_abs_diff_eq!(*v, e, epsilon = 1e-8);
        }
        assert!(w.kernel_weights().iter().flatten().all(|k| k.abs() < 1e-8));
    }

    #[test]
    fn collinear_rejected() {
        let src = [[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [5.0, 5.0]];
        assert!(matches!(
            fit_tps(&src, &src, 0.0),
            Err(GeometryError::DegenerateControlPoints(_))
        ));
    }

    #[test]
    fn duplicate_rejected_without_regularization() {
        let src = [[0.0, 0.0], [4.0, 0.0], [0.0, 4.0], [4.0, 0.0]];
        assert!(matches!(
            fit_tps(&src, &src, 0.0),
            Err(GeometryError::DegenerateControlPoints(_))
        ));
        assert!(fit_tps(&src, &src, 0.5).is_ok());
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(
            fit_tps(&TRIPLE[..2], &TRIPLE[..2], 0.0),
            Err(GeometryError::ControlPointCount { .. })
        ));
    }

    #[test]
    fn side_conditions_hold() {
        let src = [[0.0, 0.0], [100.0, 0.0], [0.0, 100.0], [100.0, 100.0], [40.0, 60.0]];
        let dst = [[1.0, -2.0], [103.0, 1.0], [-2.0, 98.0], [99.0, 104.0], [45.0, 57.0]];
        let w = fit_tps(&src, &dst, 0.0).unwrap();
        for axis in w.kernel_weights() {
            let s: f64 = axis.iter().sum();
            let sx: f64 = axis.iter().zip(&src).map(|(w, p)| w * p[0]).sum();
            let sy: f64 = axis.iter().zip(&src).map(|(w, p)| w * p[1]).sum();
            assert!(s.abs() < 1e-8 && sx.abs() < 1e-8 && sy.abs() < 1e-8, "{s} {sx} {sy}");
        }
    }

    #[test]
    fn inverse_undoes_warp() {
        let src = [[0.0, 0.0], [100.0, 0.0], [0.0, 100.0], [100.0, 100.0], [50.0, 50.0]];
        let mut dst = src;
        dst[4] = [54.0, 47.0];
        let w = fit_tps(&src, &dst, 0.0).unwrap();
        for p in [[10.0, 20.0], [50.0, 50.0], [90.0, 5.0]] {
            let q = w.inverse_apply(w.apply(p)).unwrap();
            let f = w.apply(q);
            let fp = w.apply(p);
            assert!((f[0] - fp[0]).hypot(f[1] - fp[1]) <= INVERSE_TOLERANCE);
        }
    }

    #[test]
    fn round_trips_through_serde() {
        let w = fit_tps(&TRIPLE, &[[1.0, 0.0], [11.0, 1.0], [3.0, 9.0]], 0.0).unwrap();
        let s = serde_json::to_string(&w).unwrap();
        let back: TpsWarp = serde_json::from_str(&s).unwrap();
        assert_eq!(back, w);
    }
}
