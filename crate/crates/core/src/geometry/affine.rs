use serde::{Deserialize, Serialize};

use super::minutiae::{normalize_degrees, MinutiaeSet, Provenance};
use super::GeometryError;

/// Determinant magnitude below which a linear map is treated as singular.
pub const SINGULAR_EPS: f64 = 1e-9;

/// 2-D affine map `[[a, b, tx], [c, d, ty]]` acting on column vectors `(x, y, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 3]; 2]", into = "[[f64; 3]; 2]")]
pub struct AffineTransform {
    m: [[f64; 3]; 2],
}

impl TryFrom<[[f64; 3]; 2]> for AffineTransform {
    type Error = GeometryError;

    fn try_from(m: [[f64; 3]; 2]) -> Result<Self, Self::Error> {
        AffineTransform::new(m)
    }
}

impl From<AffineTransform> for [[f64; 3]; 2] {
    fn from(t: AffineTransform) -> Self {
        t.m
    }
}

impl AffineTransform {
    pub fn new(m: [[f64; 3]; 2]) -> Result<Self, GeometryError> {
        if m.iter().flatten().any(|v| !v.is_finite()) {
            return Err(GeometryError::SingularTransform(f64::NAN));
        }
        let t = AffineTransform { m };
        let det = t.determinant();
        if det.abs() < SINGULAR_EPS {
            return Err(GeometryError::SingularTransform(det));
        }
        Ok(t)
    }

    pub fn identity() -> Self {
        AffineTransform {
            m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
        }
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        AffineTransform {
            m: [[1.0, 0.0, tx], [0.0, 1.0, ty]],
        }
    }

    /// Counter-clockwise rotation (in the x-right, y-down pixel convention the
    /// angle still advances from +x towards +y) about `center`.
    pub fn rotation_about(degrees: f64, center: [f64; 2]) -> Self {
        Self::similarity_about(degrees, 1.0, center, [0.0, 0.0])
            .expect("unit-scale rotation is invertible")
    }

    /// `T(center + shift) · R(degrees) · S(scale) · T(-center)`.
    pub fn similarity_about(
        degrees: f64,
        scale: f64,
        center: [f64; 2],
        shift: [f64; 2],
    ) -> Result<Self, GeometryError> {
        let (s, c) = degrees.to_radians().sin_cos();
        let a = scale * c;
        let b = -scale * s;
        let cc = scale * s;
        let d = scale * c;
        let tx = center[0] + shift[0] - (a * center[0] + b * center[1]);
        let ty = center[1] + shift[1] - (cc * center[0] + d * center[1]);
        Self::new([[a, b, tx], [cc, d, ty]])
    }

    pub fn matrix(&self) -> [[f64; 3]; 2] {
        self.m
    }

    pub fn linear(&self) -> [[f64; 2]; 2] {
        [[self.m[0][0], self.m[0][1]], [self.m[1][0], self.m[1][1]]]
    }

    pub fn determinant(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        let m = &self.m;
        [
            m[0][0] * p[0] + m[0][1] * p[1] + m[0][2],
            m[1][0] * p[0] + m[1][1] * p[1] + m[1][2],
        ]
    }

    pub fn inverse(&self) -> Result<Self, GeometryError> {
        let det = self.determinant();
        if det.abs() < SINGULAR_EPS {
            return Err(GeometryError::SingularTransform(det));
        }
        let [[a, b, tx], [c, d, ty]] = self.m;
        let ia = d / det;
        let ib = -b / det;
        let ic = -c / det;
        let id = a / det;
        Ok(AffineTransform {
            m: [
                [ia, ib, -(ia * tx + ib * ty)],
                [ic, id, -(ic * tx + id * ty)],
            ],
        })
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &AffineTransform) -> Result<Self, GeometryError> {
        let a = &self.m;
        let b = &other.m;
        Self::new([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
                a[0][0] * b[0][2] + a[0][1] * b[1][2] + a[0][2],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
                a[1][0] * b[0][2] + a[1][1] * b[1][2] + a[1][2],
            ],
        ])
    }
}

/// Orientation of the unit vector at `theta` after pushing it through `jacobian`.
pub(crate) fn push_direction(jacobian: [[f64; 2]; 2], theta_degrees: f64) -> f64 {
    if jacobian == [[1.0, 0.0], [0.0, 1.0]] {
        return theta_degrees;
    }
    let (s, c) = theta_degrees.to_radians().sin_cos();
    let vx = jacobian[0][0] * c + jacobian[0][1] * s;
    let vy = jacobian[1][0] * c + jacobian[1][1] * s;
    normalize_degrees(vy.atan2(vx).to_degrees())
}

/// Maps every minutia position through `t` and rotates its orientation by the
/// local action of the linear part. The result is marked `Expected`.
pub fn apply_affine_to_minutiae(
    set: &MinutiaeSet,
    t: &AffineTransform,
) -> Result<MinutiaeSet, GeometryError> {
    let det = t.determinant();
    if det.abs() < SINGULAR_EPS {
        return Err(GeometryError::SingularTransform(det));
    }
    let lin = t.linear();
    let minutiae = set
        .iter()
        .map(|m| {
            let [x, y] = t.apply(m.position());
            let mut out = m.clone();
            out.x = x;
            out.y = y;
            out.theta = push_direction(lin, m.theta);
            out
        })
        .collect();
    Ok(set.with_minutiae(Provenance::Expected, minutiae))
}
