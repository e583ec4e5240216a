use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::GeometryError;

/// Ridge feature class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MinutiaKind {
    Ending,
    Bifurcation,
    Unknown,
}

/// Where a minutiae set came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    GroundTruth,
    Expected,
    Generated,
    HumanEdited,
}

/// A single minutia. Position in pixels, orientation in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Minutia {
    pub id: String,
    pub x: f64,
    pub y: f64,
    /// Degrees in `[0, 360)`.
    #[serde(rename = "theta_degrees", alias = "theta")]
    pub theta: f64,
    pub kind: MinutiaKind,
}

impl Minutia {
    pub fn new(id: impl Into<String>, x: f64, y: f64, theta: f64, kind: MinutiaKind) -> Self {
        Minutia {
            id: id.into(),
            x,
            y,
            theta: normalize_degrees(theta),
            kind,
        }
    }

    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    /// Pixel the minutia falls on under round-to-nearest, if inside the frame.
    pub fn pixel(&self, width: u32, height: u32) -> Option<(u32, u32)> {
        let px = self.x.round();
        let py = self.y.round();
        if !(px.is_finite() && py.is_finite()) {
            return None;
        }
        if px < 0.0 || py < 0.0 || px >= f64::from(width) || py >= f64::from(height) {
            return None;
        }
        Some((px as u32, py as u32))
    }
}

/// Wraps an angle in degrees into `[0, 360)`.
pub fn normalize_degrees(theta: f64) -> f64 {
    let t = theta.rem_euclid(360.0);
    // rem_euclid can return 360.0 for tiny negative inputs
    if t >= 360.0 {
        0.0
    } else {
        t
    }
}

/// Smallest absolute difference between two orientations, in degrees.
pub fn angular_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// An ordered set of minutiae annotated on an image frame.
///
/// Sets built through [`MinutiaeSet::new`] are fully validated. Sets produced
/// by geometric transforms may transiently carry points that left the frame;
/// the mask stages of the expected-set pipeline remove them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinutiaeSet {
    pub image_width: u32,
    pub image_height: u32,
    pub provenance: Provenance,
    pub minutiae: Vec<Minutia>,
}

impl MinutiaeSet {
    pub fn new(
        image_width: u32,
        image_height: u32,
        provenance: Provenance,
        minutiae: Vec<Minutia>,
    ) -> Result<Self, GeometryError> {
        let set = MinutiaeSet {
            image_width,
            image_height,
            provenance,
            minutiae,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn empty(image_width: u32, image_height: u32, provenance: Provenance) -> Self {
        MinutiaeSet {
            image_width,
            image_height,
            provenance,
            minutiae: Vec::new(),
        }
    }

    pub(crate) fn with_minutiae(&self, provenance: Provenance, minutiae: Vec<Minutia>) -> Self {
        MinutiaeSet {
            image_width: self.image_width,
            image_height: self.image_height,
            provenance,
            minutiae,
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.image_width == 0 || self.image_height == 0 {
            return Err(GeometryError::EmptyFrame);
        }
        let mut seen = HashSet::with_capacity(self.minutiae.len());
        let w = f64::from(self.image_width);
        let h = f64::from(self.image_height);
        for m in &self.minutiae {
            if !seen.insert(m.id.as_str()) {
                return Err(GeometryError::DuplicateMinutiaId(m.id.clone()));
            }
            if !(m.x.is_finite() && m.y.is_finite() && m.theta.is_finite()) {
                return Err(GeometryError::NonFiniteMinutia(m.id.clone()));
            }
            if m.x < 0.0 || m.y < 0.0 || m.x >= w || m.y >= h {
                return Err(GeometryError::MinutiaOutOfFrame {
                    id: m.id.clone(),
                    x: m.x,
                    y: m.y,
                });
            }
            if !(0.0..360.0).contains(&m.theta) {
                return Err(GeometryError::OrientationOutOfRange(m.id.clone()));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.minutiae.len()
    }

    pub fn is_empty(&self) -> bool {
        self.minutiae.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Minutia> {
        self.minutiae.iter().find(|m| m.id == id)
    }

    pub fn contains_id(&self, id: &str) -> bool {
        self.get(id).is_some()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Minutia> {
        self.minutiae.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_negative_and_wrapped_angles() {
        assert_eq!(normalize_degrees(-90.0), 270.0);
        assert_eq!(normalize_degrees(720.0), 0.0);
        assert_eq!(normalize_degrees(-1e-20), 0.0);
        assert!(normalize_degrees(359.999) < 360.0);
    }

    #[test]
    fn angular_difference_wraps() {
        assert_eq!(angular_difference(350.0, 10.0), 20.0);
        assert_eq!(angular_difference(10.0, 350.0), 20.0);
        assert_eq!(angular_difference(0.0, 180.0), 180.0);
    }

    #[test]
    fn rejects_duplicate_ids() {
        let m = Minutia::new("a", 1.0, 1.0, 0.0, MinutiaKind::Ending);
        let err = MinutiaeSet::new(10, 10, Provenance::GroundTruth, vec![m.clone(), m]).unwrap_err();
        assert!(matches!(err, GeometryError::DuplicateMinutiaId(id) if id == "a"));
    }

    #[test]
    fn rejects_out_of_frame() {
        let m = Minutia::new("a", 10.0, 1.0, 0.0, MinutiaKind::Ending);
        assert!(matches!(
            MinutiaeSet::new(10, 10, Provenance::GroundTruth, vec![m]),
            Err(GeometryError::MinutiaOutOfFrame { .. })
        ));
    }

    #[test]
    fn pixel_rounds_to_nearest() {
        let m = Minutia::new("a", 9.4, 0.5, 0.0, MinutiaKind::Ending);
        assert_eq!(m.pixel(10, 10), Some((9, 1)));
        let edge = Minutia::new("b", 9.6, 0.0, 0.0, MinutiaKind::Ending);
        assert_eq!(edge.pixel(10, 10), None);
    }
}
