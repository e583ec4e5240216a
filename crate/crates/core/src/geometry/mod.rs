//! Minutiae, masks, and the placement transforms that carry ground-truth
//! annotations into the generator's output frame.

mod affine;
mod mask;
mod minutiae;
mod placement;
mod tps;

pub use affine::{apply_affine_to_minutiae, AffineTransform, SINGULAR_EPS};
pub use mask::BinaryMask;
pub use minutiae::{angular_difference, normalize_degrees, Minutia, MinutiaKind, MinutiaeSet, Provenance};
pub use placement::{
    apply_mask_to_minutiae, compute_expected, warp_mask, ExpectedAnnotations, PlacementTransform,
    WarpedMask,
};
pub use tps::{
    apply_tps_to_minutiae, fit_tps, kernel as tps_kernel, DroppedMinutia, TpsMinutiaeResult, TpsWarp,
    INVERSE_MAX_ITERATIONS, INVERSE_TOLERANCE, JACOBIAN_STEP,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("frame dimensions must be positive")]
    EmptyFrame,
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch { left: (u32, u32), right: (u32, u32) },
    #[error("mask data length {found} does not match {expected:?}")]
    MaskDimensions { expected: (u32, u32), found: usize },
    #[error("duplicate minutia id {0:?}")]
    DuplicateMinutiaId(String),
    #[error("minutia {0:?} has a non-finite field")]
    NonFiniteMinutia(String),
    #[error("minutia {0:?} orientation outside [0, 360)")]
    OrientationOutOfRange(String),
    #[error("minutia {id:?} at ({x}, {y}) lies outside the frame")]
    MinutiaOutOfFrame { id: String, x: f64, y: f64 },
    #[error("affine transform is not invertible (det = {0})")]
    SingularTransform(f64),
    #[error("TPS needs at least 3 matching control points (source {source_len}, target {target_len})")]
    ControlPointCount { source_len: usize, target_len: usize },
    #[error("degenerate control points: {0}")]
    DegenerateControlPoints(String),
}
