
use super::affine::{apply_affine_to_minutiae, AffineTransform};
use super::mask::BinaryMask;
use super::minutiae::{MinutiaeSet, Provenance};
use super::tps::{apply_tps_to_minutiae, DroppedMinutia, TpsWarp};
use super::GeometryError;

/// The finger-placement simulation applied by the generator:
/// affine, then crop mask (in the post-affine frame), then TPS.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacementTransform {
    pub affine: AffineTransform,
    pub crop_mask: BinaryMask,
    pub tps: TpsWarp,
    pub seed: u64,
}

impl PlacementTransform {
    pub fn new(
        affine: AffineTransform,
        crop_mask: BinaryMask,
        tps: TpsWarp,
        seed: u64,
    ) -> Self {
        PlacementTransform {
            affine,
            crop_mask,
            tps,
            seed,
        }
    }

    /// Identity affine, full-frame crop, identity TPS.
    pub fn identity(width: u32, height: u32) -> Result<Self, GeometryError> {
        Ok(PlacementTransform {
            affine: AffineTransform::identity(),
            crop_mask: BinaryMask::filled(width, height, true)?,
            tps: TpsWarp::identity(width, height),
            seed: 0,
        })
    }

    pub fn frame(&self) -> (u32, u32) {
        self.crop_mask.dimensions()
    }
}

/// Keeps the minutiae whose rounded position lands on a foreground pixel.
pub fn apply_mask_to_minutiae(set: &MinutiaeSet, mask: &BinaryMask) -> MinutiaeSet {
    let (w, h) = mask.dimensions();
    let kept = set
        .iter()
        .filter(|m| m.pixel(w, h).is_some_and(|(x, y)| mask.get(x, y)))
        .cloned()
        .collect();
    set.with_minutiae(set.provenance, kept)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WarpedMask {
    pub mask: BinaryMask,
    /// Output pixels whose inverse TPS iteration did not converge; they are
    /// left as background.
    pub diverged: Vec<(u32, u32)>,
}

/// Image of `mask` under the placement, sampled by inverse mapping each
/// output pixel with nearest-neighbour lookup.
pub fn warp_mask(mask: &BinaryMask, t: &PlacementTransform) -> Result<WarpedMask, GeometryError> {
    let (w, h) = t.frame();
    let affine_inv = t.affine.inverse()?;
    let mut out = BinaryMask::new(w, h)?;
    let mut diverged = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let p = [f64::from(x), f64::from(y)];
            let Some(q) = t.tps.inverse_apply(p) else {
                diverged.push((x, y));
                continue;
            };
            if !t.crop_mask.get_signed(q[0].round() as i64, q[1].round() as i64) {
                continue;
            }
            let r = affine_inv.apply(q);
            if mask.get_signed(r[0].round() as i64, r[1].round() as i64) {
                out.set(x, y, true);
            }
        }
    }
    Ok(WarpedMask { mask: out, diverged })
}

/// Expected annotations: what a perfectly identity-preserving generator must
/// reproduce.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedAnnotations {
    pub minutiae: MinutiaeSet,
    pub mask: BinaryMask,
    /// Minutiae removed because the TPS Jacobian was singular there.
    pub dropped: Vec<DroppedMinutia>,
    pub diverged_pixels: usize,
}

/// Pushes ground-truth minutiae and mask through the placement transform.
///
/// Minutiae: affine, crop-mask filter, TPS, then a final filter on the
/// expected mask so every output minutia sits on expected foreground.
pub fn compute_expected(
    gt: &MinutiaeSet,
    gt_mask: &BinaryMask,
    t: &PlacementTransform,
) -> Result<ExpectedAnnotations, GeometryError> {
    if (gt.image_width, gt.image_height) != gt_mask.dimensions() {
        return Err(GeometryError::DimensionMismatch {
            left: (gt.image_width, gt.image_height),
            right: gt_mask.dimensions(),
        });
    }
    let warped = warp_mask(gt_mask, t)?;

    let (w, h) = t.frame();
    let mut moved = apply_affine_to_minutiae(gt, &t.affine)?;
    moved.image_width = w;
    moved.image_height = h;
    let cropped = apply_mask_to_minutiae(&moved, &t.crop_mask);
    let bent = apply_tps_to_minutiae(&cropped, &t.tps);
    let mut minutiae = apply_mask_to_minutiae(&bent.set, &warped.mask);
    minutiae.provenance = Provenance::Expected;

    Ok(ExpectedAnnotations {
        minutiae,
        mask: warped.mask,
        dropped: bent.dropped,
        diverged_pixels: warped.diverged.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{fit_tps, Minutia, MinutiaKind};

    fn m(id: &str, x: f64, y: f64) -> Minutia {
        Minutia::new(id, x, y, 30.0, MinutiaKind::Ending)
    }

    fn disk(w: u32, h: u32, cx: f64, cy: f64, r: f64) -> BinaryMask {
        BinaryMask::from_fn(w, h, |x, y| {
            (f64::from(x) - cx).hypot(f64::from(y) - cy) <= r
        })
        .unwrap()
    }

    #[test]
    fn full_mask_keeps_everything() {
        let s = MinutiaeSet::new(100, 100, Provenance::GroundTruth, vec![m("a", 1.0, 2.0), m("b", 99.0, 99.0)]).unwrap();
        let full = BinaryMask::filled(100, 100, true).unwrap();
        assert_eq!(apply_mask_to_minutiae(&s, &full), s);
        let none = BinaryMask::new(100, 100).unwrap();
        assert!(apply_mask_to_minutiae(&s, &none).is_empty());
    }

    #[test]
    fn left_half_mask() {
        let s = MinutiaeSet::new(100, 100, Provenance::GroundTruth, vec![m("a", 10.0, 50.0), m("b", 60.0, 50.0)]).unwrap();
        let left = BinaryMask::from_fn(100, 100, |x, _| x < 50).unwrap();
        let out = apply_mask_to_minutiae(&s, &left);
        assert_eq!(out.minutiae.len(), 1);
        assert_eq!(out.minutiae[0].id, "a");
    }

    #[test]
    fn identity_placement_keeps_mask() {
        let g = disk(64, 48, 30.0, 20.0, 15.0);
        let t = PlacementTransform::identity(64, 48).unwrap();
        let out = warp_mask(&g, &t).unwrap();
        assert_eq!(out.mask, g);
        assert!(out.diverged.is_empty());
    }

    #[test]
    fn half_crop_intersects() {
        let g = disk(64, 64, 32.0, 32.0, 20.0);
        let mut t = PlacementTransform::identity(64, 64).unwrap();
        t.crop_mask = BinaryMask::from_fn(64, 64, |_, y| y >= 32).unwrap();
        let out = warp_mask(&g, &t).unwrap();
        assert_eq!(out.mask, g.and(&t.crop_mask).unwrap());
    }

    #[test]
    fn translated_disk_shifts_and_preserves_area() {
        let g = disk(100, 100, 40.0, 50.0, 20.0);
        let mut t = PlacementTransform::identity(100, 100).unwrap();
        t.affine = AffineTransform::translation(10.0, 0.0);
        let out = warp_mask(&g, &t).unwrap();
        let before = g.count_ones() as f64;
        let after = out.mask.count_ones() as f64;
        assert!((after - before).abs() / before <= 0.02);
        assert!(out.mask.get(50, 50) && out.mask.get(69, 50) && !out.mask.get(21, 50));
        assert_eq!(out.mask, disk(100, 100, 50.0, 50.0, 20.0));
    }

    #[test]
    fn smaller_crop_never_adds_foreground() {
        let g = disk(80, 80, 40.0, 40.0, 30.0);
        let src = [[0.0, 0.0], [80.0, 0.0], [0.0, 80.0], [80.0, 80.0], [40.0, 40.0]];
        let mut dst = src;
        dst[4] = [43.0, 38.0];
        let tps = fit_tps(&src, &dst, 0.0).unwrap();
        let affine = AffineTransform::similarity_about(8.0, 1.02, [40.0, 40.0], [2.0, 1.0]).unwrap();
        let big = BinaryMask::from_fn(80, 80, |x, y| x > 5 && y > 5).unwrap();
        let small = BinaryMask::from_fn(80, 80, |x, y| x > 20 && y > 12).unwrap();
        let a = warp_mask(&g, &PlacementTransform::new(affine, big, tps.clone(), 0)).unwrap();
        let b = warp_mask(&g, &PlacementTransform::new(affine, small, tps, 0)).unwrap();
        assert!(b.mask.count_ones() <= a.mask.count_ones());
        assert!(b.mask.is_subset_of(&a.mask));
    }

    #[test]
    fn identity_expected_filters_by_mask() {
        let mask = BinaryMask::from_fn(50, 50, |x, _| x < 25).unwrap();
        let gt = MinutiaeSet::new(50, 50, Provenance::GroundTruth, vec![m("in", 5.0, 5.0), m("out", 40.0, 5.0)]).unwrap();
        let t = PlacementTransform::identity(50, 50).unwrap();
        let exp = compute_expected(&gt, &mask, &t).unwrap();
        assert_eq!(exp.mask, mask);
        assert_eq!(exp.minutiae.minutiae, vec![gt.minutiae[0].clone()]);
        assert_eq!(exp.minutiae.provenance, Provenance::Expected);
    }

    #[test]
    fn translation_shifts_all() {
        let mask = BinaryMask::filled(100, 100, true).unwrap();
        let gt = MinutiaeSet::new(100, 100, Provenance::GroundTruth, vec![m("a", 20.0, 30.0), m("b", 50.0, 60.0)]).unwrap();
        let mut t = PlacementTransform::identity(100, 100).unwrap();
        t.affine = AffineTransform::translation(7.0, -3.0);
        let exp = compute_expected(&gt, &mask, &t).unwrap();
        assert_eq!(exp.minutiae.len(), 2);
        for (a, b) in exp.minutiae.iter().zip(gt.iter()) {
            assert!((a.x - b.x - 7.0).abs() < 1e-9 && (a.y - b.y + 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn top_half_crop_counts_bottom_minutiae() {
        let mask = BinaryMask::filled(100, 100, true).unwrap();
        let pts = [(10.0, 10.0), (20.0, 49.0), (30.0, 50.0), (40.0, 75.0), (50.0, 99.0), (60.0, 5.0)];
        let gt = MinutiaeSet::new(
            100,
            100,
            Provenance::GroundTruth,
            pts.iter().enumerate().map(|(i, &(x, y))| m(&format!("m{i}"), x, y)).collect(),
        )
        .unwrap();
        let mut t = PlacementTransform::identity(100, 100).unwrap();
        t.crop_mask = BinaryMask::from_fn(100, 100, |_, y| y >= 50).unwrap();
        let exp = compute_expected(&gt, &mask, &t).unwrap();
        // hand count: y in {50, 75, 99}
        assert_eq!(exp.minutiae.len(), 3);
    }
}
