use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::geometry::{fit_tps, AffineTransform, BinaryMask, PlacementTransform, TpsWarp};

/// Ranges for synthetic placement transforms. Every range is symmetric about
/// the identity; all-zero ranges yield the identity transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlacementSamplingConfig {
    pub width: u32,
    pub height: u32,
    /// Rotation drawn from `[-r, r]` degrees.
    pub rotation_deg: f64,
    /// Scale drawn from `[1 - d, 1 + d]`.
    pub scale_delta: f64,
    /// Per-axis shift drawn from `[-t, t]` pixels.
    pub translation: f64,
    /// Control points per side of the TPS grid.
    pub tps_grid: u32,
    /// Upper bound on the displacement of each interior control point.
    pub tps_jitter: f64,
    /// Each side of the rectangular crop is inset by up to this fraction of
    /// the frame.
    pub crop_margin: f64,
}

impl PlacementSamplingConfig {
    pub fn new(width: u32, height: u32) -> Self {
        PlacementSamplingConfig {
            width,
            height,
            rotation_deg: 30.0,
            scale_delta: 0.1,
            translation: 40.0,
            tps_grid: 4,
            tps_jitter: 8.0,
            crop_margin: 0.15,
        }
    }

    pub fn zeroed(width: u32, height: u32) -> Self {
        PlacementSamplingConfig {
            width,
            height,
            rotation_deg: 0.0,
            scale_delta: 0.0,
            translation: 0.0,
            tps_grid: 4,
            tps_jitter: 0.0,
            crop_margin: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::InvalidSampling(m));
        if self.width == 0 || self.height == 0 {
            return bad("frame must be non-empty".into());
        }
        for (name, v) in [
            ("rotation_deg", self.rotation_deg),
            ("translation", self.translation),
            ("tps_jitter", self.tps_jitter),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        if !(0.0..1.0).contains(&self.scale_delta) {
            return bad(format!("scale_delta must lie in [0, 1), got {}", self.scale_delta));
        }
        if !(0.0..0.5).contains(&self.crop_margin) {
            return bad(format!("crop_margin must lie in [0, 0.5), got {}", self.crop_margin));
        }
        if self.tps_grid < 2 {
            return bad("tps_grid must be at least 2".into());
        }
        Ok(())
    }
}

fn symmetric(rng: &mut ChaCha8Rng, r: f64) -> f64 {
    if r > 0.0 {
        rng.gen_range(-r..=r)
    } else {
        0.0
    }
}

/// Samples a placement transform deterministically from `seed`.
pub fn make_placement(seed: u64, cfg: &PlacementSamplingConfig) -> Result<PlacementTransform, PipelineError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (f64::from(cfg.width), f64::from(cfg.height));
    let center = [(w - 1.0) / 2.0, (h - 1.0) / 2.0];

    let angle = symmetric(&mut rng, cfg.rotation_deg);
    let scale = 1.0 + symmetric(&mut rng, cfg.scale_delta);
    let shift = [symmetric(&mut rng, cfg.translation), symmetric(&mut rng, cfg.translation)];
    let affine = AffineTransform::similarity_about(angle, scale, center, shift)?;

    let inset = |rng: &mut ChaCha8Rng, extent: f64| {
        if cfg.crop_margin > 0.0 {
            rng.gen_range(0.0..=cfg.crop_margin) * extent
        } else {
            0.0
        }
    };
    let (left, right) = (inset(&mut rng, w), inset(&mut rng, w));
    let (top, bottom) = (inset(&mut rng, h), inset(&mut rng, h));
    let crop_mask = BinaryMask::from_fn(cfg.width, cfg.height, |x, y| {
        let (x, y) = (f64::from(x), f64::from(y));
        x >= left && x < w - right && y >= top && y < h - bottom
    })?;

    let tps = if cfg.tps_jitter > 0.0 && cfg.tps_grid > 2 {
        let g = cfg.tps_grid;
        let mut source = Vec::new();
        let mut target = Vec::new();
        for j in 0..g {
            for i in 0..g {
                let p = [
                    (w - 1.0) * f64::from(i) / f64::from(g - 1),
                    (h - 1.0) * f64::from(j) / f64::from(g - 1),
                ];
                let interior = i > 0 && j > 0 && i < g - 1 && j < g - 1;
                let q = if interior {
                    let phi = rng.gen_range(0.0..std::f64::consts::TAU);
                    let r = rng.gen_range(0.0..=cfg.tps_jitter);
                    [p[0] + r * phi.cos(), p[1] + r * phi.sin()]
                } else {
                    p
                };
                source.push(p);
                target.push(q);
            }
        }
        fit_tps(&source, &target, 0.0)?
    } else {
        TpsWarp::identity(cfg.width, cfg.height)
    };

    Ok(PlacementTransform::new(affine, crop_mask, tps, seed))
}
