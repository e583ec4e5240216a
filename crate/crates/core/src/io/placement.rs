//! Placement transform files.
//!
//! ```json
//! {"frame": [w, h], "affine": [[a, b, tx], [c, d, ty]], "crop_mask_ref": "crop.pgm",
//!  "tps": {...}, "seed": 7}
//! ```
//! `crop_mask_ref` is resolved relative to the placement file; `null` means a
//! full-frame crop.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geometry::{AffineTransform, BinaryMask, PlacementTransform, TpsWarp};

use super::pnm::{read_mask, write_mask};
use super::IoError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlacementDocument {
    pub frame: [u32; 2],
    pub affine: AffineTransform,
    pub crop_mask_ref: Option<String>,
    pub tps: TpsWarp,
    pub seed: u64,
}

pub fn read_placement(path: &Path) -> Result<PlacementTransform, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::at(path, e))?;
    let doc: PlacementDocument = serde_json::from_str(&text)?;
    let [w, h] = doc.frame;
    let crop_mask = match &doc.crop_mask_ref {
        Some(r) => {
            let base = path.parent().unwrap_or_else(|| Path::new("."));
            let mask = read_mask(&base.join(r))?;
            if mask.dimensions() != (w, h) {
                return Err(IoError::Format(format!(
                    "crop mask is {:?}, placement frame is {:?}",
                    mask.dimensions(),
                    (w, h)
                )));
            }
            mask
        }
        None => BinaryMask::filled(w, h, true)?,
    };
    Ok(PlacementTransform::new(doc.affine, crop_mask, doc.tps, doc.seed))
}

/// Writes `<stem>.json` and, unless the crop is full-frame, `<stem>.crop.pgm`
/// beside it.
pub fn write_placement(path: &Path, t: &PlacementTransform) -> Result<(), IoError> {
    let (w, h) = t.frame();
    let full = t.crop_mask.count_ones() == w as usize * h as usize;
    let crop_mask_ref = if full {
        None
    } else {
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("placement");
        let name = format!("{stem}.crop.pgm");
        let target = path.with_file_name(&name);
        write_mask(&target, &t.crop_mask)?;
        Some(name)
    };
    let doc = PlacementDocument {
        frame: [w, h],
        affine: t.affine,
        crop_mask_ref,
        tps: t.tps.clone(),
        seed: t.seed,
    };
    let text = serde_json::to_string_pretty(&doc)?;
    std::fs::write(path, text + "\n").map_err(|e| IoError::at(path, e))
}
