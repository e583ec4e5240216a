//! File formats: masks, minutiae sets, placement transforms.

mod minutiae;
mod placement;
mod pnm;

pub use minutiae::{parse_minutiae, read_minutiae, write_minutiae};
pub use placement::{read_placement, write_placement, PlacementDocument};
pub use pnm::{decode_mask, encode_gray, encode_mask, read_mask, write_mask};

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::geometry::GeometryError;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl IoError {
    pub(crate) fn at(path: &Path, source: std::io::Error) -> Self {
        IoError::File {
            path: path.to_path_buf(),
            source,
        }
    }
}
