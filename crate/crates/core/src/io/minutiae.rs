//! Minutiae files.
//!
//! Canonical form is a JSON document:
//! `{"image_width", "image_height", "provenance", "minutiae": [{"id", "x", "y", "theta_degrees", "kind"}]}`.
//! A line-oriented form is also accepted: a `width height` line followed by
//! one `id x y theta_degrees kind` record per line (`#` starts a comment).

use std::path::Path;

use crate::geometry::{Minutia, MinutiaKind, MinutiaeSet, Provenance};

use super::IoError;

pub fn parse_minutiae(text: &str, default_provenance: Provenance) -> Result<MinutiaeSet, IoError> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        let set: MinutiaeSet = serde_json::from_str(trimmed)?;
        set.validate()?;
        return Ok(set);
    }
    let mut lines = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .enumerate()
        .filter(|(_, l)| !l.is_empty());
    let (_, dims) = lines
        .next()
        .ok_or_else(|| IoError::Format("empty minutiae file".into()))?;
    let dims: Vec<u32> = dims
        .split_whitespace()
        .map(str::parse)
        .collect::<Result<_, _>>()
        .map_err(|_| IoError::Format("first line must be `width height`".into()))?;
    let [width, height] = dims[..] else {
        return Err(IoError::Format("first line must be `width height`".into()));
    };
    let mut minutiae = Vec::new();
    for (lineno, line) in lines {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 5 {
            return Err(IoError::Format(format!(
                "line {}: expected `id x y theta kind`",
                lineno + 1
            )));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| IoError::Format(format!("line {}: bad number {s:?}", lineno + 1)))
        };
        let kind = match f[4].to_ascii_lowercase().as_str() {
            "ending" | "e" => MinutiaKind::Ending,
            "bifurcation" | "b" => MinutiaKind::Bifurcation,
            "unknown" | "u" => MinutiaKind::Unknown,
            other => {
                return Err(IoError::Format(format!(
                    "line {}: unknown minutia kind {other:?}",
                    lineno + 1
                )))
            }
        };
        minutiae.push(Minutia::new(f[0], num(f[1])?, num(f[2])?, num(f[3])?, kind));
    }
    Ok(MinutiaeSet::new(width, height, default_provenance, minutiae)?)
}

pub fn read_minutiae(path: &Path, default_provenance: Provenance) -> Result<MinutiaeSet, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::at(path, e))?;
    parse_minutiae(&text, default_provenance)
}

pub fn write_minutiae(path: &Path, set: &MinutiaeSet) -> Result<(), IoError> {
    let text = serde_json::to_string_pretty(set)?;
    std::fs::write(path, text + "\n").map_err(|e| IoError::at(path, e))
}
