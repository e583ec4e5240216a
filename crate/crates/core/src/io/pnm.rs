//! Binary PGM (P5) and PBM (P4) masks. Any nonzero sample is foreground.

use std::io::{Read, Write};
use std::path::Path;

use crate::geometry::BinaryMask;

use super::IoError;

struct Header {
    magic: [u8; 2],
    width: u32,
    height: u32,
    maxval: u32,
    data_offset: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header, IoError> {
    if bytes.len() < 2 || bytes[0] != b'P' || !matches!(bytes[1], b'4' | b'5') {
        return Err(IoError::Format("expected a P4 or P5 header".into()));
    }
    let magic = [bytes[0], bytes[1]];
    let wanted = if magic[1] == b'5' { 3 } else { 2 };
    let mut fields = Vec::with_capacity(3);
    let mut i = 2;
    while fields.len() < wanted {
        match bytes.get(i) {
            None => return Err(IoError::Format("truncated header".into())),
            Some(b'#') => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            Some(c) if c.is_ascii_whitespace() => i += 1,
            Some(c) if c.is_ascii_digit() => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let text = std::str::from_utf8(&bytes[start..i]).expect("ascii digits");
                let value: u32 = text
                    .parse()
                    .map_err(|_| IoError::Format(format!("bad header number {text:?}")))?;
                fields.push(value);
            }
            Some(c) => return Err(IoError::Format(format!("unexpected byte {c:#x} in header"))),
        }
    }
    // exactly one whitespace byte separates the header from the raster
    if !bytes.get(i).is_some_and(|c| c.is_ascii_whitespace()) {
        return Err(IoError::Format("missing header terminator".into()));
    }
    let maxval = if wanted == 3 { fields[2] } else { 1 };
    if maxval == 0 || maxval > 65535 {
        return Err(IoError::Format(format!("invalid maxval {maxval}")));
    }
    Ok(Header {
        magic,
        width: fields[0],
        height: fields[1],
        maxval,
        data_offset: i + 1,
    })
}

pub fn decode_mask(bytes: &[u8]) -> Result<BinaryMask, IoError> {
    let h = parse_header(bytes)?;
    let data = &bytes[h.data_offset..];
    let (w, ht) = (h.width as usize, h.height as usize);
    let mut mask = BinaryMask::new(h.width, h.height)?;
    match h.magic[1] {
        b'5' => {
            let bps = if h.maxval > 255 { 2 } else { 1 };
            let need = w * ht * bps;
            if data.len() < need {
                return Err(IoError::Format(format!(
                    "raster has {} bytes, expected {need}",
                    data.len()
                )));
            }
            for (i, sample) in data[..need].chunks_exact(bps).enumerate() {
                if sample.iter().any(|b| *b != 0) {
                    mask.set((i % w) as u32, (i / w) as u32, true);
                }
            }
        }
        _ => {
            let stride = w.div_ceil(8);
            if data.len() < stride * ht {
                return Err(IoError::Format("truncated P4 raster".into()));
            }
            for y in 0..ht {
                let row = &data[y * stride..(y + 1) * stride];
                for x in 0..w {
                    if row[x / 8] & (0x80 >> (x % 8)) != 0 {
                        mask.set(x as u32, y as u32, true);
                    }
                }
            }
        }
    }
    Ok(mask)
}

/// P5 with samples in `{0, 255}`.
pub fn encode_mask(mask: &BinaryMask) -> Vec<u8> {
    encode_gray(mask.width(), mask.height(), mask.pixels().map(|(_, _, b)| if b { 255 } else { 0 }))
}

pub fn encode_gray(width: u32, height: u32, samples: impl Iterator<Item = u8>) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(samples);
    out
}

pub fn read_mask(path: &Path) -> Result<BinaryMask, IoError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| IoError::at(path, e))?;
    decode_mask(&bytes)
}

pub fn write_mask(path: &Path, mask: &BinaryMask) -> Result<(), IoError> {
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&encode_mask(mask)))
        .map_err(|e| IoError::at(path, e))
}
