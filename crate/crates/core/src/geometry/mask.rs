use bitvec::prelude::*;

use super::GeometryError;

/// Row-major foreground bitmap; a set bit is fingerprint foreground.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    bits: BitVec<u64, Lsb0>,
}

impl BinaryMask {
    pub fn new(width: u32, height: u32) -> Result<Self, GeometryError> {
        Self::filled(width, height, false)
    }

    pub fn filled(width: u32, height: u32, value: bool) -> Result<Self, GeometryError> {
        if width == 0 || height == 0 {
            return Err(GeometryError::EmptyFrame);
        }
        let n = width as usize * height as usize;
        Ok(BinaryMask {
            width,
            height,
            bits: BitVec::repeat(value, n),
        })
    }

    /// Builds a mask by evaluating `f(x, y)` on every pixel.
    pub fn from_fn(
        width: u32,
        height: u32,
        mut f: impl FnMut(u32, u32) -> bool,
    ) -> Result<Self, GeometryError> {
        let mut mask = Self::new(width, height)?;
        for y in 0..height {
            for x in 0..width {
                if f(x, y) {
                    mask.set(x, y, true);
                }
            }
        }
        Ok(mask)
    }

    /// Row-major booleans, length must equal `width * height`.
    pub fn from_bools(width: u32, height: u32, values: &[bool]) -> Result<Self, GeometryError> {
        let mut mask = Self::new(width, height)?;
        if values.len() != mask.bits.len() {
            return Err(GeometryError::MaskDimensions {
                expected: (width, height),
                found: values.len(),
            });
        }
        for (i, &v) in values.iter().enumerate() {
            mask.bits.set(i, v);
        }
        Ok(mask)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    fn index(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        x < self.width && y < self.height && self.bits[self.index(x, y)]
    }

    /// Lookup at signed coordinates; anything outside the frame is background.
    pub fn get_signed(&self, x: i64, y: i64) -> bool {
        if x < 0 || y < 0 {
            return false;
        }
        self.get(x as u32, y as u32)
    }

    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        assert!(x < self.width && y < self.height, "pixel ({x}, {y}) outside mask");
        let i = self.index(x, y);
        self.bits.set(i, value);
    }

    pub fn count_ones(&self) -> usize {
        self.bits.count_ones()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.not_any()
    }

    fn check_same_dims(&self, other: &BinaryMask) -> Result<(), GeometryError> {
        if self.dimensions() != other.dimensions() {
            return Err(GeometryError::DimensionMismatch {
                left: self.dimensions(),
                right: other.dimensions(),
            });
        }
        Ok(())
    }

    pub fn and(&self, other: &BinaryMask) -> Result<BinaryMask, GeometryError> {
        self.check_same_dims(other)?;
        let mut out = self.clone();
        out.bits &= other.bits.as_bitslice();
        Ok(out)
    }

    pub fn or(&self, other: &BinaryMask) -> Result<BinaryMask, GeometryError> {
        self.check_same_dims(other)?;
        let mut out = self.clone();
        out.bits |= other.bits.as_bitslice();
        Ok(out)
    }

    /// `self ∧ ¬other`.
    pub fn and_not(&self, other: &BinaryMask) -> Result<BinaryMask, GeometryError> {
        self.check_same_dims(other)?;
        let mut out = self.clone();
        for (mut bit, o) in out.bits.iter_mut().zip(other.bits.iter()) {
            if *o {
                *bit = false;
            }
        }
        Ok(out)
    }

    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.dimensions() == other.dimensions()
            && self.bits.iter().zip(other.bits.iter()).all(|(a, b)| !*a || *b)
    }

    /// Iterates `(x, y, value)` in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = (u32, u32, bool)> + '_ {
        let w = self.width as usize;
        self.bits
            .iter()
            .enumerate()
            .map(move |(i, b)| ((i % w) as u32, (i / w) as u32, *b))
    }
}
