//! Binary PGM (P5) depth images.
//!
//! The header is `P5`, width, height and maxval separated by whitespace, with
//! `#` comments allowed between fields, then exactly one whitespace byte
//! before the raster. Maxval 1..=255 uses one byte per pixel; 256..=65535
//! uses two bytes, most significant first. A raw sample `s` maps to depth
//! `s / maxval · max_range`, so the brightest value is the farthest.

use crate::depth::DepthImage;
use crate::reward::FreeSpaceMask;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PgmError {
    #[error("empty file")]
    Empty,
    #[error("not a binary PGM (expected magic P5)")]
    BadMagic,
    #[error("bad header: {0}")]
    Header(String),
    #[error("raster truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("{extra} unexpected bytes after the raster")]
    Trailing { extra: usize },
    #[error("sample {value} exceeds maxval {maxval}")]
    SampleRange { value: u16, maxval: u16 },
    #[error("max_range must be positive and finite")]
    BadMaxRange,
}

/// Raw samples as stored in the file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub samples: Vec<u16>,
}

impl Pgm {
    pub fn parse(bytes: &[u8]) -> Result<Self, PgmError> {
        if bytes.is_empty() {
            return Err(PgmError::Empty);
        }
        if !bytes.starts_with(b"P5") {
            return Err(PgmError::BadMagic);
        }
        let mut pos = 2;
        let mut fields = [0usize; 3];
        for (i, name) in ["width", "height", "maxval"].iter().enumerate() {
            skip_space_and_comments(bytes, &mut pos);
            let start = pos;
            while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                pos += 1;
            }
            if start == pos {
                return Err(PgmError::Header(format!("missing {name}")));
            }
            let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
            fields[i] = text
                .parse()
                .map_err(|_| PgmError::Header(format!("{name} `{text}` is too large")))?;
        }
        let [width, height, maxval] = fields;
        if width == 0 || height == 0 {
            return Err(PgmError::Header(format!(
                "zero-sized image {width}x{height}"
            )));
        }
        if !(1..=65535).contains(&maxval) {
            return Err(PgmError::Header(format!(
                "maxval {maxval} outside 1..=65535"
            )));
        }
        match bytes.get(pos) {
            Some(b) if b.is_ascii_whitespace() => pos += 1,
            _ => return Err(PgmError::Header("no whitespace after maxval".into())),
        }
        let bpp = if maxval < 256 { 1 } else { 2 };
        let expected = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(bpp))
            .ok_or_else(|| PgmError::Header("image too large".into()))?;
        let raster = &bytes[pos..];
        if raster.len() < expected {
            return Err(PgmError::Truncated {
                expected,
                found: raster.len(),
            });
        }
        if raster.len() > expected {
            return Err(PgmError::Trailing {
                extra: raster.len() - expected,
            });
        }
        let samples: Vec<u16> = if bpp == 1 {
            raster.iter().map(|&b| b as u16).collect()
        } else {
            raster
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]))
                .collect()
        };
        let maxval = maxval as u16;
        if let Some(&value) = samples.iter().find(|&&s| s > maxval) {
            return Err(PgmError::SampleRange { value, maxval });
        }
        Ok(Self {
            width,
            height,
            maxval,
            samples,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n{}\n", self.width, self.height, self.maxval).into_bytes();
        if self.maxval < 256 {
            out.extend(self.samples.iter().map(|&s| s as u8));
        } else {
            out.extend(self.samples.iter().flat_map(|s| s.to_be_bytes()));
        }
        out
    }

    pub fn to_depth(&self, max_range: f64) -> Result<DepthImage, PgmError> {
        if !(max_range.is_finite() && max_range > 0.0) {
            return Err(PgmError::BadMaxRange);
        }
        let scale = self.maxval as f64;
        let values = self
            .samples
            .iter()
            .map(|&s| s as f64 / scale * max_range)
            .collect();
        DepthImage::new(self.width, self.height, max_range, values)
            .map_err(|e| PgmError::Header(e.to_string()))
    }

    /// 8-bit mask image: 255 where free, 0 elsewhere.
    pub fn from_mask(mask: &FreeSpaceMask) -> Self {
        Self {
            width: mask.width,
            height: mask.height,
            maxval: 255,
            samples: mask.bits.iter().map(|&b| if b { 255 } else { 0 }).collect(),
        }
    }
}

fn skip_space_and_comments(bytes: &[u8], pos: &mut usize) {
    while *pos < bytes.len() {
        match bytes[*pos] {
            b'#' => {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
            }
            b if b.is_ascii_whitespace() => *pos += 1,
            _ => break,
        }
    }
}

pub fn read_depth(bytes: &[u8], max_range: f64) -> Result<DepthImage, PgmError> {
    Pgm::parse(bytes)?.to_depth(max_range)
}
