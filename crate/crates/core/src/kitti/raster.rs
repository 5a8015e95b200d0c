//! Depth rasters and RGB images in the portable anymap containers.
//!
//! Depth maps use the KITTI depth-benchmark quantization: a 16-bit sample
//! holds `round(depth_m * 256)`, with 0 marking an invalid pixel. The byte
//! container is a binary portable graymap (`P5`, maxval 65535, big-endian
//! samples); RGB output is a binary portable pixmap (`P6`, maxval 255).

use crate::error::{Error, Result};

/// Fixed-point scale of the 16-bit depth encoding (counts per meter).
pub const DEPTH_SCALE: f64 = 256.0;

/// A 2D raster of per-pixel depth in meters. `0.0` marks an invalid pixel;
/// valid depths are strictly positive and finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    pub width: usize,
    pub height: usize,
    /// Row-major, `width * height` entries.
    pub values: Vec<f64>,
}

impl DepthMap {
    /// An all-invalid map.
    pub fn new(width: usize, height: usize) -> Self {
        DepthMap {
            width,
            height,
            values: vec![0.0; width * height],
        }
    }

    pub fn from_values(width: usize, height: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), width * height, "value count must match dims");
        DepthMap {
            width,
            height,
            values,
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, depth: f64) {
        self.values[y * self.width + x] = depth;
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.get(x, y) > 0.0
    }

    /// Number of valid (nonzero) pixels.
    pub fn valid_count(&self) -> usize {
        self.values.iter().filter(|&&v| v > 0.0).count()
    }
}

/// A packed 8-bit RGB image.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    /// Row-major `(r, g, b)` triples, `width * height` entries.
    pub pixels: Vec<[u8; 3]>,
}

/// Encodes a depth map as a 16-bit binary PGM.
///
/// Fails with `DepthOutOfRange` if any value is negative, non-finite, or
/// quantizes above the 16-bit ceiling (depths must be `< 256` m).
pub fn write_depth_pgm16(map: &DepthMap) -> Result<Vec<u8>> {
    let mut out = format!("P5\n{} {}\n65535\n", map.width, map.height).into_bytes();
    out.reserve(map.values.len() * 2);
    for &d in &map.values {
        if !d.is_finite() || d < 0.0 {
            return Err(Error::DepthOutOfRange { depth: d });
        }
        let stored = (d * DEPTH_SCALE).round();
        if stored > 65535.0 {
            return Err(Error::DepthOutOfRange { depth: d });
        }
        out.extend_from_slice(&(stored as u16).to_be_bytes());
    }
    Ok(out)
}

/// Pulls the next whitespace-delimited ASCII token, skipping `#` comments.
fn next_token(bytes: &[u8], pos: &mut usize) -> Result<usize> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::MalformedHeader("unexpected end of header".into()));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .map_err(|_| Error::MalformedHeader("non-ASCII header token".into()))?
        .parse::<usize>()
        .map_err(|_| Error::MalformedHeader("non-numeric header field".into()))
}

/// Decodes a 16-bit binary PGM into a depth map (`stored / 256` meters).
pub fn read_depth_pgm16(bytes: &[u8]) -> Result<DepthMap> {
    if !bytes.starts_with(b"P5") {
        return Err(Error::MalformedHeader("missing P5 magic".into()));
    }
    let mut pos = 2;
    let width = next_token(bytes, &mut pos)?;
    let height = next_token(bytes, &mut pos)?;
    let maxval = next_token(bytes, &mut pos)?;
    if maxval != 65535 {
        return Err(Error::MalformedHeader(format!(
            "maxval {maxval}, expected 65535"
        )));
    }
    // exactly one whitespace byte separates the header from the samples
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::MalformedHeader("missing sample separator".into()));
    }
    pos += 1;

    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::MalformedHeader("dimension overflow".into()))?;
    let expected = n
        .checked_mul(2)
        .ok_or_else(|| Error::MalformedHeader("dimension overflow".into()))?;
    let payload = &bytes[pos..];
    if payload.len() != expected {
        return Err(Error::MalformedHeader(format!(
            "payload holds {} bytes, expected {expected}",
            payload.len()
        )));
    }
    let values = payload
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / DEPTH_SCALE)
        .collect();
    Ok(DepthMap {
        width,
        height,
        values,
    })
}

/// Encodes an RGB image as a binary PPM (`P6`, maxval 255).
pub fn write_rgb_ppm(img: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.reserve(img.pixels.len() * 3);
    for px in &img.pixels {
        out.extend_from_slice(px);
    }
    out
}
