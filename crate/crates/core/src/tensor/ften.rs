//! The FTEN fixture container: `b"FTEN"`, four little-endian `u32` dims
//! `(B, N, H, W)`, then the row-major `f64` payload, little-endian.

use crate::error::{Error, Result};
use crate::tensor::FeatureTensor;

const MAGIC: &[u8; 4] = b"FTEN";

/// Serializes a tensor to the FTEN byte layout.
pub fn write_ften(t: &FeatureTensor) -> Vec<u8> {
    let (b, n, h, w) = t.shape;
    let mut out = Vec::with_capacity(20 + t.data.len() * 8);
    out.extend_from_slice(MAGIC);
    for dim in [b, n, h, w] {
        out.extend_from_slice(&(dim as u32).to_le_bytes());
    }
    for v in &t.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Deserializes an FTEN byte stream.
pub fn read_ften(bytes: &[u8]) -> Result<FeatureTensor> {
    if bytes.len() < 20 || &bytes[..4] != MAGIC {
        return Err(Error::MalformedHeader("missing FTEN magic".into()));
    }
    let dim = |i: usize| {
        u32::from_le_bytes([bytes[4 + i * 4], bytes[5 + i * 4], bytes[6 + i * 4], bytes[7 + i * 4]])
            as usize
    };
    let shape = (dim(0), dim(1), dim(2), dim(3));
    let count = shape
        .0
        .checked_mul(shape.1)
        .and_then(|v| v.checked_mul(shape.2))
        .and_then(|v| v.checked_mul(shape.3))
        .ok_or_else(|| Error::MalformedHeader("dimension overflow".into()))?;
    let payload = &bytes[20..];
    if payload.len() != count * 8 {
        return Err(Error::MalformedHeader(format!(
            "payload holds {} bytes, expected {}",
            payload.len(),
            count * 8
        )));
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(FeatureTensor { shape, data })
}
