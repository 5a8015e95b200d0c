//! Velodyne `.bin` point clouds: a flat stream of little-endian `f32`
//! quadruples `(x, y, z, reflectance)`.

use crate::error::{Error, Result};

/// One LiDAR return in sensor coordinates (meters, reflectance unitless).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub reflectance: f64,
}

/// An ordered list of LiDAR returns. May be empty.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<Point>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Decodes a Velodyne byte stream. Point count is always `len / 16` and the
/// file order is preserved.
pub fn parse_velodyne(bytes: &[u8]) -> Result<PointCloud> {
    if bytes.len() % 16 != 0 {
        return Err(Error::TruncatedRecord { len: bytes.len() });
    }
    let points = bytes
        .chunks_exact(16)
        .map(|rec| {
            let f = |i: usize| {
                f32::from_le_bytes([rec[i], rec[i + 1], rec[i + 2], rec[i + 3]]) as f64
            };
            Point {
                x: f(0),
                y: f(4),
                z: f(8),
                reflectance: f(12),
            }
        })
        .collect();
    Ok(PointCloud { points })
}

/// Encodes a cloud back to the on-disk `f32` quadruple layout.
pub fn write_velodyne(cloud: &PointCloud) -> Vec<u8> {
    let mut out = Vec::with_capacity(cloud.len() * 16);
    for p in &cloud.points {
        for v in [p.x, p.y, p.z, p.reflectance] {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}
