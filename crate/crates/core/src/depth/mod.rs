//! Depth densification and colorization.
//!
//! [`complete`] turns the sparse projected depth map into a dense one with
//! classical morphology; [`colorize_viridis`] renders dense depth as the
//! 3-channel image a pretrained RGB encoder expects.

mod completion;
mod viridis;

pub use completion::{complete, complete_trace, dilate_min, erode_max, StructuringElement};
pub use viridis::VIRIDIS;

use crate::error::{Error, Result};
use crate::kitti::{DepthMap, RgbImage};

/// Default colorization range in meters, covering the usable LiDAR span.
pub const DEFAULT_COLOR_RANGE_M: (f64, f64) = (0.0, 80.0);

/// Maps depths onto the viridis ramp.
///
/// Depths are normalized to `[d_min, d_max]`, clamped, and linearly
/// interpolated into the 256-entry table. Invalid pixels take table entry 0.
pub fn colorize_viridis(map: &DepthMap, d_min: f64, d_max: f64) -> Result<RgbImage> {
    if !(d_min < d_max) {
        return Err(Error::BadRange {
            min: d_min,
            max: d_max,
        });
    }
    let span = d_max - d_min;
    let pixels = map
        .values
        .iter()
        .map(|&d| {
            if d <= 0.0 {
                return VIRIDIS[0];
            }
            let t = ((d - d_min) / span).clamp(0.0, 1.0);
            let f = t * 255.0;
            let i0 = f.floor() as usize;
            let i1 = (i0 + 1).min(255);
            let frac = f - i0 as f64;
            let mut rgb = [0u8; 3];
            for c in 0..3 {
                let lo = VIRIDIS[i0][c] as f64;
                let hi = VIRIDIS[i1][c] as f64;
                rgb[c] = (lo + (hi - lo) * frac).round() as u8;
            }
            rgb
        })
        .collect();
    Ok(RgbImage {
        width: map.width,
        height: map.height,
        pixels,
    })
}

/// Table index a depth lands on before interpolation; exposed for the
/// monotonicity property.
pub fn viridis_index(d: f64, d_min: f64, d_max: f64) -> usize {
    let t = ((d - d_min) / (d_max - d_min)).clamp(0.0, 1.0);
    (t * 255.0).floor() as usize
}
