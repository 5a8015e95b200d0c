//! Projection of LiDAR points onto the camera image plane.
//!
//! Points go through the rectified-camera chain
//! `cam = R0_rect * (Tr_velo_to_cam * [x y z 1]^T)`, are culled at a near
//! plane of 0.1 m, and land on the pixel grid through the P2 projection
//! matrix. Colliding points keep the smallest depth so nearer surfaces win.

use std::time::{Duration, Instant};

use crate::error::Result;
use crate::kitti::{CalibrationSet, DepthMap, PointCloud};

/// Rectified depths closer than this are treated as behind the camera.
pub const NEAR_PLANE_M: f64 = 0.1;

/// A validated projection target: calibration plus output raster size.
#[derive(Debug, Clone)]
pub struct Projector {
    calib: CalibrationSet,
    width: usize,
    height: usize,
    /// Precomposed `R0_rect * Tr_velo_to_cam`, row-major 3x4.
    rect_from_velo: [[f64; 4]; 3],
}

impl Projector {
    /// Builds a projector, rejecting zero-sized rasters and calibration sets
    /// that violate their structural invariants.
    pub fn new(calib: CalibrationSet, width: usize, height: usize) -> Result<Self> {
        calib.validate()?;
        assert!(width > 0 && height > 0, "raster dims must be positive");
        let mut rect_from_velo = [[0.0; 4]; 3];
        for i in 0..3 {
            for j in 0..4 {
                let mut acc = 0.0;
                for k in 0..3 {
                    acc += calib.r0_rect[i][k] * calib.tr_velo_to_cam[k][j];
                }
                rect_from_velo[i][j] = acc;
            }
        }
        Ok(Projector {
            calib,
            width,
            height,
            rect_from_velo,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn calibration(&self) -> &CalibrationSet {
        &self.calib
    }
}

/// Projects a point cloud into a sparse depth map.
///
/// Per-pixel collisions keep the minimum depth; pixels no point hits stay
/// invalid (0.0). The result does not depend on point order.
pub fn project_points(proj: &Projector, cloud: &PointCloud) -> DepthMap {
    let mut map = DepthMap::new(proj.width, proj.height);
    let m = &proj.rect_from_velo;
    let p2 = &proj.calib.p2;

    for p in &cloud.points {
        let cx = m[0][0] * p.x + m[0][1] * p.y + m[0][2] * p.z + m[0][3];
        let cy = m[1][0] * p.x + m[1][1] * p.y + m[1][2] * p.z + m[1][3];
        let cz = m[2][0] * p.x + m[2][1] * p.y + m[2][2] * p.z + m[2][3];
        if !(cz > NEAR_PLANE_M) {
            continue; // behind or too close; also drops non-finite input
        }
        let hx = p2[0][0] * cx + p2[0][1] * cy + p2[0][2] * cz + p2[0][3];
        let hy = p2[1][0] * cx + p2[1][1] * cy + p2[1][2] * cz + p2[1][3];
        let hz = p2[2][0] * cx + p2[2][1] * cy + p2[2][2] * cz + p2[2][3];
        if !(hz > 1e-12) {
            continue;
        }
        let u = (hx / hz).round();
        let v = (hy / hz).round();
        if !u.is_finite() || !v.is_finite() || u < 0.0 || v < 0.0 {
            continue;
        }
        let (u, v) = (u as usize, v as usize);
        if u >= proj.width || v >= proj.height {
            continue;
        }
        let slot = &mut map.values[v * proj.width + u];
        if *slot == 0.0 || cz < *slot {
            *slot = cz;
        }
    }
    map
}

/// [`project_points`] plus the elapsed wall time.
pub fn project_points_timed(proj: &Projector, cloud: &PointCloud) -> (DepthMap, Duration) {
    let start = Instant::now();
    let map = project_points(proj, cloud);
    (map, start.elapsed())
}
