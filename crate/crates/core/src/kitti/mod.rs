//! Readers and writers for the KITTI file zoo: calibration text files,
//! object label files, Velodyne point-cloud dumps, and 16-bit depth rasters.
//!
//! All parsers are pure functions over byte slices. They never panic on
//! arbitrary input; every failure is a typed [`Error`](crate::Error).

mod calib;
mod labels;
mod raster;
mod velodyne;

pub use calib::{parse_calibration, write_calibration, CalibrationSet};
pub use labels::{parse_labels, write_labels, Category, LabelRecord};
pub use raster::{
    read_depth_pgm16, write_depth_pgm16, write_rgb_ppm, DepthMap, RgbImage, DEPTH_SCALE,
};
pub use velodyne::{parse_velodyne, write_velodyne, Point, PointCloud};
