//! KITTI object label parsing.
//!
//! One object per line, 15 whitespace-separated fields:
//! category, truncated, occluded, alpha, bbox (left top right bottom),
//! dimensions (h w l), location (x y z), rotation_y.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// KITTI object categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    Car,
    Van,
    Truck,
    Pedestrian,
    #[serde(rename = "Person_sitting")]
    PersonSitting,
    Cyclist,
    Tram,
    Misc,
    DontCare,
}

impl Category {
    pub const ALL: [Category; 9] = [
        Category::Car,
        Category::Van,
        Category::Truck,
        Category::Pedestrian,
        Category::PersonSitting,
        Category::Cyclist,
        Category::Tram,
        Category::Misc,
        Category::DontCare,
    ];

    /// Canonical KITTI spelling.
    pub fn as_str(&self) -> &'static str {
        match self {
            Category::Car => "Car",
            Category::Van => "Van",
            Category::Truck => "Truck",
            Category::Pedestrian => "Pedestrian",
            Category::PersonSitting => "Person_sitting",
            Category::Cyclist => "Cyclist",
            Category::Tram => "Tram",
            Category::Misc => "Misc",
            Category::DontCare => "DontCare",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Car" => Ok(Category::Car),
            "Van" => Ok(Category::Van),
            "Truck" => Ok(Category::Truck),
            "Pedestrian" => Ok(Category::Pedestrian),
            "Person_sitting" | "Person Sitting" => Ok(Category::PersonSitting),
            "Cyclist" => Ok(Category::Cyclist),
            "Tram" => Ok(Category::Tram),
            "Misc" => Ok(Category::Misc),
            "DontCare" => Ok(Category::DontCare),
            other => Err(Error::UnknownCategory(other.to_string())),
        }
    }
}

/// One annotated object.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelRecord {
    pub category: Category,
    /// Fraction of the object leaving image boundaries, in `[0, 1]`.
    pub truncated: f64,
    /// Occlusion state 0 (visible) .. 3 (unknown).
    pub occluded: i32,
    /// Observation angle, radians.
    pub alpha: f64,
    /// 2D bounding box `(left, top, right, bottom)` in pixels.
    pub bbox: [f64; 4],
    /// Object dimensions `(height, width, length)` in meters.
    pub dimensions: [f64; 3],
    /// Object center `(x, y, z)` in the camera frame, meters.
    pub location: [f64; 3],
    /// Yaw around the camera-frame Y axis, radians.
    pub rotation_y: f64,
}

fn parse_real(token: &str, line: usize) -> Result<f64> {
    let v: f64 = token
        .parse()
        .map_err(|_| Error::MalformedValue { line })?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::MalformedValue { line })
    }
}

/// Parses a KITTI label file into one record per nonempty line.
///
/// Both `Person_sitting` and the two-token `Person Sitting` spelling are
/// accepted; the canonical enum is emitted either way.
pub fn parse_labels(text: &[u8]) -> Result<Vec<LabelRecord>> {
    let text = String::from_utf8_lossy(text);
    let mut records = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }

        // "Person Sitting" splits the category across two tokens.
        let (category_token, fields): (String, &[&str]) =
            if tokens.len() == 16 && tokens[0] == "Person" && tokens[1] == "Sitting" {
                ("Person Sitting".to_string(), &tokens[2..])
            } else {
                (tokens[0].to_string(), &tokens[1..])
            };
        if fields.len() != 14 {
            return Err(Error::WrongFieldCount {
                line,
                got: tokens.len(),
            });
        }

        let category: Category = category_token.parse()?;
        let mut reals = [0.0f64; 14];
        for (slot, token) in reals.iter_mut().zip(fields) {
            *slot = parse_real(token, line)?;
        }

        let occluded = reals[1];
        if occluded.fract() != 0.0 || !(0.0..=3.0).contains(&occluded) {
            return Err(Error::MalformedValue { line });
        }
        let bbox = [reals[3], reals[4], reals[5], reals[6]];
        if bbox[0] > bbox[2] || bbox[1] > bbox[3] {
            return Err(Error::MalformedValue { line });
        }

        records.push(LabelRecord {
            category,
            truncated: reals[0],
            occluded: occluded as i32,
            alpha: reals[2],
            bbox,
            dimensions: [reals[7], reals[8], reals[9]],
            location: [reals[10], reals[11], reals[12]],
            rotation_y: reals[13],
        });
    }
    Ok(records)
}

/// Writes records in canonical KITTI form (enum spelling, plain decimals).
pub fn write_labels(records: &[LabelRecord]) -> Vec<u8> {
    let mut out = String::new();
    for r in records {
        out.push_str(&format!(
            "{} {} {} {} {} {} {} {} {} {} {} {} {} {} {}\n",
            r.category,
            r.truncated,
            r.occluded,
            r.alpha,
            r.bbox[0],
            r.bbox[1],
            r.bbox[2],
            r.bbox[3],
            r.dimensions[0],
            r.dimensions[1],
            r.dimensions[2],
            r.location[0],
            r.location[1],
            r.location[2],
            r.rotation_y,
        ));
    }
    out.into_bytes()
}
