//! KITTI calibration file parsing.
//!
//! Calibration files are plain text, one matrix per line:
//!
//! ```text
//! P2: 7.215377e+02 0.000000e+00 6.095593e+02 ...
//! R0_rect: 9.999239e-01 9.837760e-03 ...
//! Tr_velo_to_cam: 7.533745e-03 ...
//! ```
//!
//! The parser is key-order-insensitive and ignores keys it does not need
//! (real files carry P0, P1, P3, and sometimes free-form metadata lines).

use crate::error::{Error, Result};

/// Projection and extrinsic matrices for one KITTI frame.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSet {
    /// Camera-2 projection matrix (pixels), row-major 3x4.
    pub p2: [[f64; 4]; 3],
    /// Rectifying rotation, row-major 3x3.
    pub r0_rect: [[f64; 3]; 3],
    /// LiDAR-to-camera extrinsic, row-major 3x4 (meters).
    pub tr_velo_to_cam: [[f64; 4]; 3],
}

impl CalibrationSet {
    /// Identity projection `[I|0]` with identity rectification and extrinsics.
    pub fn identity() -> Self {
        let mut p2 = [[0.0; 4]; 3];
        let mut r0 = [[0.0; 3]; 3];
        let mut tr = [[0.0; 4]; 3];
        for i in 0..3 {
            p2[i][i] = 1.0;
            r0[i][i] = 1.0;
            tr[i][i] = 1.0;
        }
        CalibrationSet {
            p2,
            r0_rect: r0,
            tr_velo_to_cam: tr,
        }
    }

    /// Checks the structural invariants: `r0_rect` orthonormal within 1e-3
    /// (max-norm of `R^T R - I`) and `p2[2][2]` finite and nonzero.
    pub fn validate(&self) -> Result<()> {
        let r = &self.r0_rect;
        for i in 0..3 {
            for j in 0..3 {
                let mut dot = 0.0;
                for k in 0..3 {
                    dot += r[k][i] * r[k][j];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                if !dot.is_finite() || (dot - expect).abs() > 1e-3 {
                    return Err(Error::MalformedValue { line: 0 });
                }
            }
        }
        let pivot = self.p2[2][2];
        if !pivot.is_finite() || pivot == 0.0 {
            return Err(Error::MalformedValue { line: 0 });
        }
        Ok(())
    }
}

fn parse_row(line_no: usize, tokens: &[&str], key: &str, expected: usize) -> Result<Vec<f64>> {
    if tokens.len() != expected {
        return Err(Error::WrongArity {
            key: key.to_string(),
            expected,
            got: tokens.len(),
        });
    }
    tokens
        .iter()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::MalformedValue { line: line_no })
        })
        .collect()
}

/// Parses a KITTI-style calibration file.
///
/// `P2` (12 values), `R0_rect` (9), and `Tr_velo_to_cam` (12) must all be
/// present; any other key is skipped without inspecting its values.
pub fn parse_calibration(text: &[u8]) -> Result<CalibrationSet> {
    let text = String::from_utf8_lossy(text);
    let mut p2: Option<Vec<f64>> = None;
    let mut r0: Option<Vec<f64>> = None;
    let mut tr: Option<Vec<f64>> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, rest)) = line.split_once(':') else {
            continue; // metadata line without a key, skip
        };
        let key = key.trim();
        let tokens: Vec<&str> = rest.split_whitespace().collect();
        match key {
            "P2" => p2 = Some(parse_row(line_no, &tokens, key, 12)?),
            "R0_rect" => r0 = Some(parse_row(line_no, &tokens, key, 9)?),
            "Tr_velo_to_cam" => tr = Some(parse_row(line_no, &tokens, key, 12)?),
            _ => {}
        }
    }

    let p2 = p2.ok_or_else(|| Error::MissingKey("P2".into()))?;
    let r0 = r0.ok_or_else(|| Error::MissingKey("R0_rect".into()))?;
    let tr = tr.ok_or_else(|| Error::MissingKey("Tr_velo_to_cam".into()))?;

    let mut set = CalibrationSet::identity();
    for i in 0..3 {
        for j in 0..4 {
            set.p2[i][j] = p2[i * 4 + j];
            set.tr_velo_to_cam[i][j] = tr[i * 4 + j];
        }
        for j in 0..3 {
            set.r0_rect[i][j] = r0[i * 3 + j];
        }
    }
    Ok(set)
}

/// Writes a calibration set back out in canonical form (the three keys this
/// crate reads, one per line, `{:e}`-free plain decimal).
pub fn write_calibration(calib: &CalibrationSet) -> Vec<u8> {
    fn row(values: impl Iterator<Item = f64>) -> String {
        values
            .map(|v| format!("{v}"))
            .collect::<Vec<_>>()
            .join(" ")
    }
    let mut out = String::new();
    out.push_str(&format!(
        "P2: {}\n",
        row(calib.p2.iter().flat_map(|r| r.iter().copied()))
    ));
    out.push_str(&format!(
        "R0_rect: {}\n",
        row(calib.r0_rect.iter().flat_map(|r| r.iter().copied()))
    ));
    out.push_str(&format!(
        "Tr_velo_to_cam: {}\n",
        row(calib.tr_velo_to_cam.iter().flat_map(|r| r.iter().copied()))
    ));
    out.into_bytes()
}
