//! Noise schedules for the forward corruption process.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// Precomputed cumulative noise-retention table over `T` discrete steps.
///
/// `alpha_bar[0] = 1`, strictly decreasing, and strictly positive at `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    /// `T + 1` entries, indexed by timestep.
    pub alpha_bar: Vec<f64>,
}

impl NoiseSchedule {
    /// Number of diffusion steps `T`.
    pub fn steps(&self) -> usize {
        self.alpha_bar.len() - 1
    }

    /// Checks the structural invariants.
    pub fn validate(&self) -> Result<()> {
        if self.alpha_bar.len() < 2 || self.alpha_bar[0] != 1.0 {
            return Err(Error::BadSteps);
        }
        for pair in self.alpha_bar.windows(2) {
            if !(pair[1] < pair[0]) || !(pair[1] > 0.0) {
                return Err(Error::BadSteps);
            }
        }
        Ok(())
    }
}

/// The squared-cosine schedule:
/// `alpha_bar(t) = f(t) / f(0)` with
/// `f(t) = cos^2(((t/T + s) / (1 + s)) * pi/2)`, `s = 0.008`.
pub fn cosine_schedule(t_steps: usize) -> Result<NoiseSchedule> {
    if t_steps == 0 {
        return Err(Error::BadSteps);
    }
    let s = 0.008;
    let f = |t: f64| {
        let angle = ((t / t_steps as f64 + s) / (1.0 + s)) * FRAC_PI_2;
        angle.cos().powi(2)
    };
    let f0 = f(0.0);
    let alpha_bar = (0..=t_steps).map(|t| f(t as f64) / f0).collect();
    Ok(NoiseSchedule { alpha_bar })
}
