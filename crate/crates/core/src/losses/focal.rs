//! Focal loss over per-class probabilities, with its analytic gradient.

use crate::error::{Error, Result};

/// Probabilities are clamped to `[PROB_EPS, 1 - PROB_EPS]` before the logs.
pub const PROB_EPS: f64 = 1e-7;

fn check_lens(v: &[f64], v_hat: &[f64]) -> Result<()> {
    if v.len() != v_hat.len() {
        return Err(Error::ShapeMismatch {
            a: vec![v.len()],
            b: vec![v_hat.len()],
        });
    }
    Ok(())
}

/// Focal loss
/// `-sum_i [ v_i (1 - p_i)^g log p_i + (1 - v_i) p_i^g log(1 - p_i) ]`
/// with `p` the clamped predicted probabilities. `gamma = 0` reduces to
/// binary cross-entropy.
pub fn focal_loss(v: &[f64], v_hat: &[f64], gamma: f64) -> Result<f64> {
    check_lens(v, v_hat)?;
    let mut acc = 0.0;
    for (&vi, &raw) in v.iter().zip(v_hat) {
        let p = raw.clamp(PROB_EPS, 1.0 - PROB_EPS);
        acc -= vi * (1.0 - p).powf(gamma) * p.ln() + (1.0 - vi) * p.powf(gamma) * (1.0 - p).ln();
    }
    Ok(acc)
}

/// Analytic gradient of [`focal_loss`] with respect to each predicted
/// probability. Valid away from the clamp boundaries.
pub fn focal_grad(v: &[f64], v_hat: &[f64], gamma: f64) -> Result<Vec<f64>> {
    check_lens(v, v_hat)?;
    Ok(v
        .iter()
        .zip(v_hat)
        .map(|(&vi, &raw)| {
            let p = raw.clamp(PROB_EPS, 1.0 - PROB_EPS);
            let pos = -gamma * (1.0 - p).powf(gamma - 1.0) * p.ln() + (1.0 - p).powf(gamma) / p;
            let neg = gamma * p.powf(gamma - 1.0) * (1.0 - p).ln() - p.powf(gamma) / (1.0 - p);
            -(vi * pos + (1.0 - vi) * neg)
        })
        .collect())
}
