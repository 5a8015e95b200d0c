//! Central finite-difference verification of analytic gradients.

use crate::error::{Error, Result};

/// Probe step for the central difference.
pub const FD_STEP: f64 = 1e-5;

/// Compares `analytic` against the central finite difference of `loss`
/// around `x`, coordinate by coordinate. Returns the maximum relative
/// error `|g_fd - g_an| / max(1, |g_fd|)`.
///
/// The loss must be differentiable in an `FD_STEP` neighborhood of `x`;
/// callers are responsible for sampling away from kinks.
pub fn grad_check(
    loss: impl Fn(&[f64]) -> f64,
    x: &[f64],
    analytic: &[f64],
) -> Result<f64> {
    if x.len() != analytic.len() {
        return Err(Error::ShapeMismatch {
            a: vec![x.len()],
            b: vec![analytic.len()],
        });
    }
    let mut probe = x.to_vec();
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        probe[i] = x[i] + FD_STEP;
        let hi = loss(&probe);
        probe[i] = x[i] - FD_STEP;
        let lo = loss(&probe);
        probe[i] = x[i];

        let fd = (hi - lo) / (2.0 * FD_STEP);
        if !fd.is_finite() || !analytic[i].is_finite() {
            return Err(Error::NonFiniteGradient);
        }
        let err = (fd - analytic[i]).abs() / fd.abs().max(1.0);
        worst = worst.max(err);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_gradient_is_exact() {
        let x = vec![0.5, -1.5, 2.0, 0.0];
        let loss = |v: &[f64]| 0.5 * v.iter().map(|a| a * a).sum::<f64>();
        let analytic = x.clone();
        let err = grad_check(loss, &x, &analytic).unwrap();
        assert!(err < 1e-7, "{err}");
    }

    #[test]
    fn wrong_gradient_is_flagged() {
        let x = vec![1.0, 2.0];
        let loss = |v: &[f64]| v.iter().sum::<f64>();
        let err = grad_check(loss, &x, &[1.0, 3.0]).unwrap();
        assert!(err > 0.5);
    }

    #[test]
    fn non_finite_detected() {
        let x = vec![0.0];
        let loss = |v: &[f64]| 1.0 / v[0];
        assert_eq!(
            grad_check(loss, &x, &[0.0]),
            Err(Error::NonFiniteGradient)
        );
    }
}
