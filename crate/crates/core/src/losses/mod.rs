//! The detection loss stack: focal classification loss, L1 and generalized
//! IoU box regression, their weighted composition, optimal bipartite
//! matching, and a finite-difference gradient harness.

mod focal;
mod giou;
mod gradcheck;
mod hungarian;

pub use focal::{focal_grad, focal_loss, PROB_EPS};
pub use giou::{cxcywh_to_xyxy, giou, giou_grad, iou, BoxXyxy};
pub use gradcheck::{grad_check, FD_STEP};
pub use hungarian::{assignment_cost, match_hungarian, MatchResult};

use serde::Serialize;

use crate::diffusion::BoxSet;
use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// Weights of the loss composition
/// `total = l_cls * cls + l_reg * (l_l1 * l1 + l_giou * (1 - giou))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub lambda_cls: f64,
    pub lambda_reg: f64,
    pub lambda_l1: f64,
    pub lambda_giou: f64,
    /// Focal modulation exponent.
    pub gamma: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            lambda_cls: 2.0,
            lambda_reg: 1.0,
            lambda_l1: 5.0,
            lambda_giou: 2.0,
            gamma: 2.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        for v in [
            self.lambda_cls,
            self.lambda_reg,
            self.lambda_l1,
            self.lambda_giou,
            self.gamma,
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::BadRange { min: v, max: 0.0 });
            }
        }
        Ok(())
    }
}

/// Mean absolute coordinate difference between two equally sized box sets
/// (normalized `cxcywh` space, mean over all `4N` coordinates).
pub fn l1_loss(a: &BoxSet, b: &BoxSet) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::CountMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let mut acc = 0.0;
    for (pa, pb) in a.boxes.iter().zip(&b.boxes) {
        for c in 0..4 {
            acc += (pa[c] - pb[c]).abs();
        }
    }
    Ok(acc / (4 * a.len()) as f64)
}

/// Gradient of [`l1_loss`] with respect to the first argument's
/// coordinates, flattened box-major. Valid away from coordinate ties.
pub fn l1_grad(a: &BoxSet, b: &BoxSet) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::CountMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let scale = 1.0 / (4 * a.len()) as f64;
    Ok(a.boxes
        .iter()
        .zip(&b.boxes)
        .flat_map(|(pa, pb)| (0..4).map(|c| (pa[c] - pb[c]).signum() * scale))
        .collect())
}

/// Per-term loss report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossBreakdown {
    pub cls: f64,
    pub l1: f64,
    pub giou: f64,
    pub total: f64,
    pub matches: usize,
}

fn one_hot(class: usize, n_classes: usize) -> Vec<f64> {
    let mut v = vec![0.0; n_classes];
    v[class] = 1.0;
    v
}

/// Composes the detection loss over a matched prediction/ground-truth set.
///
/// Matched predictions are classified against their target's one-hot label
/// and regressed with L1 + (1 - giou); unmatched predictions contribute
/// classification loss against the all-zero background label only. The L1
/// and giou terms are means over the matched pairs.
pub fn total_loss(
    preds: &BoxSet,
    gts: &BoxSet,
    gt_classes: &[usize],
    matching: &MatchResult,
    weights: &LossWeights,
) -> Result<LossBreakdown> {
    weights.validate()?;
    let scores = preds
        .scores
        .as_ref()
        .ok_or_else(|| Error::DimMismatch("predictions carry no class scores".into()))?;
    if gts.len() != gt_classes.len() {
        return Err(Error::CountMismatch {
            left: gts.len(),
            right: gt_classes.len(),
        });
    }

    let mut cls = 0.0;
    for &(p, g) in &matching.pairs {
        let target = one_hot(gt_classes[g], scores[p].len());
        cls += focal_loss(&target, &scores[p], weights.gamma)?;
    }
    for &p in &matching.unmatched_predictions {
        let background = vec![0.0; scores[p].len()];
        cls += focal_loss(&background, &scores[p], weights.gamma)?;
    }

    let (mut l1, mut giou_term) = (0.0, 0.0);
    if !matching.pairs.is_empty() {
        let matched_preds = BoxSet::from_boxes(
            matching.pairs.iter().map(|&(p, _)| preds.boxes[p]).collect(),
        );
        let matched_gts = BoxSet::from_boxes(
            matching.pairs.iter().map(|&(_, g)| gts.boxes[g]).collect(),
        );
        l1 = l1_loss(&matched_preds, &matched_gts)?;
        for (pb, gb) in matched_preds.boxes.iter().zip(&matched_gts.boxes) {
            giou_term += 1.0 - giou(&cxcywh_to_xyxy(*pb), &cxcywh_to_xyxy(*gb))?;
        }
        giou_term /= matching.pairs.len() as f64;
    }

    let total = weights.lambda_cls * cls
        + weights.lambda_reg * (weights.lambda_l1 * l1 + weights.lambda_giou * giou_term);
    Ok(LossBreakdown {
        cls,
        l1,
        giou: giou_term,
        total,
        matches: matching.pairs.len(),
    })
}

/// Pairwise matching cost `2 * focal + 5 * l1 + 2 * (1 - giou)` between
/// every prediction and every ground-truth box, the input to
/// [`match_hungarian`].
pub fn matching_cost(
    preds: &BoxSet,
    gts: &BoxSet,
    gt_classes: &[usize],
    gamma: f64,
) -> Result<Matrix> {
    let scores = preds
        .scores
        .as_ref()
        .ok_or_else(|| Error::DimMismatch("predictions carry no class scores".into()))?;
    if gts.len() != gt_classes.len() {
        return Err(Error::CountMismatch {
            left: gts.len(),
            right: gt_classes.len(),
        });
    }
    let mut cost = Matrix::zeros(preds.len(), gts.len());
    for (p, (pb, sc)) in preds.boxes.iter().zip(scores).enumerate() {
        for (g, gb) in gts.boxes.iter().enumerate() {
            let target = one_hot(gt_classes[g], sc.len());
            let cls = focal_loss(&target, sc, gamma)?;
            let l1: f64 = (0..4).map(|c| (pb[c] - gb[c]).abs()).sum::<f64>() / 4.0;
            let g_term = 1.0 - giou(&cxcywh_to_xyxy(*pb), &cxcywh_to_xyxy(*gb))?;
            cost.set(p, g, 2.0 * cls + 5.0 * l1 + 2.0 * g_term);
        }
    }
    Ok(cost)
}
