//! Noise-to-box machinery: normalized box sets, the forward corruption
//! process, proposal padding, and deterministic reverse sampling against a
//! pluggable denoiser.
//!
//! Boxes live in two affinely related spaces. "Image space" is normalized
//! center form `(cx, cy, w, h)` in `[0, 1]`; "signal space" maps that to
//! `[-scale, scale]`, where the diffusion process operates.

mod denoisers;
mod sampler;
mod schedule;

pub use denoisers::{GtOracleDenoiser, IdentityDenoiser, NoisyOracleDenoiser};
pub use sampler::{ladder_from_count, reverse_sample, trace_to_jsonl, Denoiser, SamplerConfig, TraceEntry};
pub use schedule::{cosine_schedule, NoiseSchedule};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Default affine scale between normalized boxes and the diffusion signal.
pub const DEFAULT_SIGNAL_SCALE: f64 = 2.0;

/// Width/height floor applied when decoding back to image space.
pub const MIN_BOX_EXTENT: f64 = 1e-4;

/// Proposal-box budget used during training-style padding.
pub const DEFAULT_N_TRAIN: usize = 500;

/// A fixed-size set of boxes in `(cx, cy, w, h)` form with optional per-box
/// class scores.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoxSet {
    pub boxes: Vec<[f64; 4]>,
    /// `N x C` class probabilities, when a denoiser supplied them.
    pub scores: Option<Vec<Vec<f64>>>,
}

impl BoxSet {
    pub fn from_boxes(boxes: Vec<[f64; 4]>) -> Self {
        BoxSet {
            boxes,
            scores: None,
        }
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }
}

/// Maps image-space boxes to signal space: `x = (2b - 1) * scale`, clamped
/// to `[-scale, scale]`.
pub fn signal_encode(b: &BoxSet, scale: f64) -> BoxSet {
    BoxSet {
        boxes: b
            .boxes
            .iter()
            .map(|bx| {
                let mut out = [0.0; 4];
                for (o, v) in out.iter_mut().zip(bx) {
                    *o = ((2.0 * v - 1.0) * scale).clamp(-scale, scale);
                }
                out
            })
            .collect(),
        scores: b.scores.clone(),
    }
}

/// Inverse of [`signal_encode`]; widths and heights are floored at
/// [`MIN_BOX_EXTENT`] so decoded boxes never collapse.
pub fn signal_decode(x: &BoxSet, scale: f64) -> BoxSet {
    BoxSet {
        boxes: x
            .boxes
            .iter()
            .map(|bx| {
                let f = |v: f64| (v.clamp(-scale, scale) / scale + 1.0) / 2.0;
                [
                    f(bx[0]),
                    f(bx[1]),
                    f(bx[2]).max(MIN_BOX_EXTENT),
                    f(bx[3]).max(MIN_BOX_EXTENT),
                ]
            })
            .collect(),
        scores: x.scores.clone(),
    }
}

/// Draws `n` boxes from a standard normal in signal space and decodes them.
pub(crate) fn random_signal_boxes(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> Vec<[f64; 4]> {
    (0..n)
        .map(|_| {
            let mut b = [0.0; 4];
            for v in &mut b {
                let z: f64 = StandardNormal.sample(rng);
                *v = z.clamp(-scale, scale);
            }
            b
        })
        .collect()
}

/// Pads a ground-truth set up to exactly `n_train` boxes. The ground truth
/// comes first, followed by seeded random boxes drawn in signal space and
/// decoded to image space.
pub fn pad_boxes(gt: &BoxSet, n_train: usize, seed: u64) -> Result<BoxSet> {
    if gt.len() > n_train {
        return Err(Error::TooManyGt {
            gt: gt.len(),
            n_train,
        });
    }
    let mut boxes = gt.boxes.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let extra = random_signal_boxes(n_train - gt.len(), DEFAULT_SIGNAL_SCALE, &mut rng);
    boxes.extend(
        signal_decode(&BoxSet::from_boxes(extra), DEFAULT_SIGNAL_SCALE)
            .boxes,
    );
    Ok(BoxSet::from_boxes(boxes))
}

/// Forward corruption before clamping: `x_t = sqrt(a) x_0 + sqrt(1-a) eps`.
pub fn forward_corrupt_raw(
    x0: &BoxSet,
    t: usize,
    sched: &NoiseSchedule,
    seed: u64,
) -> Result<BoxSet> {
    if t > sched.steps() {
        return Err(Error::StepOutOfRange {
            t,
            max: sched.steps(),
        });
    }
    let a = sched.alpha_bar[t];
    let (signal, noise) = (a.sqrt(), (1.0 - a).sqrt());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let boxes = x0
        .boxes
        .iter()
        .map(|bx| {
            let mut out = [0.0; 4];
            for (o, v) in out.iter_mut().zip(bx) {
                let eps: f64 = StandardNormal.sample(&mut rng);
                *o = signal * v + noise * eps;
            }
            out
        })
        .collect();
    Ok(BoxSet {
        boxes,
        scores: x0.scores.clone(),
    })
}

/// Forward corruption `q(x_t | x_0)` in signal space, clamped to
/// `[-scale, scale]`. `t = 0` returns `x_0` exactly.
pub fn forward_corrupt(
    x0: &BoxSet,
    t: usize,
    sched: &NoiseSchedule,
    scale: f64,
    seed: u64,
) -> Result<BoxSet> {
    let mut out = forward_corrupt_raw(x0, t, sched, seed)?;
    for bx in &mut out.boxes {
        for v in bx {
            *v = v.clamp(-scale, scale);
        }
    }
    Ok(out)
}

/// Squared-error reconstruction objective: `0.5 * sum ||x̂0 - x0||^2` over
/// all coordinates, in signal space.
pub fn train_target_loss(pred: &BoxSet, target: &BoxSet) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::CountMismatch {
            left: pred.len(),
            right: target.len(),
        });
    }
    let mut acc = 0.0;
    for (p, t) in pred.boxes.iter().zip(&target.boxes) {
        for c in 0..4 {
            acc += (p[c] - t[c]).powi(2);
        }
    }
    Ok(0.5 * acc)
}
