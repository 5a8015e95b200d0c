//! Deterministic reverse sampling over a noise-to-box trajectory.
//!
//! Each rung of the step ladder reconstructs `x̂0` with the denoiser,
//! recovers the implied noise, and re-noises to the next timestep (the
//! eta = 0 update). Between rungs, boxes whose best class score falls under
//! the renewal threshold are replaced with fresh random draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::diffusion::{random_signal_boxes, signal_decode, BoxSet, NoiseSchedule};
use crate::error::{Error, Result};

/// The reverse-process predictor `f(x_t, t) -> x̂0`.
///
/// Implementations own whatever conditioning context they need (ground
/// truth for the oracles; image features for a trained network) and must be
/// safe to share read-only across threads. The returned set keeps the input
/// box count and may attach per-box class scores.
pub trait Denoiser: Send + Sync {
    fn predict(&self, x_t: &BoxSet, t: usize) -> BoxSet;
}

/// Knobs for [`reverse_sample`].
#[derive(Debug, Clone, Copy)]
pub struct SamplerConfig {
    /// Signal-space clamp bound.
    pub scale: f64,
    /// Boxes with `max score < renew_threshold` are redrawn between rungs.
    pub renew_threshold: f64,
    /// Seed for the renewal draws.
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            scale: crate::diffusion::DEFAULT_SIGNAL_SCALE,
            renew_threshold: 0.5,
            seed: 0,
        }
    }
}

/// One recorded rung of a sampling trajectory, in signal space.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    /// Timestep this state belongs to (`T` for the start).
    pub t: usize,
    pub boxes: BoxSet,
}

/// Builds an evenly spaced ladder of `(t_now, t_next)` pairs from `t_max`
/// down to 0.
pub fn ladder_from_count(t_max: usize, steps: usize) -> Result<Vec<(usize, usize)>> {
    if steps == 0 || steps > t_max {
        return Err(Error::BadStepLadder(format!(
            "cannot split {t_max} timesteps into {steps} rungs"
        )));
    }
    let ts: Vec<usize> = (0..=steps)
        .map(|i| t_max - (t_max as f64 * i as f64 / steps as f64).round() as usize)
        .collect();
    Ok(ts.windows(2).map(|w| (w[0], w[1])).collect())
}

fn validate_ladder(ladder: &[(usize, usize)], t_max: usize) -> Result<()> {
    if ladder.is_empty() {
        return Err(Error::BadStepLadder("empty ladder".into()));
    }
    if ladder[0].0 != t_max {
        return Err(Error::BadStepLadder(format!(
            "first rung starts at {}, schedule has T = {t_max}",
            ladder[0].0
        )));
    }
    if ladder[ladder.len() - 1].1 != 0 {
        return Err(Error::BadStepLadder("last rung must land on 0".into()));
    }
    for (i, &(now, next)) in ladder.iter().enumerate() {
        if next >= now {
            return Err(Error::BadStepLadder(format!(
                "rung {i} does not descend: {now} -> {next}"
            )));
        }
        if i + 1 < ladder.len() && ladder[i + 1].0 != next {
            return Err(Error::BadStepLadder(format!(
                "rung {} starts at {} but previous landed on {next}",
                i + 1,
                ladder[i + 1].0
            )));
        }
    }
    Ok(())
}

/// Runs the deterministic reverse process from `start` (signal space, at
/// `t = T`) down the ladder. Returns the final state and the full trace;
/// the trace has one entry per rung plus the start, all clamped to
/// `[-scale, scale]`.
pub fn reverse_sample(
    start: &BoxSet,
    denoiser: &dyn Denoiser,
    sched: &NoiseSchedule,
    ladder: &[(usize, usize)],
    config: &SamplerConfig,
) -> Result<(BoxSet, Vec<TraceEntry>)> {
    validate_ladder(ladder, sched.steps())?;
    let scale = config.scale;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut trace = Vec::with_capacity(ladder.len() + 1);
    trace.push(TraceEntry {
        t: sched.steps(),
        boxes: start.clone(),
    });

    let mut x_t = start.clone();
    for (i, &(t_now, t_next)) in ladder.iter().enumerate() {
        let pred = denoiser.predict(&x_t, t_now);
        if pred.len() != x_t.len() {
            return Err(Error::CountMismatch {
                left: pred.len(),
                right: x_t.len(),
            });
        }
        let a_now = sched.alpha_bar[t_now];
        let a_next = sched.alpha_bar[t_next];
        let (sig_now, noise_now) = (a_now.sqrt(), (1.0 - a_now).sqrt());
        let (sig_next, noise_next) = (a_next.sqrt(), (1.0 - a_next).sqrt());

        let mut next_boxes = Vec::with_capacity(x_t.len());
        for (cur, x0) in x_t.boxes.iter().zip(&pred.boxes) {
            let mut out = [0.0; 4];
            for c in 0..4 {
                let eps_hat = (cur[c] - sig_now * x0[c]) / noise_now;
                out[c] = (sig_next * x0[c] + noise_next * eps_hat).clamp(-scale, scale);
            }
            next_boxes.push(out);
        }

        // box renewal: low-confidence boxes restart from fresh noise
        if i + 1 < ladder.len() {
            if let Some(scores) = &pred.scores {
                for (bx, sc) in next_boxes.iter_mut().zip(scores) {
                    let best = sc.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    if best < config.renew_threshold {
                        *bx = random_signal_boxes(1, scale, &mut rng)[0];
                    }
                }
            }
        }

        x_t = BoxSet {
            boxes: next_boxes,
            scores: pred.scores.clone(),
        };
        trace.push(TraceEntry {
            t: t_next,
            boxes: x_t.clone(),
        });
    }
    Ok((x_t, trace))
}

#[derive(Serialize)]
struct TraceLine<'a> {
    step: usize,
    boxes: Vec<[f64; 4]>,
    scores: &'a Option<Vec<Vec<f64>>>,
}

/// Serializes a trace as line-delimited JSON, one rung per line. Boxes are
/// emitted in decoded (image-space) form.
pub fn trace_to_jsonl(trace: &[TraceEntry], scale: f64) -> String {
    let mut out = String::new();
    for entry in trace {
        let decoded = signal_decode(&entry.boxes, scale);
        let line = TraceLine {
            step: entry.t,
            boxes: decoded.boxes,
            scores: &entry.boxes.scores,
        };
        out.push_str(&serde_json::to_string(&line).expect("trace serializes"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::{
        cosine_schedule, signal_encode, GtOracleDenoiser, IdentityDenoiser,
    };

    fn gt_fixture() -> BoxSet {
        BoxSet::from_boxes(vec![[0.3, 0.4, 0.2, 0.25], [0.7, 0.6, 0.3, 0.2]])
    }

    fn noisy_start(n: usize, seed: u64) -> BoxSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        BoxSet::from_boxes(random_signal_boxes(n, 2.0, &mut rng))
    }

    #[test]
    fn ladder_construction() {
        assert_eq!(
            ladder_from_count(1000, 4).unwrap(),
            vec![(1000, 750), (750, 500), (500, 250), (250, 0)]
        );
        assert_eq!(ladder_from_count(10, 1).unwrap(), vec![(10, 0)]);
        assert!(ladder_from_count(10, 0).is_err());
        assert!(ladder_from_count(4, 9).is_err());
    }

    #[test]
    fn bad_ladders_rejected() {
        let sched = cosine_schedule(100).unwrap();
        let start = noisy_start(2, 0);
        let gt = signal_encode(&gt_fixture(), 2.0);
        let den = GtOracleDenoiser::new(gt);
        let cfg = SamplerConfig::default();
        for ladder in [
            vec![],
            vec![(90, 0)],                  // does not start at T
            vec![(100, 50), (50, 10)],      // does not end at 0
            vec![(100, 100)],               // not descending
            vec![(100, 50), (40, 0)],       // rungs do not chain
        ] {
            assert!(matches!(
                reverse_sample(&start, &den, &sched, &ladder, &cfg),
                Err(Error::BadStepLadder(_))
            ));
        }
    }

    #[test]
    fn gt_oracle_reaches_gt_for_any_ladder() {
        let sched = cosine_schedule(1000).unwrap();
        let gt = gt_fixture();
        let den = GtOracleDenoiser::new(signal_encode(&gt, 2.0));
        let cfg = SamplerConfig::default();
        for steps in [1usize, 4, 10] {
            let ladder = ladder_from_count(1000, steps).unwrap();
            let start = noisy_start(gt.len(), 9);
            let (finished, trace) = reverse_sample(&start, &den, &sched, &ladder, &cfg).unwrap();
            assert_eq!(trace.len(), steps + 1);
            let decoded = signal_decode(&finished, 2.0);
            for (a, e) in decoded.boxes.iter().zip(&gt.boxes) {
                for c in 0..4 {
                    assert!((a[c] - e[c]).abs() < 1e-6, "steps={steps}");
                }
            }
        }
    }

    #[test]
    fn identity_denoiser_is_reproducible() {
        let sched = cosine_schedule(1000).unwrap();
        let start = noisy_start(3, 5);
        let ladder = ladder_from_count(1000, 4).unwrap();
        let cfg = SamplerConfig::default();
        let (a, ta) = reverse_sample(&start, &IdentityDenoiser, &sched, &ladder, &cfg).unwrap();
        let (b, tb) = reverse_sample(&start, &IdentityDenoiser, &sched, &ladder, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        assert_eq!(trace_to_jsonl(&ta, 2.0), trace_to_jsonl(&tb, 2.0));
    }

    #[test]
    fn trace_is_clamped_and_sized() {
        let sched = cosine_schedule(500).unwrap();
        let start = noisy_start(4, 11);
        let ladder = ladder_from_count(500, 6).unwrap();
        let cfg = SamplerConfig::default();
        let (_, trace) =
            reverse_sample(&start, &IdentityDenoiser, &sched, &ladder, &cfg).unwrap();
        assert_eq!(trace.len(), 7);
        for entry in &trace {
            for bx in &entry.boxes.boxes {
                assert!(bx.iter().all(|v| v.abs() <= 2.0));
            }
        }
    }

    #[test]
    fn count_mismatch_from_denoiser_is_detected() {
        struct Shrinking;
        impl Denoiser for Shrinking {
            fn predict(&self, x_t: &BoxSet, _t: usize) -> BoxSet {
                BoxSet::from_boxes(x_t.boxes[..x_t.len() - 1].to_vec())
            }
        }
        let sched = cosine_schedule(100).unwrap();
        let start = noisy_start(2, 0);
        let ladder = ladder_from_count(100, 2).unwrap();
        assert!(matches!(
            reverse_sample(&start, &Shrinking, &sched, &ladder, &SamplerConfig::default()),
            Err(Error::CountMismatch { .. })
        ));
    }

    #[test]
    fn low_scores_trigger_renewal() {
        // a denoiser that reports no confidence in box 0 and full
        // confidence in box 1
        struct HalfConfident;
        impl Denoiser for HalfConfident {
            fn predict(&self, x_t: &BoxSet, _t: usize) -> BoxSet {
                let mut out = x_t.clone();
                out.scores = Some(
                    (0..x_t.len())
                        .map(|i| vec![if i == 0 { 0.01 } else { 0.99 }])
                        .collect(),
                );
                out
            }
        }
        let sched = cosine_schedule(100).unwrap();
        let start = noisy_start(2, 1);
        let ladder = ladder_from_count(100, 4).unwrap();
        let cfg = SamplerConfig::default();
        let (_, trace) = reverse_sample(&start, &HalfConfident, &sched, &ladder, &cfg).unwrap();

        // deterministic propagation would keep box 1's trajectory equal to
        // identity sampling; box 0 must diverge after the first renewal
        let (_, plain) = reverse_sample(&start, &IdentityDenoiser, &sched, &ladder, &cfg).unwrap();
        assert_ne!(trace[2].boxes.boxes[0], plain[2].boxes.boxes[0]);
        assert_eq!(trace[2].boxes.boxes[1], plain[2].boxes.boxes[1]);
    }
}
