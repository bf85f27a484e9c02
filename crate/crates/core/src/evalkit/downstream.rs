use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::{Confusion, OccupancyGrid, SegMetrics};
use crate::error::{Error, Result};
use crate::models::{SegLogits, Segmenter};
use crate::nn::{Adam, AdamConfig, AdamState, Tensor};
use crate::objectives::{weighted_cross_entropy_grad, ClassWeights, DEFAULT_CLASS_WEIGHTS};
use crate::rng;

/// One radar plane with its occupancy labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SegSample {
    pub radar: Vec<f32>,
    pub labels: OccupancyGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub class_weights: ClassWeights,
    /// Fraction of scenes held out for epoch selection.
    pub holdout_fraction: f64,
    /// Radar draws generated per training scene (each with fresh noise).
    pub samples_per_scene: usize,
}

impl Default for SegTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 4,
            batch_size: 8,
            learning_rate: 1e-3,
            class_weights: DEFAULT_CLASS_WEIGHTS,
            holdout_fraction: 0.1,
            samples_per_scene: 8,
        }
    }
}

impl SegTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.samples_per_scene == 0 {
            return Err(Error::InvalidParam("segmenter counts must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidParam("learning rate must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return Err(Error::InvalidParam("holdout fraction must be in [0, 1)".into()));
        }
        Ok(())
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegTrainOutcome {
    /// Parameters after the epoch with the highest holdout mIoU.
    pub alpha: Vec<f32>,
    /// Zero-based.
    pub best_epoch: usize,
    pub holdout_miou: Vec<f64>,
}

/// Seeded split of `0..n` into `(train, holdout)`. The holdout gets
/// `ceil(n * fraction)` items (at least one when `fraction > 0` and `n > 1`).
pub fn split_holdout(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let perm = rng::permutation(&mut rng::rng(seed), n);
    let mut k = libm::ceil(n as f64 * fraction) as usize;
    if n > 1 {
        k = k.min(n - 1);
    } else {
        k = 0;
    }
    let (hold, train) = perm.split_at(k);
    (train.to_vec(), hold.to_vec())
}

pub fn predict(seg: &Segmenter, alpha: &[f32], radar: &[f32], labels_like: &OccupancyGrid) -> OccupancyGrid {
    let (logits, _) = seg.forward(alpha, radar);
    SegLogits {
        spec: labels_like.spec,
        classes: logits.c,
        data: logits.data,
    }
    .predict()
}

/// Dataset-level confusion of the segmenter on `samples`.
pub fn evaluate_segmenter(seg: &Segmenter, alpha: &[f32], samples: &[SegSample]) -> Result<SegMetrics> {
    let mut c = Confusion::default();
    for s in samples {
        let pred = predict(seg, alpha, &s.radar, &s.labels);
        c.add(&pred, &s.labels)?;
    }
    Ok(c.metrics())
}

/// Trains a fresh segmenter with weighted cross-entropy and keeps the epoch
/// scoring best on `holdout`. Without a holdout the last epoch is kept.
pub fn train_segmenter(
    seg: &Segmenter,
    train: &[SegSample],
    holdout: &[SegSample],
    config: &SegTrainConfig,
    seed: u64,
) -> Result<SegTrainOutcome> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::Empty("segmenter training set"));
    }
    let (h, w) = seg.dims;
    for s in train.iter().chain(holdout) {
        if s.radar.len() != h * w || s.labels.labels.len() != h * w {
            return Err(Error::ShapeMismatch {
                expected: seg.dims,
                got: (s.radar.len(), s.labels.labels.len()),
            });
        }
    }
    let adam_cfg = config.adam();
    let mut alpha = seg.layout.init(&mut rng::substream(seed, 1));
    let mut adam = AdamState::new(alpha.len());
    let mut order_rng = rng::substream(seed, 2);
    let mut best: Option<(f64, usize, Vec<f32>)> = None;
    let mut scores = Vec::with_capacity(config.epochs);
    let mut grad = vec![0.0f32; alpha.len()];
    for epoch in 0..config.epochs {
        let order = rng::permutation(&mut order_rng, train.len());
        for batch in order.chunks(config.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for &i in batch {
                let s = &train[i];
                let (logits, trace) = seg.forward(&alpha, &s.radar);
                let (loss, dl) = weighted_cross_entropy_grad(&logits.data, &s.labels.labels, &config.class_weights)?;
                if !loss.is_finite() {
                    return Err(Error::NonFiniteLoss {
                        term: "segmenter",
                        step: epoch as u64,
                    });
                }
                seg.backward(&alpha, &trace, Tensor::from_vec(logits.c, logits.h, logits.w, dl), &mut grad);
            }
            let k = 1.0 / batch.len() as f32;
            grad.iter_mut().for_each(|g| *g *= k);
            Adam::step(&adam_cfg, &mut adam, &mut alpha, &grad);
        }
        let score = if holdout.is_empty() {
            0.0
        } else {
            evaluate_segmenter(seg, &alpha, holdout)?.miou
        };
        scores.push(score);
        let better = match &best {
            None => true,
            Some((b, _, _)) => holdout.is_empty() || score > *b,
        };
        if better {
            best = Some((score, epoch, alpha.clone()));
        }
    }
    let (_, best_epoch, alpha) = best.expect("at least one epoch");
    Ok(SegTrainOutcome {
        alpha,
        best_epoch,
        holdout_miou: scores,
    })
}
