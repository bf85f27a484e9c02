//! Downstream segmentation and height evaluation of sensor models.

use std::path::Path;

use radarsim_core::evalkit::{
    evaluate_segmenter, occupancy_from_dense, occupancy_from_elevation, split_holdout, train_segmenter,
    HeightAccumulator, HeightMetrics, SegMetrics, SegSample, SegTrainConfig,
};
use radarsim_core::models::{backward_generator, forward_generator, LatentNoise, Networks, Segmenter, SegmenterConfig};
use radarsim_core::polargrid::{ElevationMap, RadarFrame};
use radarsim_core::rng;
use radarsim_core::worldsim::{oracle_radar, OracleSensorParams, Split};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::checkpoint::{self, Checkpoint};
use crate::dataset::Dataset;
use crate::error::Result;

const SIM_TAG: u64 = 0x53_494d;
const HOLD_TAG: u64 = 0x484f_4c44;
const SEG_TAG: u64 = 0x53_4547;
const KAPPA_TAG: u64 = 0x4b_4150;

/// Heights above ground that count as an obstacle return, meters.
pub const DEFAULT_GROUND_THRESHOLD: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub seg: SegTrainConfig,
    pub segmenter: SegmenterConfig,
    pub ground_threshold: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            seg: SegTrainConfig::default(),
            segmenter: SegmenterConfig::desk(),
            ground_threshold: DEFAULT_GROUND_THRESHOLD,
        }
    }
}

/// A trained model loaded from a checkpoint.
#[derive(Debug, Clone)]
pub struct LearnedModel {
    pub nets: Networks,
    pub checkpoint: Checkpoint,
}

impl LearnedModel {
    pub fn load(path: &Path) -> Result<Self> {
        let checkpoint = checkpoint::load(path)?;
        let nets = Networks::new(checkpoint.setup.model, checkpoint.setup.grid)?;
        Ok(Self { nets, checkpoint })
    }
}

/// Where simulated radar for segmenter training comes from.
#[derive(Debug, Clone)]
pub enum RadarSource {
    /// The reference sensor itself: the upper benchmark.
    Oracle(OracleSensorParams),
    Learned(Box<LearnedModel>),
}

impl RadarSource {
    pub fn render(&self, w: &ElevationMap, seed: u64) -> Result<RadarFrame> {
        match self {
            RadarSource::Oracle(p) => Ok(oracle_radar(w, p, seed)?),
            RadarSource::Learned(m) => {
                let eps = LatentNoise::sample(w.spec, &mut rng::rng(seed));
                Ok(forward_generator(&m.nets, w, &eps, &m.checkpoint.state.params.theta_x.values)?)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub metrics: SegMetrics,
    pub best_epoch: usize,
    pub holdout_miou: Vec<f64>,
}

/// Mean and sample standard deviation (zero for fewer than two values).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Segmenter training samples: `samples_per_scene` sensor draws for every
/// S-train scene, labeled from the dense elevation. Grouped by scene.
fn sim_samples(source: &RadarSource, dataset: &Dataset, config: &EvalConfig, seed: u64) -> Result<Vec<Vec<SegSample>>> {
    let base = rng::mix(seed, SIM_TAG);
    dataset
        .entries(Split::SimTrain)
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let w = dataset.elevation(e)?;
            let labels = occupancy_from_dense(&w, e.ground_level, config.ground_threshold)?;
            (0..config.seg.samples_per_scene)
                .map(|k| {
                    let radar = source.render(&w, rng::mix(rng::mix(base, i as u64), k as u64))?;
                    Ok(SegSample {
                        radar: radar.power,
                        labels: labels.clone(),
                    })
                })
                .collect()
        })
        .collect()
}

/// R-test radar with labels from the lidar measurements.
pub fn real_test_samples(dataset: &Dataset, ground_threshold: f64) -> Result<Vec<SegSample>> {
    dataset
        .entries(Split::RealTest)
        .iter()
        .map(|e| {
            let partial = dataset.partial(e)?;
            Ok(SegSample {
                radar: dataset.radar(e)?.power,
                labels: occupancy_from_elevation(&partial, e.ground_level, ground_threshold)?,
            })
        })
        .collect()
}

/// Trains one segmenter per seed on radar from `source` over S-train and
/// scores it on R-test. Seeds run in parallel; results are in seed order.
pub fn run_downstream_eval(source: &RadarSource, dataset: &Dataset, config: &EvalConfig, seeds: &[u64]) -> Result<Vec<SeedOutcome>> {
    dataset.require(&[Split::SimTrain, Split::RealTest])?;
    config.seg.validate()?;
    let seg = Segmenter::new(config.segmenter, dataset.manifest.grid.dims())?;
    let test = real_test_samples(dataset, config.ground_threshold)?;
    seeds
        .par_iter()
        .map(|&seed| {
            let scenes = sim_samples(source, dataset, config, seed)?;
            let (train_idx, hold_idx) = split_holdout(scenes.len(), config.seg.holdout_fraction, rng::mix(seed, HOLD_TAG));
            let gather = |idx: &[usize]| idx.iter().flat_map(|&i| scenes[i].iter().cloned()).collect::<Vec<_>>();
            let out = train_segmenter(&seg, &gather(&train_idx), &gather(&hold_idx), &config.seg, rng::mix(seed, SEG_TAG))?;
            let metrics = evaluate_segmenter(&seg, &out.alpha, &test)?;
            Ok(SeedOutcome {
                seed,
                metrics,
                best_epoch: out.best_epoch,
                holdout_miou: out.holdout_miou,
            })
        })
        .collect()
}

/// Latent draw used when evaluating the backward model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaPolicy {
    Zero,
    /// One pinned draw shared by every frame.
    Single,
    /// Average of this many predictions with independent draws.
    Mean(usize),
}

/// Masked height MAE of the backward model on a real split.
pub fn eval_height(model: &LearnedModel, dataset: &Dataset, split: Split, policy: KappaPolicy, seed: u64, ground_threshold: f64) -> Result<HeightMetrics> {
    dataset.require(&[split])?;
    let spec = dataset.manifest.grid;
    let theta_w = &model.checkpoint.state.params.theta_w.values;
    let mut r = rng::rng(rng::mix(seed, KAPPA_TAG));
    let pinned = LatentNoise::sample(spec, &mut r);
    let mut acc = HeightAccumulator::default();
    for e in dataset.entries(split) {
        let x = dataset.radar(e)?;
        let y = dataset.partial(e)?;
        let labels = occupancy_from_elevation(&y, e.ground_level, ground_threshold)?;
        let pred = match policy {
            KappaPolicy::Zero => backward_generator(&model.nets, &x, &LatentNoise::zeros(spec), theta_w)?,
            KappaPolicy::Single => backward_generator(&model.nets, &x, &pinned, theta_w)?,
            KappaPolicy::Mean(n) => {
                let mut sum = vec![0.0f32; spec.cells()];
                for _ in 0..n.max(1) {
                    let k = LatentNoise::sample(spec, &mut r);
                    let p = backward_generator(&model.nets, &x, &k, theta_w)?;
                    sum.iter_mut().zip(&p.heights).for_each(|(s, v)| *s += v);
                }
                sum.iter_mut().for_each(|s| *s /= n.max(1) as f32);
                ElevationMap { spec, heights: sum }
            }
        };
        acc.add(&pred, &y, &labels)?;
    }
    Ok(acc.metrics())
}
