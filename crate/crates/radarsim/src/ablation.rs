//! Sweeps of training configurations over seeds with downstream scoring.

use std::path::{Path, PathBuf};

use radarsim_core::evalkit::HeightMetrics;
use radarsim_core::trainer::{ablation_preset, TrainConfig};
use radarsim_core::worldsim::Split;
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::dataset::Dataset;
use crate::error::Result;
use crate::evaluation::{eval_height, run_downstream_eval, KappaPolicy, LearnedModel, RadarSource, SeedOutcome};
use crate::training::{run_training, TrainRun};

/// Label of the oracle-trained benchmark rows.
pub const BENCHMARK: &str = "real";

#[derive(Debug, Clone, PartialEq)]
pub struct JobResult {
    pub preset: String,
    pub seed: u64,
    pub checkpoint: PathBuf,
    pub seg: SeedOutcome,
    /// Only for presets that train the backward model.
    pub height: Option<HeightMetrics>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationResults {
    pub benchmark: Vec<SeedOutcome>,
    pub jobs: Vec<JobResult>,
}

impl AblationResults {
    pub fn seg_rows(&self) -> Vec<(String, Vec<SeedOutcome>)> {
        let mut rows = vec![(BENCHMARK.to_string(), self.benchmark.clone())];
        let mut presets: Vec<&str> = self.jobs.iter().map(|j| j.preset.as_str()).collect();
        presets.dedup();
        for p in presets {
            rows.push((p.to_string(), self.jobs.iter().filter(|j| j.preset == p).map(|j| j.seg.clone()).collect()));
        }
        rows
    }

    pub fn height_rows(&self) -> Vec<(String, u64, HeightMetrics)> {
        self.jobs
            .iter()
            .filter_map(|j| j.height.map(|h| (j.preset.clone(), j.seed, h)))
            .collect()
    }

    pub fn job(&self, preset: &str, seed: u64) -> Option<&JobResult> {
        self.jobs.iter().find(|j| j.preset == preset && j.seed == seed)
    }
}

pub fn run_dir(out: &Path, preset: &str, seed: u64) -> PathBuf {
    out.join("runs").join(format!("{preset}_s{seed}"))
}

/// Trains every `(preset, seed)` pair (resuming finished or partial runs in
/// `out`), scores each on the downstream task with its own seed, and scores
/// the oracle benchmark over all seeds. Jobs run in parallel; results are in
/// preset-major, seed-minor order.
pub fn run_ablation<F>(dataset: &Dataset, config: &RunConfig, presets: &[&str], seeds: &[u64], out: &Path, log: F) -> Result<AblationResults>
where
    F: Fn(&str) + Sync,
{
    let specs = presets.iter().map(|p| ablation_preset(p)).collect::<radarsim_core::Result<Vec<_>>>()?;
    let jobs: Vec<_> = specs.iter().flat_map(|s| seeds.iter().map(move |&seed| (s, seed))).collect();
    let results = jobs
        .par_iter()
        .map(|&(spec, seed)| {
            let name = spec.name.to_string();
            let run = TrainRun {
                out_dir: run_dir(out, &name, seed),
                ablation: spec.clone(),
                train: TrainConfig { seed, ..config.train },
                model: config.model,
                resume: true,
            };
            let every = (config.train.steps / 4).max(1);
            let outcome = run_training(dataset, &run, |step, l| {
                if (step + 1) % every == 0 {
                    log(&format!("{name} seed {seed}: step {}/{} total {:.4}", step + 1, config.train.steps, l.total));
                }
            })?;
            let model = LearnedModel::load(&outcome.checkpoint)?;
            let height = if spec.trains_backward() {
                Some(eval_height(&model, dataset, Split::RealTest, KappaPolicy::Single, seed, config.eval.ground_threshold)?)
            } else {
                None
            };
            let seg = run_downstream_eval(&RadarSource::Learned(Box::new(model)), dataset, &config.eval, &[seed])?
                .pop()
                .expect("one seed");
            log(&format!("{name} seed {seed}: miou {:.4}", seg.metrics.miou));
            Ok(JobResult {
                preset: name,
                seed,
                checkpoint: outcome.checkpoint,
                seg,
                height,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let benchmark = run_downstream_eval(&RadarSource::Oracle(dataset.manifest.world.sensor), dataset, &config.eval, seeds)?;
    Ok(AblationResults { benchmark, jobs: results })
}
