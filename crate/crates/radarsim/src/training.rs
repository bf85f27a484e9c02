//! Training runs over an on-disk dataset with checkpoints and a loss log.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use radarsim_core::models::{ModelConfig, Networks};
use radarsim_core::objectives::LossBreakdown;
use radarsim_core::trainer::{run_steps, AblationSpec, StepContext, TrainConfig, TrainState};

use crate::checkpoint::{self, Checkpoint, RunSetup};
use crate::dataset::Dataset;
use crate::error::{Error, Result};

pub const METRICS_FILE: &str = "metrics.csv";

pub fn metrics_header() -> String {
    format!("step,{}", LossBreakdown::COLUMNS.join(","))
}

/// One CSV row; absent terms are empty fields. Floats use the shortest
/// representation that round-trips.
pub fn metrics_row(step: u64, losses: &LossBreakdown) -> String {
    let mut row = step.to_string();
    for v in losses.values() {
        row.push(',');
        if let Some(v) = v {
            row.push_str(&v.to_string());
        }
    }
    row
}

#[derive(Debug, Clone)]
pub struct TrainRun {
    pub out_dir: PathBuf,
    pub ablation: AblationSpec,
    pub train: TrainConfig,
    pub model: ModelConfig,
    /// Continue from the newest checkpoint in `out_dir` when one exists.
    pub resume: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub checkpoint: PathBuf,
    pub metrics: PathBuf,
    pub resumed_from: Option<u64>,
}

/// Keeps the header and the rows of steps before `step`.
fn truncate_metrics(path: &Path, step: u64) -> Result<()> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut kept = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if i == 0 {
            if line != metrics_header() {
                return Err(Error::corrupt(path, "unexpected metrics header"));
            }
            kept.push(line);
            continue;
        }
        let s: u64 = line
            .split(',')
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::corrupt(path, format!("bad row {i}")))?;
        if s < step {
            kept.push(line);
        }
    }
    if kept.len() as u64 != step + 1 {
        return Err(Error::corrupt(path, format!("metrics log does not cover the {step} checkpointed steps")));
    }
    let mut text = kept.join("\n");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Runs `run.train.steps` steps of the configured ablation, writing
/// `metrics.csv` and checkpoints into `run.out_dir`. With `resume`, the
/// newest checkpoint is verified against the setup and continued; the
/// result is bit-identical to an uninterrupted run.
pub fn run_training<F>(dataset: &Dataset, run: &TrainRun, mut progress: F) -> Result<TrainOutcome>
where
    F: FnMut(u64, &LossBreakdown),
{
    run.train.validate()?;
    let grid = dataset.manifest.grid;
    let data = dataset.train_data()?;
    data.check(&run.ablation.data_needs)?;
    let nets = Networks::new(run.model, grid)?;
    let setup = RunSetup {
        ablation: run.ablation.clone(),
        train: run.train,
        model: run.model,
        grid,
    };
    fs::create_dir_all(&run.out_dir).map_err(|e| Error::io(&run.out_dir, e))?;
    let metrics_path = run.out_dir.join(METRICS_FILE);

    let mut resumed_from = None;
    let mut state = TrainState::new(&nets, &run.train);
    if run.resume {
        if let Some((step, path)) = checkpoint::latest(&run.out_dir, run.train.steps)? {
            let ckpt = checkpoint::load(&path)?;
            let same = RunSetup {
                train: TrainConfig {
                    steps: setup.train.steps,
                    ..ckpt.setup.train
                },
                ..ckpt.setup.clone()
            };
            if same != setup {
                return Err(Error::corrupt(&path, "checkpoint was written by a different configuration"));
            }
            truncate_metrics(&metrics_path, step)?;
            state = ckpt.state;
            resumed_from = Some(step);
        }
    }
    let file = if resumed_from.is_some() {
        fs::OpenOptions::new().append(true).open(&metrics_path)
    } else {
        fs::File::create(&metrics_path)
    }
    .map_err(|e| Error::io(&metrics_path, e))?;
    let mut log = BufWriter::new(file);
    if resumed_from.is_none() {
        writeln!(log, "{}", metrics_header()).map_err(|e| Error::io(&metrics_path, e))?;
    }

    let ctx = StepContext {
        nets: &nets,
        ablation: &run.ablation,
        config: &run.train,
    };
    let every = run.train.checkpoint_every;
    let mut last_ckpt = None;
    let result = run_steps(&ctx, &mut state, &data, run.train.steps, |state, losses| {
        let step = state.params.step - 1;
        progress(step, losses);
        let io = |e| radarsim_core::Error::InvalidParam(format!("metrics write failed: {e}"));
        writeln!(log, "{}", metrics_row(step, losses)).map_err(io)?;
        if every > 0 && state.params.step % every == 0 {
            log.flush().map_err(io)?;
            let ckpt = Checkpoint {
                setup: setup.clone(),
                state: state.clone(),
            };
            let path = checkpoint::save(&run.out_dir, &ckpt)
                .map_err(|e| radarsim_core::Error::InvalidParam(format!("checkpoint write failed: {e}")))?;
            last_ckpt = Some(path);
        }
        Ok(())
    });
    log.flush().map_err(|e| Error::io(&metrics_path, e))?;
    result?;
    let checkpoint = match last_ckpt {
        Some(p) if state.params.step.is_multiple_of(every.max(1)) => p,
        _ => checkpoint::save(&run.out_dir, &Checkpoint { setup, state })?,
    };
    Ok(TrainOutcome {
        checkpoint,
        metrics: metrics_path,
        resumed_from,
    })
}
