//! Command-line interface.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use radarsim_core::models::LatentNoise;
use radarsim_core::trainer::{ablation_preset, PRESETS};
use radarsim_core::worldsim::Split;

use crate::ablation::run_ablation;
use crate::config::{Profile, RunConfig};
use crate::dataset::{build_datasets, Dataset};
use crate::error::{Error, Result};
use crate::evaluation::{eval_height, run_downstream_eval, KappaPolicy, LearnedModel, RadarSource};
use crate::frames::write_atomic;
use crate::plot::{render_panels, write_png};
use crate::record::OutputDir;
use crate::report::{height_report, seg_report};
use crate::training::{run_training, TrainRun};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "radarsim", version, about = "Learned radar sensor models on polar grids")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON file overriding the profile defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Defaults to $RADAR_SIM_PROFILE, then desk.
    #[arg(long, value_enum)]
    pub profile: Option<Profile>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate real-domain pairs and simulated elevation maps.
    GenData {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        r_train: Option<usize>,
        #[arg(long)]
        r_test: Option<usize>,
        #[arg(long)]
        s_train: Option<usize>,
        #[arg(long)]
        s_test: Option<usize>,
    },
    /// Train the sensor models with one ablation preset.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_parser = PRESETS)]
        preset: String,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        checkpoint_every: Option<u64>,
        /// Continue from the newest checkpoint in --out.
        #[arg(long)]
        resume: bool,
    },
    /// Train and score every preset over several seeds.
    Ablate {
        #[command(flatten)]
        common: Common,
        /// Existing dataset; generated into OUT/data from --seed when absent.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3")]
        seeds: Vec<u64>,
        #[arg(long, value_delimiter = ',', default_value = "a,b,c,d,e", value_parser = PRESETS)]
        presets: Vec<String>,
        #[arg(long)]
        steps: Option<u64>,
    },
    /// Train segmenters on simulated radar and score them on real radar.
    EvalSeg {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        /// Sensor checkpoint; use --oracle for the reference sensor.
        #[arg(long, required_unless_present = "oracle", conflicts_with = "oracle")]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        oracle: bool,
        /// Defaults to --seed alone.
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
    },
    /// Masked height error of the backward model.
    EvalHeight {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, value_enum, default_value = "r-test")]
        split: RealSplit,
        #[arg(long, value_enum, default_value = "single")]
        kappa: KappaArg,
        /// Draws averaged with --kappa mean.
        #[arg(long, default_value_t = 8)]
        kappa_draws: usize,
    },
    /// Render elevation, simulated radar, real radar and predicted elevation.
    Plot {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Index into R-test.
        #[arg(long, default_value_t = 0)]
        index: usize,
        #[arg(long, default_value_t = 4.0)]
        pixels_per_meter: f64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RealSplit {
    RTrain,
    RTest,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KappaArg {
    Zero,
    Single,
    Mean,
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::GenData { common, .. }
            | Command::Train { common, .. }
            | Command::Ablate { common, .. }
            | Command::EvalSeg { common, .. }
            | Command::EvalHeight { common, .. }
            | Command::Plot { common, .. } => common,
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text.as_bytes())
}

/// Runs a parsed command. `argv` is echoed into the run record.
pub fn dispatch(cli: Cli, argv: Vec<String>) -> Result<()> {
    let common = cli.command.common();
    let profile = Profile::resolve(common.profile)?;
    let mut config = RunConfig::load(profile, common.config.as_deref())?;
    let seed = common.seed;
    let out = OutputDir::acquire(&common.out)?;
    let dir = out.path().to_path_buf();
    let mut seeds = vec![seed];
    match &cli.command {
        Command::GenData {
            r_train,
            r_test,
            s_train,
            s_test,
            ..
        } => {
            let c = &mut config.counts;
            c.r_train = r_train.unwrap_or(c.r_train);
            c.r_test = r_test.unwrap_or(c.r_test);
            c.s_train = s_train.unwrap_or(c.s_train);
            c.s_test = s_test.unwrap_or(c.s_test);
            let m = build_datasets(&config.world(), &config.counts, seed, &dir)?;
            eprintln!("wrote {} entries to {}", m.entries.len(), dir.display());
        }
        Command::Train {
            data,
            preset,
            steps,
            checkpoint_every,
            resume,
            ..
        } => {
            let dataset = Dataset::open(data)?;
            config.train.seed = seed;
            config.train.steps = steps.unwrap_or(config.train.steps);
            config.train.checkpoint_every = checkpoint_every.unwrap_or(config.train.checkpoint_every);
            let run = TrainRun {
                out_dir: dir.clone(),
                ablation: ablation_preset(preset)?,
                train: config.train,
                model: config.model,
                resume: *resume,
            };
            let every = (config.train.steps / 20).max(1);
            let outcome = run_training(&dataset, &run, |step, l| {
                if (step + 1) % every == 0 {
                    eprintln!("step {}/{}: total {:.5}", step + 1, config.train.steps, l.total);
                }
            })?;
            eprintln!("checkpoint {}", outcome.checkpoint.display());
        }
        Command::Ablate {
            data,
            seeds: s,
            presets,
            steps,
            ..
        } => {
            seeds = s.clone();
            config.train.steps = steps.unwrap_or(config.train.steps);
            let dataset = match data {
                Some(d) => Dataset::open(d)?,
                None => {
                    let d = dir.join("data");
                    build_datasets(&config.world(), &config.counts, seed, &d)?;
                    Dataset::open(&d)?
                }
            };
            let names: Vec<&str> = presets.iter().map(String::as_str).collect();
            let results = run_ablation(&dataset, &config, &names, &seeds, &dir, |m| eprintln!("{m}"))?;
            write_text(&dir.join("table1.csv"), &seg_report(&results.seg_rows()))?;
            write_text(&dir.join("table2.csv"), &height_report(&results.height_rows()))?;
        }
        Command::EvalSeg {
            data,
            checkpoint,
            oracle,
            seeds: s,
            ..
        } => {
            if !s.is_empty() {
                seeds = s.clone();
            }
            let dataset = Dataset::open(data)?;
            let (label, source) = match (checkpoint, oracle) {
                (Some(p), false) => {
                    let m = LearnedModel::load(p)?;
                    (m.checkpoint.setup.ablation.name.to_string(), RadarSource::Learned(Box::new(m)))
                }
                _ => ("real".to_string(), RadarSource::Oracle(dataset.manifest.world.sensor)),
            };
            let runs = run_downstream_eval(&source, &dataset, &config.eval, &seeds)?;
            write_text(&dir.join("seg_report.csv"), &seg_report(&[(label, runs)]))?;
        }
        Command::EvalHeight {
            data,
            checkpoint,
            split,
            kappa,
            kappa_draws,
            ..
        } => {
            let dataset = Dataset::open(data)?;
            let model = LearnedModel::load(checkpoint)?;
            let split = match split {
                RealSplit::RTrain => Split::RealTrain,
                RealSplit::RTest => Split::RealTest,
            };
            let policy = match kappa {
                KappaArg::Zero => KappaPolicy::Zero,
                KappaArg::Single => KappaPolicy::Single,
                KappaArg::Mean => KappaPolicy::Mean(*kappa_draws),
            };
            let m = eval_height(&model, &dataset, split, policy, seed, config.eval.ground_threshold)?;
            let label = model.checkpoint.setup.ablation.name.to_string();
            write_text(&dir.join("height_report.csv"), &height_report(&[(label, seed, m)]))?;
        }
        Command::Plot {
            data,
            checkpoint,
            index,
            pixels_per_meter,
            ..
        } => {
            let dataset = Dataset::open(data)?;
            let entries = dataset.entries(Split::RealTest);
            let entry = entries
                .get(*index)
                .ok_or_else(|| Error::Usage(format!("R-test has {} entries, index {index} is out of range", entries.len())))?;
            let spec = dataset.manifest.grid;
            let w = dataset.elevation(entry)?;
            let real = dataset.radar(entry)?;
            let mut planes = vec![w.heights.clone()];
            if let Some(p) = checkpoint {
                let m = LearnedModel::load(p)?;
                let params = &m.checkpoint.state.params;
                let mut r = radarsim_core::rng::rng(seed);
                let eps = LatentNoise::sample(spec, &mut r);
                let kappa = LatentNoise::sample(spec, &mut r);
                let x = radarsim_core::models::forward_generator(&m.nets, &w, &eps, &params.theta_x.values)?;
                let w_hat = radarsim_core::models::backward_generator(&m.nets, &real, &kappa, &params.theta_w.values)?;
                planes.push(x.power);
                planes.push(real.power.clone());
                planes.push(w_hat.heights);
            } else {
                planes.push(real.power.clone());
            }
            let refs: Vec<&[f32]> = planes.iter().map(Vec::as_slice).collect();
            let img = render_panels(&refs, &spec, *pixels_per_meter)?;
            write_png(&img, &dir.join(format!("panels_{index:04}.png")))?;
        }
    }
    out.commit(argv, &config, seeds)?;
    Ok(())
}

/// Parses `argv` and runs the command; returns the process exit status.
pub fn main_with_args(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli, argv) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Usage(_) => EXIT_USAGE,
                _ => EXIT_FAILURE,
            }
        }
    }
}
