use std::fs;

use radarsim::config::{Profile, RunConfig};
use radarsim::dataset::{build_datasets, Dataset};
use radarsim::evaluation::{eval_height, KappaPolicy, LearnedModel};
use radarsim::training::{run_training, TrainRun, METRICS_FILE};
use radarsim_core::trainer::ablation_preset;
use radarsim_core::worldsim::{Split, SplitCounts};

fn small_dataset(dir: &std::path::Path) -> (RunConfig, Dataset) {
    let mut config = RunConfig::defaults(Profile::Desk);
    config.counts = SplitCounts {
        r_train: 3,
        r_test: 2,
        s_train: 3,
        s_test: 1,
    };
    build_datasets(&config.world(), &config.counts, 21, dir).unwrap();
    (config, Dataset::open(dir).unwrap())
}

#[test]
fn dataset_reloads_what_was_written() {
    let dir = tempfile::tempdir().unwrap();
    let (config, ds) = small_dataset(dir.path());
    assert_eq!(ds.entries(Split::RealTrain).len(), 3);
    let data = ds.train_data().unwrap();
    assert_eq!((data.real_radar.len(), data.partial.len(), data.sim_elevation.len()), (3, 3, 3));
    let e = ds.entries(Split::RealTest)[0];
    let sample = radarsim_core::worldsim::real_sample(&config.world(), e.seed).unwrap();
    assert_eq!(ds.radar(e).unwrap(), sample.radar);
    assert_eq!(ds.partial(e).unwrap(), sample.partial);
    ds.require(&Split::ALL).unwrap();
}

#[test]
fn interrupted_training_resumes_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let (config, ds) = small_dataset(&dir.path().join("data"));
    let mut train = config.train;
    train.steps = 6;
    train.checkpoint_every = 3;
    let run = |out: &str, steps: u64, resume: bool| {
        let r = TrainRun {
            out_dir: dir.path().join(out),
            ablation: ablation_preset("e").unwrap(),
            train: radarsim_core::trainer::TrainConfig { steps, ..train },
            model: config.model,
            resume,
        };
        run_training(&ds, &r, |_, _| {}).unwrap()
    };
    let full = run("full", 6, false);
    run("split", 3, false);
    let resumed = run("split", 6, true);
    assert_eq!(resumed.resumed_from, Some(3));
    assert_eq!(
        fs::read(dir.path().join("full").join(METRICS_FILE)).unwrap(),
        fs::read(dir.path().join("split").join(METRICS_FILE)).unwrap()
    );
    assert_eq!(fs::read(&full.checkpoint).unwrap(), fs::read(&resumed.checkpoint).unwrap());

    let model = LearnedModel::load(&full.checkpoint).unwrap();
    assert_eq!(model.checkpoint.state.params.step, 6);
    let h = eval_height(&model, &ds, Split::RealTest, KappaPolicy::Mean(2), 0, 0.3).unwrap();
    assert!(h.count_free + h.count_occ > 0);
    assert!(h.mae_mean_cm.is_finite() && h.mae_mean_cm > 0.0);
}
