//! File formats, dataset generation, training runs, evaluation reports,
//! plots and the command line on top of `radarsim-core`.

pub use radarsim_core as core;

pub mod ablation;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod frames;
pub mod plot;
pub mod record;
pub mod report;
pub mod training;

pub use error::{Error, Result};
