//! Learned radar sensor models over polar grids.
//!
//! This crate holds everything that is pure computation: the polar grid
//! representation, a procedural world and oracle sensor, a small
//! reverse-mode network engine, the generator/discriminator/segmenter
//! architectures, every training objective, the adversarial training step
//! and the evaluation metrics. It builds without `std` (only `alloc` is
//! required); file formats, checkpoints and the command line live in the
//! `radarsim` crate.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod error;
pub mod evalkit;
pub mod models;
pub mod nn;
pub mod objectives;
pub mod polargrid;
pub mod rng;
pub mod trainer;
pub mod worldsim;

pub use error::{Error, Result};
pub use polargrid::{ElevationMap, PartialElevationMap, PointCloud, PolarGridSpec, RadarFrame};
