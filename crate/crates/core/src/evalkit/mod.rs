//! Occupancy labels, segmentation and height metrics, and the downstream
//! segmenter experiment used to score a learned sensor model.

mod downstream;
mod metrics;
mod occupancy;

pub use downstream::{
    evaluate_segmenter, predict, split_holdout, train_segmenter, SegSample, SegTrainConfig,
    SegTrainOutcome,
};
pub use metrics::{
    compute_height_mae, compute_miou, Confusion, HeightAccumulator, HeightMetrics, SegMetrics,
};
pub use occupancy::{occupancy_from_dense, occupancy_from_elevation};

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::polargrid::PolarGridSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Class {
    Free = 0,
    Occupied = 1,
    Unknown = 2,
}

impl Class {
    pub const ALL: [Class; 3] = [Class::Free, Class::Occupied, Class::Unknown];

    pub fn from_index(i: usize) -> Self {
        match i {
            0 => Class::Free,
            1 => Class::Occupied,
            _ => Class::Unknown,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    pub spec: PolarGridSpec,
    pub labels: Vec<Class>,
}

impl OccupancyGrid {
    pub fn filled(spec: PolarGridSpec, class: Class) -> Self {
        Self {
            spec,
            labels: alloc::vec![class; spec.cells()],
        }
    }

    pub fn get(&self, azimuth: usize, range: usize) -> Class {
        self.labels[self.spec.index(azimuth, range)]
    }

    pub fn count(&self, class: Class) -> usize {
        self.labels.iter().filter(|&&c| c == class).count()
    }
}
