use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::{generate_scene_full, oracle_radar, simulate_lidar, LidarSimParams, OracleSensorParams, Scene, SceneParams};
use crate::error::Result;
use crate::polargrid::{PartialElevationMap, PolarGridSpec, RadarFrame};
use crate::rng;

/// Everything needed to regenerate a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub grid: PolarGridSpec,
    pub scene: SceneParams,
    pub sensor: OracleSensorParams,
    pub lidar: LidarSimParams,
}

impl WorldConfig {
    pub fn desk() -> Self {
        let grid = PolarGridSpec::desk();
        Self {
            grid,
            scene: SceneParams::desk(),
            sensor: OracleSensorParams::default(),
            lidar: LidarSimParams::default_for(&grid),
        }
    }

    pub fn paper() -> Self {
        let grid = PolarGridSpec::paper();
        Self {
            grid,
            scene: SceneParams::paper(),
            sensor: OracleSensorParams::default(),
            lidar: LidarSimParams::default_for(&grid),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.scene.validate(&self.grid)?;
        self.sensor.validate()?;
        self.lidar.validate(&self.grid)
    }
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self::desk()
    }
}

/// Dataset split. Real splits hold aligned radar and lidar, simulated
/// splits hold dense elevation only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Split {
    #[serde(rename = "R-train")]
    RealTrain,
    #[serde(rename = "R-test")]
    RealTest,
    #[serde(rename = "S-train")]
    SimTrain,
    #[serde(rename = "S-test")]
    SimTest,
}

impl Split {
    pub const ALL: [Split; 4] = [Split::RealTrain, Split::RealTest, Split::SimTrain, Split::SimTest];

    pub fn name(self) -> &'static str {
        match self {
            Split::RealTrain => "R-train",
            Split::RealTest => "R-test",
            Split::SimTrain => "S-train",
            Split::SimTest => "S-test",
        }
    }

    pub fn is_real(self) -> bool {
        matches!(self, Split::RealTrain | Split::RealTest)
    }

    fn tag(self) -> u64 {
        match self {
            Split::RealTrain => 0x5254_5241,
            Split::RealTest => 0x5254_5354,
            Split::SimTrain => 0x5354_5241,
            Split::SimTest => 0x5354_5354,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub r_train: usize,
    pub r_test: usize,
    pub s_train: usize,
    pub s_test: usize,
}

impl SplitCounts {
    pub fn desk() -> Self {
        Self {
            r_train: 64,
            r_test: 16,
            s_train: 64,
            s_test: 16,
        }
    }

    /// Sizes of the full-scale real and simulated datasets.
    pub fn paper() -> Self {
        Self {
            r_train: 222_420,
            r_test: 23_460,
            s_train: 100_000,
            s_test: 68_400,
        }
    }

    pub fn get(&self, split: Split) -> usize {
        match split {
            Split::RealTrain => self.r_train,
            Split::RealTest => self.r_test,
            Split::SimTrain => self.s_train,
            Split::SimTest => self.s_test,
        }
    }

    pub fn total(&self) -> usize {
        Split::ALL.iter().map(|&s| self.get(s)).sum()
    }
}

/// Seed of entry `index` of `split`. Every split draws from its own stream,
/// so real and simulated scenes never share a seed.
pub fn scene_seed(base_seed: u64, split: Split, index: usize) -> u64 {
    rng::mix(rng::mix(base_seed, split.tag()), index as u64)
}

/// A scene observed by the reference radar and the lidar.
#[derive(Debug, Clone, PartialEq)]
pub struct RealSample {
    pub scene: Scene,
    pub radar: RadarFrame,
    pub partial: PartialElevationMap,
}

pub fn real_sample(world: &WorldConfig, seed: u64) -> Result<RealSample> {
    let scene = sim_scene(world, seed)?;
    let radar = oracle_radar(&scene.elevation, &world.sensor, rng::mix(seed, 1))?;
    let partial = simulate_lidar(&scene.elevation, &world.lidar, &world.grid, rng::mix(seed, 2))?;
    Ok(RealSample { scene, radar, partial })
}

pub fn sim_scene(world: &WorldConfig, seed: u64) -> Result<Scene> {
    let params = SceneParams {
        rng_seed: seed,
        ..world.scene
    };
    generate_scene_full(&params, &world.grid)
}

/// Relative paths of an entry's frame files. Real entries carry `radar`,
/// `partial` and `elevation_mask` (the lidar heights and their mask) plus
/// the hidden dense `elevation`; simulated entries carry `elevation` only.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryFiles {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub radar: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub elevation: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub elevation_mask: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub partial: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub split: Split,
    pub seed: u64,
    /// Ground level of the scene, meters.
    pub ground_level: f64,
    pub files: EntryFiles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub grid: PolarGridSpec,
    pub world: WorldConfig,
    pub base_seed: u64,
    pub counts: SplitCounts,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;

    #[test]
    fn split_streams_are_disjoint() {
        let mut seen = BTreeSet::new();
        for split in Split::ALL {
            for i in 0..500 {
                assert!(seen.insert(scene_seed(7, split, i)), "{split:?} {i}");
            }
        }
    }

    #[test]
    fn real_sample_is_deterministic() {
        let world = WorldConfig::desk();
        let a = real_sample(&world, 3).unwrap();
        assert_eq!(a, real_sample(&world, 3).unwrap());
        assert!(a.partial.masked_count() > 0);
        assert!(a.partial.mask.iter().any(|m| !m));
    }

    #[test]
    fn counts() {
        assert_eq!(SplitCounts::desk().total(), 160);
        assert_eq!(SplitCounts::paper().total(), 414_280);
        WorldConfig::desk().validate().unwrap();
        WorldConfig::paper().validate().unwrap();
    }
}
