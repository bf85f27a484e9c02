//! Effective run configuration: built-in profile defaults, overridden by a
//! JSON file, overridden by command-line flags.

use std::path::Path;

use radarsim_core::models::{ModelConfig, SegmenterConfig};
use radarsim_core::polargrid::PolarGridSpec;
use radarsim_core::trainer::TrainConfig;
use radarsim_core::worldsim::{LidarSimParams, OracleSensorParams, SceneParams, SplitCounts, WorldConfig};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::checkpoint::hex;
use crate::error::{Error, Result};
use crate::evaluation::EvalConfig;

pub const PROFILE_ENV: &str = "RADAR_SIM_PROFILE";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Desk,
    Paper,
}

impl Profile {
    /// `flag` wins over the environment; the default is desk.
    pub fn resolve(flag: Option<Profile>) -> Result<Profile> {
        if let Some(p) = flag {
            return Ok(p);
        }
        match std::env::var(PROFILE_ENV) {
            Ok(v) => match v.as_str() {
                "desk" => Ok(Profile::Desk),
                "paper" => Ok(Profile::Paper),
                other => Err(Error::Usage(format!("{PROFILE_ENV}={other}: expected desk or paper"))),
            },
            Err(_) => Ok(Profile::Desk),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub profile: Profile,
    pub grid: PolarGridSpec,
    pub scene: SceneParams,
    pub sensor: OracleSensorParams,
    pub lidar: LidarSimParams,
    pub counts: SplitCounts,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
}

impl RunConfig {
    pub fn defaults(profile: Profile) -> Self {
        let (world, counts, model, train, segmenter) = match profile {
            Profile::Desk => (
                WorldConfig::desk(),
                SplitCounts::desk(),
                ModelConfig::desk(),
                TrainConfig::desk(),
                SegmenterConfig::desk(),
            ),
            Profile::Paper => (
                WorldConfig::paper(),
                SplitCounts::paper(),
                ModelConfig::paper(),
                TrainConfig::paper(),
                SegmenterConfig::paper(),
            ),
        };
        Self {
            profile,
            grid: world.grid,
            scene: world.scene,
            sensor: world.sensor,
            lidar: world.lidar,
            counts,
            model,
            train,
            eval: EvalConfig {
                segmenter,
                ..EvalConfig::default()
            },
        }
    }

    pub fn world(&self) -> WorldConfig {
        WorldConfig {
            grid: self.grid,
            scene: self.scene,
            sensor: self.sensor,
            lidar: self.lidar.clone(),
        }
    }

    /// Profile defaults with the JSON object `overrides` merged on top.
    /// Keys absent from the defaults are rejected.
    pub fn with_overrides(profile: Profile, overrides: &Value) -> std::result::Result<Self, String> {
        let mut base = serde_json::to_value(Self::defaults(profile)).expect("config serializes");
        merge(&mut base, overrides, "")?;
        serde_json::from_value(base).map_err(|e| e.to_string())
    }

    pub fn load(profile: Profile, file: Option<&Path>) -> Result<Self> {
        let Some(path) = file else {
            return Ok(Self::defaults(profile));
        };
        let text = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let overrides: Value = serde_json::from_slice(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        Self::with_overrides(profile, &overrides).map_err(|e| Error::Usage(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        hex(&Sha256::digest(serde_json::to_vec(self).expect("config serializes")))
    }
}

fn merge(base: &mut Value, over: &Value, at: &str) -> std::result::Result<(), String> {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                let path = if at.is_empty() { k.clone() } else { format!("{at}.{k}") };
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v, &path)?,
                    None => return Err(format!("unknown config key `{path}`")),
                }
            }
            Ok(())
        }
        (slot, v) => {
            *slot = v.clone();
            Ok(())
        }
    }
}
