//! On-disk datasets: frame files plus `manifest.json`.

use std::fs;
use std::path::{Path, PathBuf};

use radarsim_core::polargrid::{ElevationMap, PartialElevationMap, RadarFrame};
use radarsim_core::trainer::TrainData;
use radarsim_core::worldsim::{
    real_sample, scene_seed, sim_scene, DatasetManifest, EntryFiles, ManifestEntry, Split, SplitCounts, WorldConfig,
};

use crate::error::{Error, Result};
use crate::frames::{read_frame, read_mask, write_atomic, write_frame, write_mask};

pub const MANIFEST: &str = "manifest.json";

fn dir_name(split: Split) -> &'static str {
    match split {
        Split::RealTrain => "r_train",
        Split::RealTest => "r_test",
        Split::SimTrain => "s_train",
        Split::SimTest => "s_test",
    }
}

/// Generates every split and writes the manifest last, so a failed run
/// never leaves a manifest behind.
pub fn build_datasets(world: &WorldConfig, counts: &SplitCounts, base_seed: u64, out_dir: &Path) -> Result<DatasetManifest> {
    world.validate()?;
    let mut entries = Vec::with_capacity(counts.total());
    for split in Split::ALL {
        for index in 0..counts.get(split) {
            let seed = scene_seed(base_seed, split, index);
            let id = format!("{}_{index:06}", dir_name(split));
            let rel = |kind: &str| format!("{}/{id}.{kind}.f32", dir_name(split));
            let mut files = EntryFiles::default();
            let ground_level = if split.is_real() {
                let s = real_sample(world, seed)?;
                files.radar = Some(rel("radar"));
                files.elevation = Some(rel("elevation"));
                files.partial = Some(rel("partial"));
                files.elevation_mask = Some(rel("mask"));
                write_frame(&out_dir.join(files.radar.as_ref().unwrap()), &s.radar.power)?;
                write_frame(&out_dir.join(files.elevation.as_ref().unwrap()), &s.scene.elevation.heights)?;
                write_frame(&out_dir.join(files.partial.as_ref().unwrap()), &s.partial.heights)?;
                write_mask(&out_dir.join(files.elevation_mask.as_ref().unwrap()), &s.partial.mask)?;
                s.scene.ground_level
            } else {
                let scene = sim_scene(world, seed)?;
                files.elevation = Some(rel("elevation"));
                write_frame(&out_dir.join(files.elevation.as_ref().unwrap()), &scene.elevation.heights)?;
                scene.ground_level
            };
            entries.push(ManifestEntry {
                id,
                split,
                seed,
                ground_level,
                files,
            });
        }
    }
    let manifest = DatasetManifest {
        grid: world.grid,
        world: world.clone(),
        base_seed,
        counts: *counts,
        entries,
    };
    let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    write_atomic(&out_dir.join(MANIFEST), &json)?;
    Ok(manifest)
}

/// A dataset directory with its parsed manifest.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub dir: PathBuf,
    pub manifest: DatasetManifest,
}

impl Dataset {
    pub fn open(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: DatasetManifest = serde_json::from_slice(&bytes).map_err(|source| Error::Json {
            path: path.clone(),
            source,
        })?;
        manifest.grid.validate()?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest,
        })
    }

    pub fn entries(&self, split: Split) -> Vec<&ManifestEntry> {
        self.manifest.split(split).collect()
    }

    fn file(&self, entry: &ManifestEntry, name: &Option<String>, role: &'static str) -> Result<PathBuf> {
        name.as_ref()
            .map(|f| self.dir.join(f))
            .ok_or_else(|| Error::corrupt(self.dir.join(MANIFEST), format!("entry {} has no {role} file", entry.id)))
    }

    fn cells(&self) -> usize {
        self.manifest.grid.cells()
    }

    pub fn radar(&self, entry: &ManifestEntry) -> Result<RadarFrame> {
        let path = self.file(entry, &entry.files.radar, "radar")?;
        Ok(RadarFrame::new(self.manifest.grid, read_frame(&path, self.cells())?)?)
    }

    pub fn elevation(&self, entry: &ManifestEntry) -> Result<ElevationMap> {
        let path = self.file(entry, &entry.files.elevation, "elevation")?;
        Ok(ElevationMap::new(self.manifest.grid, read_frame(&path, self.cells())?)?)
    }

    pub fn partial(&self, entry: &ManifestEntry) -> Result<PartialElevationMap> {
        let heights = read_frame(&self.file(entry, &entry.files.partial, "partial")?, self.cells())?;
        let mask = read_mask(&self.file(entry, &entry.files.elevation_mask, "mask")?, self.cells())?;
        Ok(PartialElevationMap::new(self.manifest.grid, heights, mask)?)
    }

    /// Training roles: R-train radar with its lidar maps, S-train elevation.
    pub fn train_data(&self) -> Result<TrainData> {
        let mut data = TrainData::default();
        for e in self.entries(Split::RealTrain) {
            data.real_radar.push(self.radar(e)?);
            data.partial.push(self.partial(e)?);
        }
        for e in self.entries(Split::SimTrain) {
            data.sim_elevation.push(self.elevation(e)?);
        }
        Ok(data)
    }

    /// Fails unless every listed split has at least one entry.
    pub fn require(&self, splits: &[Split]) -> Result<()> {
        for &s in splits {
            if self.manifest.split(s).next().is_none() {
                return Err(radarsim_core::Error::MissingData(s.name()).into());
            }
        }
        Ok(())
    }
}
