use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polargrid::{ElevationMap, PartialElevationMap, PolarGridSpec};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LidarSimParams {
    /// Beam elevation angles, degrees (negative points down).
    pub beam_elevations: Vec<f64>,
    pub max_range: f64,
    /// Spacing of the scanned azimuths, degrees.
    pub azimuth_step: f64,
    pub dropout_prob: f64,
}

impl LidarSimParams {
    /// Eight beams evenly spaced from -30 to -1 degrees, four azimuths per
    /// grid bin, 10% dropout, range capped at 50 m and at the grid edge.
    pub fn default_for(spec: &PolarGridSpec) -> Self {
        Self {
            beam_elevations: (0..8).map(|k| -30.0 + 29.0 * k as f64 / 7.0).collect(),
            max_range: spec.max_range().min(50.0),
            azimuth_step: spec.azimuth_step() / 4.0,
            dropout_prob: 0.1,
        }
    }

    pub fn validate(&self, spec: &PolarGridSpec) -> Result<()> {
        if !(self.max_range > 0.0 && self.max_range <= spec.max_range()) {
            return Err(Error::InvalidParam("lidar max_range must be in (0, grid range]".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_prob) {
            return Err(Error::InvalidParam("dropout_prob must be in [0, 1)".into()));
        }
        if !(self.azimuth_step > 0.0) || self.beam_elevations.iter().any(|b| !(b.abs() < 90.0)) {
            return Err(Error::InvalidParam("invalid lidar beam geometry".into()));
        }
        Ok(())
    }
}

/// First range at which a beam from `sensor_height` at `elevation` degrees
/// meets the piecewise-constant terrain `ray` (meters per range bin).
fn first_hit(ray: &[f64], resolution: f64, sensor_height: f64, elevation: f64, max_range: f64) -> Option<(usize, f64)> {
    let slope = libm::tan(elevation.to_radians());
    for (j, &h) in ray.iter().enumerate() {
        let r0 = j as f64 * resolution;
        if r0 > max_range {
            return None;
        }
        if sensor_height + r0 * slope <= h {
            return Some((j, r0));
        }
        if slope < 0.0 {
            let r = (h - sensor_height) / slope;
            if r < (j + 1) as f64 * resolution {
                return (r <= max_range).then_some((j, r));
            }
        }
    }
    None
}

/// Casts every beam along every scanned azimuth and records the surface
/// height of the first cell each beam hits (max per cell, as in point cloud
/// binning). Dropped samples leave their cell unmeasured.
pub fn simulate_lidar(
    w: &ElevationMap,
    params: &LidarSimParams,
    spec: &PolarGridSpec,
    seed: u64,
) -> Result<PartialElevationMap> {
    spec.validate()?;
    spec.same_as(&w.spec)?;
    params.validate(spec)?;
    let mut out = PartialElevationMap::empty(*spec);
    let mut r = rng::rng(seed);
    let scans = libm::floor(spec.azimuth_span / params.azimuth_step) as usize;
    let nr = spec.num_range_bins;
    let mut ray = alloc::vec![0.0; nr];
    for k in 0..scans {
        let phi = (k as f64 + 0.5) * params.azimuth_step;
        let Some(i) = spec.azimuth_bin(phi) else {
            continue;
        };
        for (j, h) in ray.iter_mut().enumerate() {
            *h = w.meters(i, j);
        }
        for &beam in &params.beam_elevations {
            let keep = rng::uniform(&mut r) >= params.dropout_prob;
            if let Some((j, _)) = first_hit(&ray, spec.range_resolution, spec.sensor_height, beam, params.max_range) {
                if keep {
                    out.record_max(i, j, w.get(i, j));
                }
            }
        }
    }
    Ok(out)
}
