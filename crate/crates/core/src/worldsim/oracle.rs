use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polargrid::{unscale_height, ElevationMap, RadarFrame};
use crate::rng;

/// Parameters of the reference radar. Power is in scaled units (`[-1, 1]`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleSensorParams {
    pub noise_floor_mean: f64,
    pub noise_floor_std: f64,
    /// Power per meter of visible height above ground.
    pub return_gain: f64,
    /// Returns fall off as `(1 + bin)^-range_attenuation`.
    pub range_attenuation: f64,
    /// Std of the multiplicative speckle factor `1 + speckle_std * n`.
    pub speckle_std: f64,
    /// Fraction of the beam blocked by each obstacle crossed.
    pub occlusion_opacity: f64,
}

impl Default for OracleSensorParams {
    fn default() -> Self {
        Self {
            noise_floor_mean: -0.8,
            noise_floor_std: 0.05,
            return_gain: 1.5,
            range_attenuation: 0.3,
            speckle_std: 0.3,
            occlusion_opacity: 0.6,
        }
    }
}

impl OracleSensorParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.noise_floor_mean,
            self.noise_floor_std,
            self.return_gain,
            self.range_attenuation,
            self.speckle_std,
            self.occlusion_opacity,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite || self.noise_floor_std < 0.0 || self.speckle_std < 0.0 {
            return Err(Error::InvalidParam("sensor stds must be finite and >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.occlusion_opacity) {
            return Err(Error::InvalidParam("occlusion opacity must be in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Heights this far above the lowest cell count as an obstacle crossing.
const CROSSING_HEIGHT: f64 = 0.05;

/// Samples a radar frame for a dense elevation map.
///
/// Each azimuth ray is marched outward. The lowest cell of the map is taken
/// as ground; a cell's return is `gain * visible height * attenuation *
/// speckle` on top of a Gaussian noise floor, and the beam is dimmed by the
/// opacity after each obstacle (a run of raised cells) it passes.
pub fn oracle_radar(w: &ElevationMap, params: &OracleSensorParams, seed: u64) -> Result<RadarFrame> {
    params.validate()?;
    let spec = w.spec;
    let mut heights = alloc::vec::Vec::with_capacity(spec.cells());
    for &s in &w.heights {
        if !s.is_finite() {
            return Err(Error::NotDense(1));
        }
        heights.push(unscale_height((s as f64).clamp(-1.0, 1.0), &spec)?);
    }
    let ground = heights.iter().copied().fold(f64::INFINITY, f64::min);
    let mut r = rng::rng(seed);
    let mut power = alloc::vec::Vec::with_capacity(spec.cells());
    let nr = spec.num_range_bins;
    for i in 0..spec.num_azimuths {
        let ray = &heights[i * nr..(i + 1) * nr];
        let mut visibility = 1.0;
        for j in 0..nr {
            let noise = rng::normal(&mut r);
            let speckle = rng::normal(&mut r);
            let h = (ray[j] - ground).max(0.0);
            let falloff = libm::pow(1.0 + j as f64, -params.range_attenuation);
            let echo = params.return_gain * h * visibility * falloff * (1.0 + params.speckle_std * speckle).max(0.0);
            let p = params.noise_floor_mean + params.noise_floor_std * noise + echo;
            power.push(p.clamp(-1.0, 1.0) as f32);
            let raised = h > CROSSING_HEIGHT;
            let run_ends = j + 1 == nr || ray[j + 1] - ground <= CROSSING_HEIGHT;
            if raised && run_ends {
                visibility *= 1.0 - params.occlusion_opacity;
            }
        }
    }
    RadarFrame::new(spec, power)
}
