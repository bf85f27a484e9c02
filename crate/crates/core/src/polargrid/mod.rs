//! Polar grid geometry and the frame types shared by every other module.
//!
//! A grid has `num_azimuths` rows (outer dimension) and `num_range_bins`
//! columns. Azimuth is measured counter-clockwise from the sensor's +x axis
//! and bins are half-open: azimuth bin `i` covers `[i, i+1) * span / rows`,
//! range bin `j` covers `[j, j+1) * range_resolution`.

mod binning;
mod raster;

pub use binning::bin_pointcloud;
pub use raster::{cartesian_raster, Raster};

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarGridSpec {
    pub num_azimuths: usize,
    pub num_range_bins: usize,
    /// Meters per range bin.
    pub range_resolution: f64,
    /// Full azimuth field of view in degrees.
    pub azimuth_span: f64,
    pub height_min: f64,
    pub height_max: f64,
    /// Sensor height above the ground plane, meters.
    pub sensor_height: f64,
    /// (lower, upper) elevation beam limits in degrees.
    pub elevation_fov: (f64, f64),
}

impl PolarGridSpec {
    /// The full-size grid: 400 azimuths by 471 range bins at 0.35 m.
    pub fn paper() -> Self {
        Self {
            num_azimuths: 400,
            num_range_bins: 471,
            range_resolution: 0.35,
            azimuth_span: 360.0,
            height_min: -2.2,
            height_max: 5.2,
            sensor_height: 1.97,
            elevation_fov: (-40.0, 1.8),
        }
    }

    /// 64 x 64 grid used for tests and the desk-scale experiments.
    pub fn desk() -> Self {
        Self {
            num_azimuths: 64,
            num_range_bins: 64,
            ..Self::paper()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_azimuths == 0 {
            return Err(Error::InvalidGrid("num_azimuths must be >= 1"));
        }
        if self.num_range_bins == 0 {
            return Err(Error::InvalidGrid("num_range_bins must be >= 1"));
        }
        if !(self.range_resolution.is_finite() && self.range_resolution > 0.0) {
            return Err(Error::InvalidGrid("range_resolution must be > 0"));
        }
        if !(self.azimuth_span.is_finite() && self.azimuth_span > 0.0 && self.azimuth_span <= 360.0)
        {
            return Err(Error::InvalidGrid("azimuth_span must be in (0, 360]"));
        }
        if !(self.height_min.is_finite()
            && self.height_max.is_finite()
            && self.height_min < self.height_max)
        {
            return Err(Error::InvalidGrid("height_min must be < height_max"));
        }
        if !self.sensor_height.is_finite() {
            return Err(Error::InvalidGrid("sensor_height must be finite"));
        }
        let (lo, hi) = self.elevation_fov;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidGrid("elevation_fov must be an increasing pair"));
        }
        Ok(())
    }

    pub fn cells(&self) -> usize {
        self.num_azimuths * self.num_range_bins
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.num_azimuths, self.num_range_bins)
    }

    /// Degrees per azimuth bin.
    pub fn azimuth_step(&self) -> f64 {
        self.azimuth_span / self.num_azimuths as f64
    }

    pub fn max_range(&self) -> f64 {
        self.num_range_bins as f64 * self.range_resolution
    }

    pub fn index(&self, azimuth: usize, range: usize) -> usize {
        azimuth * self.num_range_bins + range
    }

    /// Azimuth bin of an angle in degrees, or `None` outside a partial span.
    pub fn azimuth_bin(&self, degrees: f64) -> Option<usize> {
        let a = wrap_degrees(degrees);
        if a >= self.azimuth_span {
            return None;
        }
        let i = libm::floor(a / self.azimuth_step()) as usize;
        // rounding at the top edge of a full circle wraps back to bin 0
        Some(i % self.num_azimuths)
    }

    /// Range bin of a horizontal distance, or `None` past the last bin.
    pub fn range_bin(&self, meters: f64) -> Option<usize> {
        if !(meters >= 0.0) {
            return None;
        }
        let j = libm::floor(meters / self.range_resolution) as usize;
        (j < self.num_range_bins).then_some(j)
    }

    /// Bin of a horizontal point in the sensor frame.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let r = libm::hypot(x, y);
        let j = self.range_bin(r)?;
        let deg = libm::atan2(y, x).to_degrees();
        let i = self.azimuth_bin(deg)?;
        Some((i, j))
    }

    /// Azimuth of a bin's center, degrees.
    pub fn azimuth_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.azimuth_step()
    }

    pub fn range_center(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.range_resolution
    }

    fn check_shape(&self, len: usize) -> Result<()> {
        if len != self.cells() {
            return Err(Error::ShapeMismatch {
                expected: self.dims(),
                got: (len / self.num_range_bins.max(1), len % self.num_range_bins.max(1)),
            });
        }
        Ok(())
    }

    pub(crate) fn same_as(&self, other: &Self) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::ShapeMismatch {
                expected: self.dims(),
                got: other.dims(),
            });
        }
        Ok(())
    }
}

impl Default for PolarGridSpec {
    fn default() -> Self {
        Self::paper()
    }
}

/// Maps an angle in degrees into `[0, 360)`.
pub fn wrap_degrees(d: f64) -> f64 {
    let a = d - 360.0 * libm::floor(d / 360.0);
    if a >= 360.0 {
        0.0
    } else {
        a
    }
}

/// Affine map of `[height_min, height_max]` onto `[-1, 1]`; heights outside
/// the interval are clamped.
pub fn scale_height(h: f64, spec: &PolarGridSpec) -> Result<f64> {
    if !h.is_finite() {
        return Err(Error::NonFinite("height"));
    }
    let h = h.clamp(spec.height_min, spec.height_max);
    Ok(2.0 * (h - spec.height_min) / (spec.height_max - spec.height_min) - 1.0)
}

/// Exact inverse of [`scale_height`] on `[-1, 1]`.
pub fn unscale_height(s: f64, spec: &PolarGridSpec) -> Result<f64> {
    if !(-1.0..=1.0).contains(&s) {
        return Err(Error::OutOfRange {
            value: s,
            lo: -1.0,
            hi: 1.0,
        });
    }
    Ok(spec.height_min + (s + 1.0) * 0.5 * (spec.height_max - spec.height_min))
}

fn check_unit_range(values: &[f32]) -> Result<()> {
    for &v in values {
        if !v.is_finite() {
            return Err(Error::NonFinite("grid cell"));
        }
        if !(-1.0..=1.0).contains(&v) {
            return Err(Error::OutOfRange {
                value: v as f64,
                lo: -1.0,
                hi: 1.0,
            });
        }
    }
    Ok(())
}

/// Radar power returns, row-major with azimuth outer, each cell in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarFrame {
    pub spec: PolarGridSpec,
    pub power: Vec<f32>,
}

impl RadarFrame {
    pub fn new(spec: PolarGridSpec, power: Vec<f32>) -> Result<Self> {
        spec.check_shape(power.len())?;
        check_unit_range(&power)?;
        Ok(Self { spec, power })
    }

    pub fn filled(spec: PolarGridSpec, value: f32) -> Self {
        Self {
            spec,
            power: vec![value; spec.cells()],
        }
    }

    pub fn get(&self, azimuth: usize, range: usize) -> f32 {
        self.power[self.spec.index(azimuth, range)]
    }
}

/// Dense scaled elevation (height above the ground plane).
#[derive(Debug, Clone, PartialEq)]
pub struct ElevationMap {
    pub spec: PolarGridSpec,
    pub heights: Vec<f32>,
}

impl ElevationMap {
    pub fn new(spec: PolarGridSpec, heights: Vec<f32>) -> Result<Self> {
        spec.check_shape(heights.len())?;
        check_unit_range(&heights)?;
        Ok(Self { spec, heights })
    }

    pub fn filled(spec: PolarGridSpec, value: f32) -> Self {
        Self {
            spec,
            heights: vec![value; spec.cells()],
        }
    }

    pub fn get(&self, azimuth: usize, range: usize) -> f32 {
        self.heights[self.spec.index(azimuth, range)]
    }

    /// Height of a cell in meters.
    pub fn meters(&self, azimuth: usize, range: usize) -> f64 {
        let s = (self.get(azimuth, range) as f64).clamp(-1.0, 1.0);
        unscale_height(s, &self.spec).expect("clamped")
    }
}

/// Sparse scaled elevation with a measurement mask. Unmeasured cells hold -1.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialElevationMap {
    pub spec: PolarGridSpec,
    pub heights: Vec<f32>,
    pub mask: Vec<bool>,
}

impl PartialElevationMap {
    pub const SENTINEL: f32 = -1.0;

    pub fn empty(spec: PolarGridSpec) -> Self {
        Self {
            spec,
            heights: vec![Self::SENTINEL; spec.cells()],
            mask: vec![false; spec.cells()],
        }
    }

    pub fn new(spec: PolarGridSpec, heights: Vec<f32>, mask: Vec<bool>) -> Result<Self> {
        spec.check_shape(heights.len())?;
        spec.check_shape(mask.len())?;
        check_unit_range(&heights)?;
        if heights
            .iter()
            .zip(&mask)
            .any(|(&h, &m)| !m && h != Self::SENTINEL)
        {
            return Err(Error::InvalidParam(
                "unmasked cells must carry the -1 sentinel".into(),
            ));
        }
        Ok(Self { spec, heights, mask })
    }

    /// Mask as 0.0 / 1.0 floats, the on-disk representation.
    pub fn mask_f32(&self) -> Vec<f32> {
        self.mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect()
    }

    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn is_masked(&self, azimuth: usize, range: usize) -> bool {
        self.mask[self.spec.index(azimuth, range)]
    }

    pub fn get(&self, azimuth: usize, range: usize) -> f32 {
        self.heights[self.spec.index(azimuth, range)]
    }

    /// Records a scaled height at a cell, keeping the maximum seen so far.
    pub fn record_max(&mut self, azimuth: usize, range: usize, scaled: f32) {
        let k = self.spec.index(azimuth, range);
        if self.mask[k] {
            self.heights[k] = self.heights[k].max(scaled);
        } else {
            self.mask[k] = true;
            self.heights[k] = scaled;
        }
    }

    /// Treats every cell as measured.
    pub fn from_dense(w: &ElevationMap) -> Self {
        Self {
            spec: w.spec,
            heights: w.heights.clone(),
            mask: vec![true; w.spec.cells()],
        }
    }
}

/// Points in the sensor frame: sensor at the origin, z up, meters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    points: Vec<[f64; 3]>,
}

impl PointCloud {
    pub fn new(points: Vec<[f64; 3]>) -> Result<Self> {
        if points.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("point coordinate"));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn scale_endpoints_and_midpoint() {
        let s = PolarGridSpec::paper();
        assert!((scale_height(5.2, &s).unwrap() - 1.0).abs() < 1e-12);
        assert!((scale_height(-2.2, &s).unwrap() + 1.0).abs() < 1e-12);
        assert!(scale_height(1.5, &s).unwrap().abs() < 1e-12);
        assert_eq!(scale_height(100.0, &s).unwrap(), 1.0);
        assert_eq!(scale_height(-9.0, &s).unwrap(), -1.0);
        assert!(scale_height(f64::NAN, &s).is_err());
        assert!(scale_height(f64::INFINITY, &s).is_err());
    }

    #[test]
    fn unscale_endpoints_and_errors() {
        let s = PolarGridSpec::paper();
        assert!((unscale_height(1.0, &s).unwrap() - 5.2).abs() < 1e-12);
        assert!((unscale_height(-1.0, &s).unwrap() + 2.2).abs() < 1e-12);
        assert!((unscale_height(0.0, &s).unwrap() - 1.5).abs() < 1e-12);
        assert!(unscale_height(1.0001, &s).is_err());
        assert!(unscale_height(f64::NAN, &s).is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(PolarGridSpec::paper().validate().is_ok());
        let mut s = PolarGridSpec::desk();
        s.num_azimuths = 0;
        assert!(s.validate().is_err());
        let mut s = PolarGridSpec::desk();
        s.range_resolution = 0.0;
        assert!(s.validate().is_err());
        let mut s = PolarGridSpec::desk();
        s.height_max = s.height_min;
        assert!(s.validate().is_err());
    }

    #[test]
    fn half_open_bins() {
        let s = PolarGridSpec::paper();
        assert_eq!(s.range_bin(0.35), Some(1));
        assert_eq!(s.range_bin(0.3499), Some(0));
        assert_eq!(s.range_bin(471.0 * 0.35), None);
        assert_eq!(s.azimuth_bin(0.9), Some(1));
        assert_eq!(s.azimuth_bin(0.0), Some(0));
        assert_eq!(s.azimuth_bin(-0.1), Some(399));
        assert_eq!(s.azimuth_bin(360.0), Some(0));
    }

    #[test]
    fn partial_map_rejects_bad_sentinel() {
        let s = PolarGridSpec {
            num_azimuths: 1,
            num_range_bins: 2,
            ..PolarGridSpec::paper()
        };
        assert!(PartialElevationMap::new(s, vec![-1.0, 0.5], vec![false, true]).is_ok());
        assert!(PartialElevationMap::new(s, vec![0.0, 0.5], vec![false, true]).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(h in -2.2f64..=5.2) {
            let s = PolarGridSpec::paper();
            let back = unscale_height(scale_height(h, &s).unwrap(), &s).unwrap();
            prop_assert!((back - h).abs() < 1e-9);
        }

        #[test]
        fn monotone(a in -2.2f64..=5.2, b in -2.2f64..=5.2) {
            prop_assume!(a < b);
            let s = PolarGridSpec::paper();
            prop_assert!(scale_height(a, &s).unwrap() < scale_height(b, &s).unwrap());
        }
    }
}
