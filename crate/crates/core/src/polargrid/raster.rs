use alloc::vec::Vec;

use super::PolarGridSpec;
use crate::error::{Error, Result};

/// A square Cartesian image centered on the sensor. Row 0 is the +y edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f32>,
}

impl Raster {
    pub fn get(&self, col: usize, row: usize) -> f32 {
        self.pixels[row * self.width + col]
    }
}

/// Resamples a polar grid onto a Cartesian image; each pixel takes the value
/// of the polar cell containing its center, pixels past max range get -1.
pub fn cartesian_raster(
    values: &[f32],
    spec: &PolarGridSpec,
    pixels_per_meter: f64,
) -> Result<Raster> {
    if !(pixels_per_meter.is_finite() && pixels_per_meter > 0.0) {
        return Err(Error::InvalidParam("pixels_per_meter must be > 0".into()));
    }
    spec.validate()?;
    if values.len() != spec.cells() {
        return Err(Error::ShapeMismatch {
            expected: spec.dims(),
            got: (values.len(), 1),
        });
    }
    let side = libm::ceil(2.0 * spec.max_range() * pixels_per_meter) as usize;
    let half = side as f64 / 2.0;
    let mut pixels = Vec::with_capacity(side * side);
    for row in 0..side {
        let y = (half - (row as f64 + 0.5)) / pixels_per_meter;
        for col in 0..side {
            let x = (col as f64 + 0.5 - half) / pixels_per_meter;
            let v = match spec.cell_of(x, y) {
                Some((i, j)) => values[spec.index(i, j)],
                None => -1.0,
            };
            pixels.push(v);
        }
    }
    Ok(Raster {
        width: side,
        height: side,
        pixels,
    })
}
