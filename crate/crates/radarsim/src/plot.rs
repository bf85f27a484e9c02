//! PNG panels of polar grids resampled to a top-down Cartesian view.

use std::path::Path;

use image::{Rgb, RgbImage};
use radarsim_core::polargrid::{cartesian_raster, PolarGridSpec, Raster};

use crate::error::{Error, Result};

const GAP: u32 = 8;

/// Maps [-1, 1] onto a dark-blue to yellow ramp.
fn color(v: f32) -> Rgb<u8> {
    let t = ((v.clamp(-1.0, 1.0) + 1.0) / 2.0) as f64;
    let stops = [(0.0, [20.0, 24.0, 82.0]), (0.5, [33.0, 145.0, 140.0]), (1.0, [253.0, 231.0, 37.0])];
    let (a, b) = if t < 0.5 { (stops[0], stops[1]) } else { (stops[1], stops[2]) };
    let u = (t - a.0) / (b.0 - a.0);
    let mix = |k: usize| (a.1[k] + u * (b.1[k] - a.1[k])).round() as u8;
    Rgb([mix(0), mix(1), mix(2)])
}

/// Side-by-side panels, one per grid in `planes`, each rendered at
/// `pixels_per_meter`.
pub fn render_panels(planes: &[&[f32]], spec: &PolarGridSpec, pixels_per_meter: f64) -> Result<RgbImage> {
    let rasters = planes
        .iter()
        .map(|p| cartesian_raster(p, spec, pixels_per_meter))
        .collect::<radarsim_core::Result<Vec<Raster>>>()?;
    let side = rasters.first().map_or(0, |r| r.width) as u32;
    let n = rasters.len() as u32;
    let width = n * side + n.saturating_sub(1) * GAP;
    let mut img = RgbImage::from_pixel(width.max(1), side.max(1), Rgb([255, 255, 255]));
    for (k, r) in rasters.iter().enumerate() {
        let x0 = k as u32 * (side + GAP);
        for row in 0..r.height {
            for col in 0..r.width {
                img.put_pixel(x0 + col as u32, row as u32, color(r.get(col, row)));
            }
        }
    }
    Ok(img)
}

pub fn write_png(img: &RgbImage, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    img.save(path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panel_layout_and_ramp_ends() {
        let spec = PolarGridSpec {
            num_azimuths: 16,
            num_range_bins: 8,
            ..PolarGridSpec::desk()
        };
        let a = vec![1.0f32; spec.cells()];
        let b = vec![-1.0f32; spec.cells()];
        let img = render_panels(&[&a, &b], &spec, 2.0).unwrap();
        let side = (2.0 * spec.max_range() * 2.0).ceil() as u32;
        assert_eq!(img.dimensions(), (2 * side + GAP, side));
        let c = side / 2;
        assert_eq!(*img.get_pixel(c, c), color(1.0));
        assert_eq!(*img.get_pixel(side + GAP + c, c), color(-1.0));
        assert_eq!(color(1.0), Rgb([253, 231, 37]));
    }
}
