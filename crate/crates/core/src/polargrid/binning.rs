use super::{scale_height, PartialElevationMap, PointCloud, PolarGridSpec};
use crate::error::Result;

/// Rasterizes a sensor-frame point cloud into a partial elevation map.
///
/// Points outside the elevation field of view (angle measured from the
/// sensor origin, bounds inclusive) or past the last range bin are dropped.
/// Each touched cell keeps the scaled maximum ground-frame height of its
/// points.
pub fn bin_pointcloud(cloud: &PointCloud, spec: &PolarGridSpec) -> Result<PartialElevationMap> {
    spec.validate()?;
    let (lo, hi) = spec.elevation_fov;
    let mut out = PartialElevationMap::empty(*spec);
    // track the max in meters and scale once so ties resolve identically
    // regardless of point order
    let mut best = alloc::vec![f64::NEG_INFINITY; spec.cells()];
    for &[x, y, z] in cloud.points() {
        let r = libm::hypot(x, y);
        let elev = libm::atan2(z, r).to_degrees();
        if elev < lo || elev > hi {
            continue;
        }
        let Some((i, j)) = spec.cell_of(x, y) else {
            continue;
        };
        let k = spec.index(i, j);
        let h = z + spec.sensor_height;
        if h > best[k] {
            best[k] = h;
        }
    }
    for (k, &h) in best.iter().enumerate() {
        if h > f64::NEG_INFINITY {
            out.mask[k] = true;
            out.heights[k] = scale_height(h, spec)? as f32;
        }
    }
    Ok(out)
}
