use super::{Class, OccupancyGrid};
use crate::error::{Error, Result};
use crate::polargrid::{unscale_height, ElevationMap, PartialElevationMap};

/// Labels each ray of a (partial) elevation map.
///
/// A measured cell higher than `ground_level + ground_threshold` meters is a
/// return and is labeled occupied. Cells before the first return on a ray
/// are free. A ray without any return is free up to and including its last
/// measured cell. Everything else is unknown.
pub fn occupancy_from_elevation(
    src: &PartialElevationMap,
    ground_level: f64,
    ground_threshold: f64,
) -> Result<OccupancyGrid> {
    if !(ground_threshold.is_finite() && ground_threshold > 0.0) {
        return Err(Error::InvalidParam("ground_threshold must be > 0".into()));
    }
    let spec = src.spec;
    let mut out = OccupancyGrid::filled(spec, Class::Unknown);
    let limit = ground_level + ground_threshold;
    for i in 0..spec.num_azimuths {
        let mut first_return = None;
        let mut last_measured = None;
        for j in 0..spec.num_range_bins {
            if !src.is_masked(i, j) {
                continue;
            }
            last_measured = Some(j);
            let s = (src.get(i, j) as f64).clamp(-1.0, 1.0);
            if unscale_height(s, &spec)? > limit {
                out.labels[spec.index(i, j)] = Class::Occupied;
                first_return.get_or_insert(j);
            }
        }
        let free_until = match (first_return, last_measured) {
            (Some(k), _) => k,
            (None, Some(last)) => last + 1,
            (None, None) => 0,
        };
        for j in 0..free_until {
            out.labels[spec.index(i, j)] = Class::Free;
        }
    }
    Ok(out)
}

/// [`occupancy_from_elevation`] on a dense map (every cell measured).
pub fn occupancy_from_dense(
    w: &ElevationMap,
    ground_level: f64,
    ground_threshold: f64,
) -> Result<OccupancyGrid> {
    occupancy_from_elevation(&PartialElevationMap::from_dense(w), ground_level, ground_threshold)
}
