//! Procedural worlds and reference sensors.
//!
//! Scenes are flat ground with boxes, poles and wall segments. The oracle
//! radar is a fixed stochastic sensor that stands in for real radar data,
//! and the lidar simulator produces the sparse height measurements that come
//! with it.

mod dataset;
mod lidar;
mod oracle;

pub use dataset::{
    real_sample, scene_seed, sim_scene, DatasetManifest, EntryFiles, ManifestEntry, RealSample, Split,
    SplitCounts, WorldConfig,
};
pub use lidar::{simulate_lidar, LidarSimParams};
pub use oracle::{oracle_radar, OracleSensorParams};

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polargrid::{scale_height, ElevationMap, PolarGridSpec};
use crate::rng::{self, Rng};

/// Closed interval `[lo, hi]` of a sampled quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    fn valid(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi
    }

    fn sample(&self, r: &mut Rng) -> f64 {
        rng::uniform_range(r, self.lo, self.hi)
    }
}

/// Vehicle-like rectangles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxKind {
    pub length: Interval,
    pub width: Interval,
    pub height: Interval,
}

/// Pole-like discs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylinderKind {
    pub radius: Interval,
    pub height: Interval,
}

/// Straight wall segments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WallKind {
    pub length: Interval,
    pub thickness: Interval,
    pub height: Interval,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneParams {
    /// Base ground level, meters.
    pub ground_height: f64,
    /// Per-scene uniform jitter of the ground level, meters.
    pub ground_jitter: f64,
    /// Inclusive `(min, max)` number of obstacles.
    pub obstacle_count: (usize, usize),
    /// Obstacles are centered at horizontal distances in this interval.
    pub placement_range: Interval,
    pub boxes: BoxKind,
    pub cylinders: CylinderKind,
    pub walls: WallKind,
    pub rng_seed: u64,
}

impl SceneParams {
    pub fn desk() -> Self {
        Self {
            ground_height: 0.0,
            ground_jitter: 0.2,
            obstacle_count: (3, 8),
            placement_range: Interval::new(2.5, 20.0),
            boxes: BoxKind {
                length: Interval::new(3.5, 5.0),
                width: Interval::new(1.6, 2.2),
                height: Interval::new(1.2, 2.2),
            },
            cylinders: CylinderKind {
                radius: Interval::new(0.15, 0.5),
                height: Interval::new(2.5, 4.5),
            },
            walls: WallKind {
                length: Interval::new(3.0, 9.0),
                thickness: Interval::new(0.3, 0.6),
                height: Interval::new(1.0, 3.0),
            },
            rng_seed: 0,
        }
    }

    pub fn paper() -> Self {
        Self {
            obstacle_count: (10, 40),
            placement_range: Interval::new(2.5, 160.0),
            ..Self::desk()
        }
    }

    pub fn validate(&self, spec: &PolarGridSpec) -> Result<()> {
        let intervals = [
            self.placement_range,
            self.boxes.length,
            self.boxes.width,
            self.boxes.height,
            self.cylinders.radius,
            self.cylinders.height,
            self.walls.length,
            self.walls.thickness,
            self.walls.height,
        ];
        if intervals.iter().any(|i| !i.valid()) || self.obstacle_count.0 > self.obstacle_count.1 {
            return Err(Error::InvalidParam("scene ranges must be non-empty".into()));
        }
        if !(self.ground_jitter >= 0.0) || !self.ground_height.is_finite() {
            return Err(Error::InvalidParam("ground level must be finite, jitter >= 0".into()));
        }
        let lowest = self.ground_height - self.ground_jitter;
        let tallest = self.boxes.height.hi.max(self.cylinders.height.hi).max(self.walls.height.hi);
        if lowest < spec.height_min || self.ground_height + self.ground_jitter + tallest > spec.height_max {
            return Err(Error::InvalidParam("scene heights exceed the grid height range".into()));
        }
        Ok(())
    }
}

impl Default for SceneParams {
    fn default() -> Self {
        Self::desk()
    }
}

/// An obstacle in the sensor frame; `height` is measured above the scene's
/// ground level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Obstacle {
    /// Rectangle centered at `center`, rotated by `yaw` radians.
    Box {
        center: [f64; 2],
        length: f64,
        width: f64,
        yaw: f64,
        height: f64,
    },
    Cylinder {
        center: [f64; 2],
        radius: f64,
        height: f64,
    },
    /// Segment from `start` to `end` of the given thickness.
    Wall {
        start: [f64; 2],
        end: [f64; 2],
        thickness: f64,
        height: f64,
    },
}

impl Obstacle {
    pub fn height(&self) -> f64 {
        match *self {
            Obstacle::Box { height, .. } | Obstacle::Cylinder { height, .. } | Obstacle::Wall { height, .. } => height,
        }
    }

    /// Oriented rectangle covering the footprint: center, half extents along
    /// the local axes and the unit local x axis.
    fn frame(&self) -> ([f64; 2], [f64; 2], [f64; 2]) {
        match *self {
            Obstacle::Box {
                center,
                length,
                width,
                yaw,
                ..
            } => (center, [length / 2.0, width / 2.0], [libm::cos(yaw), libm::sin(yaw)]),
            Obstacle::Cylinder { center, radius, .. } => (center, [radius, radius], [1.0, 0.0]),
            Obstacle::Wall {
                start,
                end,
                thickness,
                ..
            } => {
                let d = [end[0] - start[0], end[1] - start[1]];
                let len = libm::hypot(d[0], d[1]);
                let axis = if len > 0.0 { [d[0] / len, d[1] / len] } else { [1.0, 0.0] };
                let c = [(start[0] + end[0]) / 2.0, (start[1] + end[1]) / 2.0];
                (c, [len / 2.0, thickness / 2.0], axis)
            }
        }
    }

    fn contains(&self, p: [f64; 2]) -> bool {
        if let Obstacle::Cylinder { center, radius, .. } = *self {
            return libm::hypot(p[0] - center[0], p[1] - center[1]) <= radius;
        }
        let (c, half, ax) = self.frame();
        let d = [p[0] - c[0], p[1] - c[1]];
        let u = d[0] * ax[0] + d[1] * ax[1];
        let v = -d[0] * ax[1] + d[1] * ax[0];
        u.abs() <= half[0] + 1e-12 && v.abs() <= half[1] + 1e-12
    }

    /// Footprint points on a lattice of spacing at most `step`, including
    /// the boundary.
    fn footprint(&self, step: f64, out: &mut Vec<[f64; 2]>) {
        let (c, half, ax) = self.frame();
        let n0 = libm::ceil(2.0 * half[0] / step) as usize;
        let n1 = libm::ceil(2.0 * half[1] / step) as usize;
        for a in 0..=n0 {
            let u = -half[0] + 2.0 * half[0] * a as f64 / n0.max(1) as f64;
            for b in 0..=n1 {
                let v = -half[1] + 2.0 * half[1] * b as f64 / n1.max(1) as f64;
                let p = [c[0] + u * ax[0] - v * ax[1], c[1] + u * ax[1] + v * ax[0]];
                if self.contains(p) {
                    out.push(p);
                }
            }
        }
        if let Obstacle::Cylinder { center, radius, .. } = *self {
            // the lattice can miss the rim of small discs
            let k = libm::ceil(2.0 * core::f64::consts::PI * radius / step).max(8.0) as usize;
            for t in 0..k {
                let a = 2.0 * core::f64::consts::PI * t as f64 / k as f64;
                out.push([center[0] + radius * libm::cos(a), center[1] + radius * libm::sin(a)]);
            }
        }
    }
}

/// A generated scene: the dense elevation map plus what produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub elevation: ElevationMap,
    /// Ground level of this scene, meters.
    pub ground_level: f64,
    pub obstacles: Vec<Obstacle>,
}

/// Footprint lattice spacing, meters.
const FOOTPRINT_STEP: f64 = 0.02;

/// Rasterizes obstacles onto flat ground. A cell takes the tallest obstacle
/// whose footprint touches it.
pub fn render_scene(spec: &PolarGridSpec, ground_level: f64, obstacles: &[Obstacle]) -> Result<ElevationMap> {
    spec.validate()?;
    let mut top = alloc::vec![ground_level; spec.cells()];
    let mut pts = Vec::new();
    for ob in obstacles {
        pts.clear();
        ob.footprint(FOOTPRINT_STEP, &mut pts);
        let h = ground_level + ob.height();
        for p in &pts {
            if let Some((i, j)) = spec.cell_of(p[0], p[1]) {
                let k = spec.index(i, j);
                if h > top[k] {
                    top[k] = h;
                }
            }
        }
    }
    let heights = top
        .into_iter()
        .map(|h| scale_height(h, spec).map(|s| s as f32))
        .collect::<Result<Vec<_>>>()?;
    ElevationMap::new(*spec, heights)
}

fn random_obstacle(params: &SceneParams, r: &mut Rng) -> Obstacle {
    let dist = params.placement_range.sample(r);
    let bearing = rng::uniform_range(r, 0.0, 2.0 * core::f64::consts::PI);
    let center = [dist * libm::cos(bearing), dist * libm::sin(bearing)];
    let yaw = rng::uniform_range(r, 0.0, core::f64::consts::PI);
    match rng::int_range(r, 0, 2) {
        0 => Obstacle::Box {
            center,
            length: params.boxes.length.sample(r),
            width: params.boxes.width.sample(r),
            yaw,
            height: params.boxes.height.sample(r),
        },
        1 => Obstacle::Cylinder {
            center,
            radius: params.cylinders.radius.sample(r),
            height: params.cylinders.height.sample(r),
        },
        _ => {
            let half = params.walls.length.sample(r) / 2.0;
            let (c, s) = (libm::cos(yaw), libm::sin(yaw));
            Obstacle::Wall {
                start: [center[0] - half * c, center[1] - half * s],
                end: [center[0] + half * c, center[1] + half * s],
                thickness: params.walls.thickness.sample(r),
                height: params.walls.height.sample(r),
            }
        }
    }
}

/// Samples a scene from `params.rng_seed`.
pub fn generate_scene_full(params: &SceneParams, spec: &PolarGridSpec) -> Result<Scene> {
    spec.validate()?;
    params.validate(spec)?;
    let mut r = rng::rng(params.rng_seed);
    let ground_level = params.ground_height + params.ground_jitter * rng::uniform_range(&mut r, -1.0, 1.0);
    let count = rng::int_range(&mut r, params.obstacle_count.0, params.obstacle_count.1);
    let obstacles: Vec<Obstacle> = (0..count).map(|_| random_obstacle(params, &mut r)).collect();
    let elevation = render_scene(spec, ground_level, &obstacles)?;
    Ok(Scene {
        elevation,
        ground_level,
        obstacles,
    })
}

/// Dense elevation map of the scene drawn from `params.rng_seed`.
pub fn generate_scene(params: &SceneParams, spec: &PolarGridSpec) -> Result<ElevationMap> {
    Ok(generate_scene_full(params, spec)?.elevation)
}
