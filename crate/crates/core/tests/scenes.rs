use radarsim_core::evalkit::{occupancy_from_dense, Class};
use radarsim_core::models::{forward_generator, init_parameters, LatentNoise, ModelConfig, Networks};
use radarsim_core::polargrid::{scale_height, ElevationMap, PolarGridSpec};
use radarsim_core::rng;
use radarsim_core::trainer::ImagePool;
use radarsim_core::worldsim::{real_sample, sim_scene, WorldConfig};

const THRESHOLD: f64 = 0.3;

#[test]
fn labels_on_random_scenes_follow_each_ray() {
    let world = WorldConfig::desk();
    let spec = world.grid;
    let meters = |s: f32| spec.height_min + (s as f64 + 1.0) / 2.0 * (spec.height_max - spec.height_min);
    for seed in 0..100 {
        let scene = sim_scene(&world, seed).unwrap();
        let o = occupancy_from_dense(&scene.elevation, scene.ground_level, THRESHOLD).unwrap();
        for i in 0..spec.num_azimuths {
            let first = (0..spec.num_range_bins).find(|&j| meters(scene.elevation.get(i, j)) > scene.ground_level + THRESHOLD);
            let end = first.unwrap_or(spec.num_range_bins);
            for j in 0..end {
                assert_eq!(o.get(i, j), Class::Free, "seed {seed} ray {i} bin {j}");
            }
            if let Some(k) = first {
                assert_eq!(o.get(i, k), Class::Occupied);
            }
        }
    }
}

#[test]
fn flat_scene_is_all_free() {
    let spec = PolarGridSpec::desk();
    let w = ElevationMap::filled(spec, scale_height(0.4, &spec).unwrap() as f32);
    let o = occupancy_from_dense(&w, 0.4, THRESHOLD).unwrap();
    assert_eq!(o.count(Class::Free), spec.cells());
}

#[test]
fn real_samples_are_reproducible() {
    let world = WorldConfig::desk();
    assert_eq!(real_sample(&world, 9).unwrap(), real_sample(&world, 9).unwrap());
    assert_ne!(real_sample(&world, 9).unwrap().radar, real_sample(&world, 10).unwrap().radar);
}

#[test]
fn forward_model_is_stochastic_at_init() {
    let world = WorldConfig::desk();
    let nets = Networks::new(ModelConfig::desk(), world.grid).unwrap();
    let params = init_parameters(&nets, 0);
    let w = sim_scene(&world, 3).unwrap().elevation;
    let mut r = rng::rng(4);
    let a = forward_generator(&nets, &w, &LatentNoise::sample(world.grid, &mut r), &params.theta_x.values).unwrap();
    let b = forward_generator(&nets, &w, &LatentNoise::sample(world.grid, &mut r), &params.theta_x.values).unwrap();
    let differing = a.power.iter().zip(&b.power).filter(|(u, v)| u != v).count();
    assert!(differing * 100 >= world.grid.cells(), "{differing}");
    assert!(a.power.iter().all(|v| v.abs() <= 1.0));
}

#[test]
fn pool_fills_then_swaps() {
    let mut pool = ImagePool::new(ImagePool::DEFAULT_CAPACITY, 3);
    for k in 0..50 {
        assert_eq!(pool.query(vec![k as f32]), vec![k as f32]);
    }
    assert_eq!(pool.len(), 50);
    let mut swaps = 0;
    for k in 50..2050 {
        if pool.query(vec![k as f32]) != vec![k as f32] {
            swaps += 1;
        }
        assert!(pool.len() <= 50);
    }
    assert!((800..1200).contains(&swaps), "{swaps}");
}
