mod common;

use rand::Rng;
use sarprior_core::projection::{self, Extent, ProjectionSettings};
use sarprior_core::scatter::{simulate, PointCloud};
use sarprior_core::{DVec3, MonteCarloSpec, ProjectionMode, ScatterParams, ScatterPoint, Scene, ViewGeometry};

fn cloud_of(points: Vec<(DVec3, f64)>) -> PointCloud {
    let pts = points
        .into_iter()
        .enumerate()
        .map(|(i, (position, intensity))| ScatterPoint {
            position,
            intensity,
            bounce: 1,
            ray_id: i as u64,
        })
        .collect();
    PointCloud::new(pts, 4, 0.0, 30.0)
}

#[test]
fn sum_mode_conserves_mass() {
    let mut rng = common::rng(40);
    for trial in 0..100 {
        let geom = ViewGeometry::new(rng.random_range(0.0..360.0), rng.random_range(5.0..85.0), 100.0, 0.5).unwrap();
        let n = rng.random_range(1..2000);
        let mut inside = 0.0;
        let mut pts = Vec::with_capacity(n);
        for _ in 0..n {
            let intensity = rng.random_range(0.0..10.0);
            // a tenth of the points land far outside the fixed window
            if rng.random_bool(0.1) {
                pts.push((1e4 * common::unit_vector(&mut rng), intensity));
            } else {
                let p = DVec3::new(
                    rng.random_range(-5.0..5.0),
                    rng.random_range(-5.0..5.0),
                    rng.random_range(-5.0..5.0),
                );
                inside += intensity;
                pts.push((p, intensity));
            }
        }
        let settings = ProjectionSettings {
            width: rng.random_range(1..200),
            height: rng.random_range(1..200),
            extent: Some(Extent {
                cross_min: -10.0,
                cross_max: 10.0,
                range_min: -10.0,
                range_max: 10.0,
            }),
            ..Default::default()
        };
        let map = projection::project(&cloud_of(pts.clone()), &geom, &settings).unwrap();
        let total = map.total();
        assert!(
            (total - inside).abs() <= 1e-6 * inside.max(1e-300),
            "trial {trial}: {total} vs {inside}"
        );

        let auto = ProjectionSettings {
            extent: None,
            ..settings
        };
        let in_window: Vec<_> = pts.into_iter().filter(|(p, _)| p.length() < 100.0).collect();
        let all: f64 = in_window.iter().map(|(_, i)| i).sum();
        let map = projection::project(&cloud_of(in_window), &geom, &auto).unwrap();
        assert!((map.total() - all).abs() <= 1e-6 * all.max(1e-300));
    }
}

#[test]
fn max_mode_never_exceeds_brightest_point() {
    let mut rng = common::rng(41);
    for _ in 0..20 {
        let pts: Vec<_> = (0..500)
            .map(|_| {
                (
                    DVec3::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), 0.0),
                    rng.random_range(0.0..4.0),
                )
            })
            .collect();
        let peak = pts.iter().map(|p| p.1).fold(0.0, f64::max);
        let geom = ViewGeometry::new(90.0, 45.0, 50.0, 0.5).unwrap();
        let settings = ProjectionSettings {
            width: 40,
            height: 30,
            mode: ProjectionMode::Max,
            ..Default::default()
        };
        let map = projection::project(&cloud_of(pts), &geom, &settings).unwrap();
        assert!(map.max_value() <= peak);
        assert!(map.pixels.iter().all(|&p| p >= 0.0));
    }
}

#[test]
fn simulated_cloud_projects_to_nonzero_image() {
    let mut mesh = common::aircraft();
    mesh.flag_structural_faces(10.0).unwrap();
    let scene = Scene::new(mesh);
    let geom = ViewGeometry::new(30.0, 30.0, 120.0, 0.5).unwrap();
    let mc = MonteCarloSpec {
        count: 10_000,
        sigma: 0.05,
        seed: 2,
    };
    let sim = simulate(&scene, &geom, None, &mc, &ScatterParams::default(), 1).unwrap();
    let map = projection::project(&sim.cloud, &geom, &ProjectionSettings::default()).unwrap();
    assert!(map.max_value() > 0.0);
    let rel = (map.total() - sim.cloud.total_intensity()).abs() / sim.cloud.total_intensity();
    assert!(rel < 1e-9);

    let a = projection::encode_image(&map, projection::ImageFormat::Png, projection::BitDepth::Eight).unwrap();
    let b = projection::encode_image(&map, projection::ImageFormat::Png, projection::BitDepth::Eight).unwrap();
    assert_eq!(a, b);
}
