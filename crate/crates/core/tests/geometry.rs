mod common;

use proptest::prelude::*;
use rand::Rng;
use sarprior_core::geometry::{self, los_frame, los_to_world, radar_rotation, world_to_los, RotationMatrix3};
use sarprior_core::{DVec3, ViewGeometry};

/// Independent evaluation of the rotation with `f64::sin_cos` on radians.
fn rotation_oracle(az: f64, dep: f64) -> [[f64; 3]; 3] {
    let (sp, cp) = az.to_radians().sin_cos();
    let (ss, cs) = dep.to_radians().sin_cos();
    [[cp, -sp, 0.0], [sp * cs, cp * cs, -ss], [sp * ss, cp * ss, cs]]
}

#[test]
fn rotation_is_orthonormal_for_random_angles() {
    let mut rng = common::rng(1);
    for _ in 0..10_000 {
        let az = rng.random_range(0.0..360.0);
        let dep = rng.random_range(-90.0..90.0);
        let t = radar_rotation(az, dep).unwrap();
        assert!(t.orthogonality_error() < 1e-12, "az {az} dep {dep}");
        assert!((t.determinant() - 1.0).abs() < 1e-12);
        let oracle = rotation_oracle(az, dep);
        for (row, expected) in t.rows().iter().zip(&oracle) {
            for (a, b) in row.iter().zip(expected) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }
}

#[test]
fn zero_angles_give_exact_identity() {
    assert_eq!(radar_rotation(0.0, 0.0).unwrap(), RotationMatrix3::IDENTITY);
}

#[test]
fn los_frame_matches_sensor_placement() {
    let mut rng = common::rng(2);
    for _ in 0..1000 {
        let az = rng.random_range(0.0..360.0);
        let dep = rng.random_range(1.0..89.0);
        let g = ViewGeometry::new(az, dep, 50.0, 0.5).unwrap();
        let f = los_frame(az, dep).unwrap();
        let (sp, cp) = az.to_radians().sin_cos();
        let (ss, cs) = dep.to_radians().sin_cos();
        let toward_sensor = DVec3::new(cp * cs, sp * cs, ss);
        assert!((f.row(1) + toward_sensor).length() < 1e-12);
        assert!(f.row(0).z.abs() < 1e-15, "cross-range axis must be horizontal");
        assert!(f.row(2).z > 0.0);
        let s = geometry::sensor_position(&g, DVec3::new(1.0, 2.0, 3.0));
        assert!((s - DVec3::new(1.0, 2.0, 3.0) - 50.0 * toward_sensor).length() < 1e-12);
    }
}

#[test]
fn los_frame_is_equivariant_under_yaw() {
    let mut rng = common::rng(3);
    for _ in 0..1000 {
        let az = rng.random_range(0.0..360.0);
        let dep = rng.random_range(1.0..89.0);
        let delta = rng.random_range(-180.0..180.0);
        let a = los_frame(az, dep).unwrap();
        let b = los_frame(az + delta, dep).unwrap();
        let rz = RotationMatrix3::about_z(delta);
        let expected = a.mul(&rz.transpose());
        for (r1, r2) in b.rows().iter().zip(expected.rows().iter()) {
            for (x, y) in r1.iter().zip(r2) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}

proptest! {
    #[test]
    fn world_los_round_trip(
        az in 0.0f64..360.0,
        dep in -90.0f64..90.0,
        x in -1e3f64..1e3, y in -1e3f64..1e3, z in -1e3f64..1e3,
    ) {
        let t = radar_rotation(az, dep).unwrap();
        let p = DVec3::new(x, y, z);
        let scale = p.length().max(1.0);
        prop_assert!((world_to_los(&t, los_to_world(&t, p)) - p).length() <= 1e-12 * scale);
        prop_assert!((los_to_world(&t, world_to_los(&t, p)) - p).length() <= 1e-12 * scale);
        prop_assert!((world_to_los(&t, p).length() - p.length()).abs() <= 1e-12 * scale);
    }

    #[test]
    fn azimuth_wraps(az in -720.0f64..720.0) {
        let g = ViewGeometry::new(az, 30.0, 10.0, 0.5).unwrap();
        prop_assert!((0.0..360.0).contains(&g.azimuth_deg));
    }
}
