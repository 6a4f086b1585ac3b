#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sarprior_core::{mesh, DVec3, TriangleMesh};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub fn aircraft() -> TriangleMesh {
    mesh::load_mesh(fixture("aircraft.obj")).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit_vector(rng: &mut ChaCha8Rng) -> DVec3 {
    loop {
        let v = DVec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let l = v.length();
        if l > 1e-3 && l <= 1.0 {
            return v / l;
        }
    }
}

/// Axis-aligned square in the plane `z = height`, wound counter-clockwise
/// from above.
pub fn square(vertices: &mut Vec<DVec3>, faces: &mut Vec<[u32; 3]>, center: DVec3, half: f64) {
    let base = vertices.len() as u32;
    for (dx, dy) in [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)] {
        vertices.push(center + DVec3::new(dx * half, dy * half, 0.0));
    }
    faces.push([base, base + 1, base + 2]);
    faces.push([base, base + 2, base + 3]);
}
