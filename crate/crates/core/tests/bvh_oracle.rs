mod common;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sarprior_core::{Bvh, DVec3, TriangleMesh};

/// Plane intersection followed by an inside test with edge functions.
fn exhaustive_nearest(mesh: &TriangleMesh, origin: DVec3, dir: DVec3) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (f, tri) in mesh.faces().iter().enumerate() {
        let [a, b, c] = tri.map(|i| mesh.vertices()[i as usize]);
        let n = (b - a).cross(c - a);
        let denom = n.dot(dir);
        if denom == 0.0 {
            continue;
        }
        let t = n.dot(a - origin) / denom;
        if t < 0.0 {
            continue;
        }
        let p = origin + t * dir;
        let inside = [(a, b), (b, c), (c, a)]
            .iter()
            .all(|&(u, v)| (v - u).cross(p - u).dot(n) >= 0.0);
        if inside && best.is_none_or(|(_, bt)| t < bt) {
            best = Some((f, t));
        }
    }
    best
}

fn random_soup(rng: &mut ChaCha8Rng, count: usize) -> TriangleMesh {
    let mut vertices = Vec::with_capacity(3 * count);
    let mut faces = Vec::with_capacity(count);
    for i in 0..count {
        let center = DVec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        for _ in 0..3 {
            vertices.push(center + 0.15 * common::unit_vector(rng));
        }
        let base = 3 * i as u32;
        faces.push([base, base + 1, base + 2]);
    }
    TriangleMesh::from_triangles(vertices, faces).unwrap()
}

#[test]
fn bvh_matches_exhaustive_scan() {
    let mut rng = common::rng(20);
    let mesh = random_soup(&mut rng, 2000);
    assert_eq!(mesh.face_count(), 2000);
    let bvh = Bvh::build(&mesh);

    let (mut hits, mut mismatches) = (0, Vec::new());
    for i in 0..50_000 {
        let origin = 3.0 * common::unit_vector(&mut rng);
        let aim = DVec3::new(
            rng.random_range(-1.2..1.2),
            rng.random_range(-1.2..1.2),
            rng.random_range(-1.2..1.2),
        );
        // every tenth ray starts inside the soup with an arbitrary direction
        let (origin, dir) = if i % 10 == 0 {
            (aim * 0.5, common::unit_vector(&mut rng))
        } else {
            (origin, (aim - origin).normalize())
        };
        let fast = bvh.intersect(&mesh, origin, dir, 0.0).map(|h| (h.face_id, h.t));
        let slow = exhaustive_nearest(&mesh, origin, dir);
        match (fast, slow) {
            (None, None) => {}
            (Some((f1, t1)), Some((f2, t2))) if f1 == f2 && (t1 - t2).abs() < 1e-9 => hits += 1,
            other => mismatches.push((i, other)),
        }
    }
    assert!(
        mismatches.is_empty(),
        "{} mismatches, first {:?}",
        mismatches.len(),
        &mismatches[..mismatches.len().min(5)]
    );
    assert!(hits > 20_000, "only {hits} rays hit; the oracle is not exercised");
}

#[test]
fn bvh_structure_is_a_partition() {
    let mut rng = common::rng(21);
    let mesh = random_soup(&mut rng, 500);
    let bvh = Bvh::build(&mesh);
    let mut seen = vec![0u32; mesh.face_count()];
    for leaf in bvh.leaves() {
        assert!(!leaf.is_empty() && leaf.len() <= 4);
        for &f in leaf {
            seen[f as usize] += 1;
        }
    }
    assert!(seen.iter().all(|&c| c == 1));
    for (parent, child) in bvh.edges() {
        let (p, c) = (&bvh.nodes()[parent].bounds, &bvh.nodes()[child].bounds);
        assert!(p.contains(c));
    }
}
