//! Bounding volume hierarchy over mesh faces and nearest-hit queries.
//!
//! The tree is built top-down with a binned surface-area heuristic and stored
//! as a flat node array (left child immediately follows its parent). Faces
//! are tested with the Möller–Trumbore algorithm in double precision. When
//! two faces are hit at exactly the same `t`, the smaller face id wins, so a
//! query result does not depend on traversal order.

use glam::DVec3;

use crate::mesh::TriangleMesh;

const MAX_LEAF: usize = 4;
const BINS: usize = 12;
// past this depth splits fall back to the median, bounding the stack
const SAH_MAX_DEPTH: usize = 48;
const STACK: usize = SAH_MAX_DEPTH + 34;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: DVec3,
    pub max: DVec3,
}

impl Aabb {
    pub const EMPTY: Self = Self {
        min: DVec3::splat(f64::INFINITY),
        max: DVec3::splat(f64::NEG_INFINITY),
    };

    pub fn grow(&mut self, p: DVec3) {
        self.min = self.min.min(p);
        self.max = self.max.max(p);
    }

    pub fn union(&self, other: &Self) -> Self {
        Self {
            min: self.min.min(other.min),
            max: self.max.max(other.max),
        }
    }

    pub fn contains(&self, other: &Self) -> bool {
        self.min.cmple(other.min).all() && self.max.cmpge(other.max).all()
    }

    pub fn center(&self) -> DVec3 {
        0.5 * (self.min + self.max)
    }

    fn half_area(&self) -> f64 {
        let d = (self.max - self.min).max(DVec3::ZERO);
        d.x * d.y + d.y * d.z + d.z * d.x
    }

    /// Slab test returning the entry distance when the ray overlaps
    /// `(t_min, t_max]`.
    #[inline]
    fn hit(&self, origin: DVec3, inv_dir: DVec3, t_min: f64, t_max: f64) -> Option<f64> {
        // 2·γ₃ of slack on the far bound absorbs rounding in the slab
        // products, so flat boxes are never missed.
        const SLACK: f64 = 2.0 * (3.0 * f64::EPSILON * 0.5) / (1.0 - 3.0 * f64::EPSILON * 0.5);
        let mut t0 = t_min;
        let mut t1 = t_max;
        for axis in 0..3 {
            if inv_dir[axis].is_infinite() {
                // ray parallel to this slab pair
                if origin[axis] < self.min[axis] || origin[axis] > self.max[axis] {
                    return None;
                }
                continue;
            }
            let a = (self.min[axis] - origin[axis]) * inv_dir[axis];
            let b = (self.max[axis] - origin[axis]) * inv_dir[axis];
            let (near, far) = if a <= b { (a, b) } else { (b, a) };
            t0 = t0.max(near);
            t1 = t1.min(far + far.abs() * SLACK);
        }
        (t0 <= t1).then_some(t0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum NodeKind {
    Leaf { first: u32, count: u32 },
    Interior { right: u32, axis: u8 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BvhNode {
    pub bounds: Aabb,
    kind: NodeKind,
}

impl BvhNode {
    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf { .. })
    }
}

/// Nearest ray–mesh intersection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub face_id: usize,
    pub t: f64,
    pub point: DVec3,
    /// Face normal, flipped so that `normal · direction < 0`.
    pub normal: DVec3,
    /// Barycentric weights of the second and third corners.
    pub barycentric: (f64, f64),
}

/// Flat BVH over the faces of one [`TriangleMesh`].
#[derive(Debug, Clone, PartialEq)]
pub struct Bvh {
    nodes: Vec<BvhNode>,
    face_order: Vec<u32>,
    // per face, in face_order: corner a, edge ab, edge ac
    tris: Vec<[DVec3; 3]>,
}

struct BuildItem {
    face: u32,
    bounds: Aabb,
    center: DVec3,
}

impl Bvh {
    pub fn build(mesh: &TriangleMesh) -> Self {
        let mut items: Vec<BuildItem> = (0..mesh.face_count())
            .map(|f| {
                let mut bounds = Aabb::EMPTY;
                for p in mesh.triangle(f) {
                    bounds.grow(p);
                }
                BuildItem {
                    face: f as u32,
                    bounds,
                    center: bounds.center(),
                }
            })
            .collect();
        let mut nodes = Vec::with_capacity(2 * items.len());
        build_recursive(&mut items, 0, 0, &mut nodes);
        let face_order: Vec<u32> = items.iter().map(|it| it.face).collect();
        let tris = face_order
            .iter()
            .map(|&f| {
                let [a, b, c] = mesh.triangle(f as usize);
                [a, b - a, c - a]
            })
            .collect();
        Self {
            nodes,
            face_order,
            tris,
        }
    }

    pub fn nodes(&self) -> &[BvhNode] {
        &self.nodes
    }

    /// Face ids stored in each leaf, in node order.
    pub fn leaves(&self) -> Vec<&[u32]> {
        self.nodes
            .iter()
            .filter_map(|n| match n.kind {
                NodeKind::Leaf { first, count } => Some(&self.face_order[first as usize..(first + count) as usize]),
                NodeKind::Interior { .. } => None,
            })
            .collect()
    }

    /// `(parent, child)` node index pairs.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| match n.kind {
                NodeKind::Interior { right, .. } => Some([(i, i + 1), (i, right as usize)]),
                NodeKind::Leaf { .. } => None,
            })
            .flatten()
            .collect()
    }

    /// Nearest hit with `t > t_min` along a unit `direction`.
    pub fn intersect(&self, mesh: &TriangleMesh, origin: DVec3, direction: DVec3, t_min: f64) -> Option<Hit> {
        let inv_dir = direction.recip();
        let mut best_t = f64::INFINITY;
        let mut best: Option<(usize, f64, f64)> = None; // (slot, u, v)
        let mut stack = [0u32; STACK];
        let mut top = 0;
        let mut node = 0usize;
        loop {
            let n = &self.nodes[node];
            if n.bounds.hit(origin, inv_dir, t_min, best_t).is_some() {
                match n.kind {
                    NodeKind::Leaf { first, count } => {
                        for slot in first as usize..(first + count) as usize {
                            if let Some((t, u, v)) = intersect_triangle(&self.tris[slot], origin, direction) {
                                if t > t_min
                                    && (t < best_t
                                        || (t == best_t
                                            && best
                                                .is_some_and(|(s, _, _)| self.face_order[slot] < self.face_order[s])))
                                {
                                    best_t = t;
                                    best = Some((slot, u, v));
                                }
                            }
                        }
                    }
                    NodeKind::Interior { right, axis } => {
                        let (near, far) = if direction[axis as usize] < 0.0 {
                            (right as usize, node + 1)
                        } else {
                            (node + 1, right as usize)
                        };
                        stack[top] = far as u32;
                        top += 1;
                        node = near;
                        continue;
                    }
                }
            }
            if top == 0 {
                break;
            }
            top -= 1;
            node = stack[top] as usize;
        }

        best.map(|(slot, u, v)| {
            let face_id = self.face_order[slot] as usize;
            let n = mesh.face_normal(face_id);
            Hit {
                face_id,
                t: best_t,
                point: origin + direction * best_t,
                normal: if n.dot(direction) > 0.0 { -n } else { n },
                barycentric: (u, v),
            }
        })
    }
}

/// Möller–Trumbore test against `[corner, edge1, edge2]`; returns `(t, u, v)`.
#[inline]
fn intersect_triangle(tri: &[DVec3; 3], origin: DVec3, dir: DVec3) -> Option<(f64, f64, f64)> {
    let [a, e1, e2] = *tri;
    let p = dir.cross(e2);
    let det = e1.dot(p);
    if det == 0.0 {
        return None;
    }
    let inv_det = 1.0 / det;
    let s = origin - a;
    let u = s.dot(p) * inv_det;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(e1);
    let v = dir.dot(q) * inv_det;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    Some((e2.dot(q) * inv_det, u, v))
}

fn bounds_of(items: &[BuildItem]) -> Aabb {
    items.iter().fold(Aabb::EMPTY, |acc, it| acc.union(&it.bounds))
}

fn build_recursive(items: &mut [BuildItem], first: usize, depth: usize, nodes: &mut Vec<BvhNode>) -> usize {
    let index = nodes.len();
    let bounds = bounds_of(items);
    nodes.push(BvhNode {
        bounds,
        kind: NodeKind::Leaf {
            first: first as u32,
            count: items.len() as u32,
        },
    });
    if items.len() <= MAX_LEAF {
        return index;
    }

    let mut centers = Aabb::EMPTY;
    for it in items.iter() {
        centers.grow(it.center);
    }
    let extent = centers.max - centers.min;
    let axis = if extent.x >= extent.y && extent.x >= extent.z {
        0
    } else if extent.y >= extent.z {
        1
    } else {
        2
    };
    if extent[axis] <= 0.0 {
        // all centers coincide; a split cannot separate them
        return index;
    }

    let sah = if depth < SAH_MAX_DEPTH {
        sah_split(items, axis, centers.min[axis], extent[axis])
    } else {
        None
    };
    let split = sah.unwrap_or_else(|| {
        items.sort_by(|a, b| a.center[axis].total_cmp(&b.center[axis]).then(a.face.cmp(&b.face)));
        items.len() / 2
    });

    let (left, right) = items.split_at_mut(split);
    build_recursive(left, first, depth + 1, nodes);
    let right_index = build_recursive(right, first + split, depth + 1, nodes);
    nodes[index].kind = NodeKind::Interior {
        right: right_index as u32,
        axis: axis as u8,
    };
    index
}

/// Partitions `items` at the cheapest bin boundary; `None` if every
/// boundary leaves one side empty.
fn sah_split(items: &mut [BuildItem], axis: usize, lo: f64, extent: f64) -> Option<usize> {
    let bin_of = |c: f64| (((c - lo) / extent * BINS as f64) as usize).min(BINS - 1);
    let mut bins = [(Aabb::EMPTY, 0usize); BINS];
    for it in items.iter() {
        let b = bin_of(it.center[axis]);
        bins[b].0 = bins[b].0.union(&it.bounds);
        bins[b].1 += 1;
    }

    let mut right_area = [0.0; BINS];
    let mut right_count = [0usize; BINS];
    let mut acc = (Aabb::EMPTY, 0usize);
    for b in (1..BINS).rev() {
        acc = (acc.0.union(&bins[b].0), acc.1 + bins[b].1);
        right_area[b] = acc.0.half_area();
        right_count[b] = acc.1;
    }

    let mut best: Option<(f64, usize)> = None;
    let mut left = (Aabb::EMPTY, 0usize);
    for b in 1..BINS {
        left = (left.0.union(&bins[b - 1].0), left.1 + bins[b - 1].1);
        if left.1 == 0 || right_count[b] == 0 {
            continue;
        }
        let cost = left.0.half_area() * left.1 as f64 + right_area[b] * right_count[b] as f64;
        if best.is_none_or(|(c, _)| cost < c) {
            best = Some((cost, b));
        }
    }
    let (_, boundary) = best?;

    // stable partition keeps construction deterministic
    let (mut lhs, mut rhs): (Vec<_>, Vec<_>) = items
        .iter()
        .map(|it| (it.face, it.bounds, it.center))
        .partition(|&(_, _, c)| bin_of(c[axis]) < boundary);
    let split = lhs.len();
    lhs.append(&mut rhs);
    for (slot, (face, bounds, center)) in items.iter_mut().zip(lhs) {
        *slot = BuildItem { face, bounds, center };
    }
    Some(split)
}
