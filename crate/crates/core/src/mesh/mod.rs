//! Triangle meshes: loading, per-face geometry and structural flags.

mod obj;
mod stl;
mod structural;

use std::path::Path;

use glam::DVec3;

use crate::error::{Error, Result};

pub use structural::StructuralReport;

/// Relative area below which a face is treated as degenerate.
pub const DEGENERATE_AREA_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Stl,
}

impl MeshFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "obj" => Some(Self::Obj),
            "stl" => Some(Self::Stl),
            _ => None,
        }
    }
}

/// Immutable triangle mesh with precomputed per-face geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<DVec3>,
    faces: Vec<[u32; 3]>,
    face_normals: Vec<DVec3>,
    face_areas: Vec<f64>,
    structural_flags: Vec<bool>,
    centroid: DVec3,
    bounding_radius: f64,
    median_face_area: f64,
    degenerate_dropped: usize,
}

impl TriangleMesh {
    /// Fan-triangulates each polygon from its first vertex and builds the mesh.
    pub fn from_polygons(vertices: Vec<DVec3>, polygons: &[Vec<u32>]) -> Result<Self> {
        let mut triangles = Vec::with_capacity(polygons.len());
        for (i, poly) in polygons.iter().enumerate() {
            if poly.len() < 3 {
                return Err(Error::MalformedMesh {
                    location: format!("polygon {i}"),
                    message: format!("{} vertices, need at least 3", poly.len()),
                });
            }
            for k in 1..poly.len() - 1 {
                triangles.push([poly[0], poly[k], poly[k + 1]]);
            }
        }
        Self::from_triangles(vertices, triangles)
    }

    /// Builds a mesh from indexed triangles, dropping degenerate faces.
    pub fn from_triangles(vertices: Vec<DVec3>, triangles: Vec<[u32; 3]>) -> Result<Self> {
        if let Some(bad) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(Error::MalformedMesh {
                location: format!("vertex {bad}"),
                message: "non-finite coordinate".into(),
            });
        }
        for (i, tri) in triangles.iter().enumerate() {
            if let Some(&idx) = tri.iter().find(|&&idx| idx as usize >= vertices.len()) {
                return Err(Error::MalformedMesh {
                    location: format!("triangle {i}"),
                    message: format!("vertex index {idx} out of range ({} vertices)", vertices.len()),
                });
            }
        }
        if vertices.is_empty() {
            return Err(Error::EmptyMesh { degenerate: 0 });
        }

        let mean = vertices.iter().copied().sum::<DVec3>() / vertices.len() as f64;
        let coarse_radius = vertices.iter().map(|v| v.distance(mean)).fold(0.0, f64::max);
        let min_area = DEGENERATE_AREA_EPS * coarse_radius * coarse_radius;

        let mut faces = Vec::with_capacity(triangles.len());
        let mut face_normals = Vec::with_capacity(triangles.len());
        let mut face_areas = Vec::with_capacity(triangles.len());
        let mut degenerate = 0;
        for tri in triangles {
            let [a, b, c] = tri.map(|i| vertices[i as usize]);
            let cross = (b - a).cross(c - a);
            let area = 0.5 * cross.length();
            // also catches NaN areas
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(area > min_area) {
                degenerate += 1;
                continue;
            }
            faces.push(tri);
            face_normals.push(cross.normalize());
            face_areas.push(area);
        }
        if faces.is_empty() {
            return Err(Error::EmptyMesh { degenerate });
        }

        let total_area: f64 = face_areas.iter().sum();
        let centroid = faces
            .iter()
            .zip(&face_areas)
            .map(|(tri, &area)| {
                let [a, b, c] = tri.map(|i| vertices[i as usize]);
                (a + b + c) * (area / 3.0)
            })
            .sum::<DVec3>()
            / total_area;
        let bounding_radius = vertices.iter().map(|v| v.distance(centroid)).fold(0.0, f64::max);

        let mut sorted = face_areas.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let median_face_area = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };

        Ok(Self {
            structural_flags: vec![false; faces.len()],
            vertices,
            faces,
            face_normals,
            face_areas,
            centroid,
            bounding_radius,
            median_face_area,
            degenerate_dropped: degenerate,
        })
    }

    /// Rebuilds the mesh with every vertex mapped through `f`.
    /// Structural flags are reset.
    pub fn map_vertices(&self, f: impl Fn(DVec3) -> DVec3) -> Result<Self> {
        let vertices = self.vertices.iter().map(|&v| f(v)).collect();
        Self::from_triangles(vertices, self.faces.clone())
    }

    pub fn vertices(&self) -> &[DVec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn face_normals(&self) -> &[DVec3] {
        &self.face_normals
    }

    pub fn face_normal(&self, face: usize) -> DVec3 {
        self.face_normals[face]
    }

    pub fn face_areas(&self) -> &[f64] {
        &self.face_areas
    }

    pub fn face_area(&self, face: usize) -> f64 {
        self.face_areas[face]
    }

    pub fn total_area(&self) -> f64 {
        self.face_areas.iter().sum()
    }

    pub fn median_face_area(&self) -> f64 {
        self.median_face_area
    }

    pub fn structural_flags(&self) -> &[bool] {
        &self.structural_flags
    }

    pub fn is_structural(&self, face: usize) -> bool {
        self.structural_flags[face]
    }

    /// Area-weighted surface centroid.
    pub fn centroid(&self) -> DVec3 {
        self.centroid
    }

    /// Largest vertex distance from [`centroid`](Self::centroid).
    pub fn bounding_radius(&self) -> f64 {
        self.bounding_radius
    }

    /// Faces dropped as degenerate while building the mesh.
    pub fn degenerate_dropped(&self) -> usize {
        self.degenerate_dropped
    }

    /// Corner positions of one face.
    pub fn triangle(&self, face: usize) -> [DVec3; 3] {
        self.faces[face].map(|i| self.vertices[i as usize])
    }
}

/// Loads a Wavefront OBJ or binary STL mesh.
///
/// The format comes from the extension; files without a recognised extension
/// are read as binary STL when their size matches the STL record layout and
/// as OBJ otherwise.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let format = MeshFormat::from_path(path).unwrap_or_else(|| {
        if stl::looks_binary(&bytes) {
            MeshFormat::Stl
        } else {
            MeshFormat::Obj
        }
    });
    parse_mesh(&bytes, format)
}

/// Parses mesh bytes in a known format.
pub fn parse_mesh(bytes: &[u8], format: MeshFormat) -> Result<TriangleMesh> {
    match format {
        MeshFormat::Obj => {
            let (vertices, polygons) = obj::parse(bytes)?;
            TriangleMesh::from_polygons(vertices, &polygons)
        }
        MeshFormat::Stl => {
            let (vertices, triangles) = stl::parse(bytes)?;
            TriangleMesh::from_triangles(vertices, triangles)
        }
    }
}
