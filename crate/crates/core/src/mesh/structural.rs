//! Dihedral-edge detection of corner-reflector structures.

use std::collections::BTreeMap;

use serde::Serialize;

use super::TriangleMesh;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StructuralReport {
    /// Manifold edges whose dihedral lies within 90° ± tolerance.
    pub right_angle_edges: usize,
    pub flagged_faces: usize,
    /// Edges with a single adjacent face.
    pub boundary_edges: usize,
    /// Edges shared by more than two faces; skipped.
    pub non_manifold_edges: usize,
}

impl TriangleMesh {
    /// Flags both faces of every two-face edge whose normals meet at
    /// `90° ± tolerance`. All other faces are cleared.
    pub fn flag_structural_faces(&mut self, dihedral_tolerance_deg: f64) -> Result<StructuralReport> {
        if !(dihedral_tolerance_deg > 0.0 && dihedral_tolerance_deg < 45.0) {
            return Err(Error::Parameter(format!(
                "dihedral tolerance {dihedral_tolerance_deg} outside (0, 45) degrees"
            )));
        }
        let mut edges: BTreeMap<(u32, u32), Vec<usize>> = BTreeMap::new();
        for (f, tri) in self.faces.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                edges.entry((a.min(b), a.max(b))).or_default().push(f);
            }
        }

        let mut report = StructuralReport::default();
        let mut flags = vec![false; self.faces.len()];
        for adjacent in edges.values() {
            match adjacent.as_slice() {
                [_] => report.boundary_edges += 1,
                &[f0, f1] => {
                    let cos = self.face_normals[f0].dot(self.face_normals[f1]).clamp(-1.0, 1.0);
                    let angle = cos.acos().to_degrees();
                    if (angle - 90.0).abs() <= dihedral_tolerance_deg {
                        report.right_angle_edges += 1;
                        flags[f0] = true;
                        flags[f1] = true;
                    }
                }
                _ => report.non_manifold_edges += 1,
            }
        }
        report.flagged_faces = flags.iter().filter(|&&f| f).count();
        self.structural_flags = flags;
        Ok(report)
    }
}
