//! Geometric SAR scattering simulation.
//!
//! The pipeline runs in five stages:
//!
//! 1. [`mesh`] loads a triangle mesh and builds a [`bvh::Bvh`] over it.
//! 2. [`geometry`] fixes the object-centric observation geometry (azimuth,
//!    depression, range) and the world/line-of-sight transforms.
//! 3. [`rays`] emits a regular angular grid of rays plus a seeded Monte Carlo
//!    beam aimed at the mesh centroid.
//! 4. [`scatter`] traces every ray through up to `k_max` specular/rough
//!    bounces, scoring each hit with a pseudo-RCS response, and collects the
//!    surviving hits into a [`scatter::PointCloud`].
//! 5. [`projection`] rasterizes the cloud onto the slant-range plane.
//!
//! [`fusion`] holds the deterministic forward kernels of the multi-modal
//! feature fusion cascade and the classifier-free guidance combiner.

pub mod bvh;
pub mod error;
pub mod fusion;
pub mod geometry;
pub mod mesh;
pub mod projection;
pub mod rays;
pub mod scatter;

pub use bvh::{Bvh, Hit};
pub use error::{Error, Result};
pub use geometry::{RotationMatrix3, ViewGeometry};
pub use mesh::TriangleMesh;
pub use projection::{IntensityMap, ProjectionMode};
pub use rays::{GridSpec, MonteCarloSpec, Ray};
pub use scatter::{PointCloud, ScatterParams, ScatterPoint, Scene};

pub use glam::DVec3;
