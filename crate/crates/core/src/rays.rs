//! Two-level ray beams: a regular angular grid over the target and a seeded
//! Monte Carlo beam aimed at the mesh centroid.
//!
//! Grid directions are generated in a beam-local frame whose `x` axis is the
//! line of sight, `y` points to the sensor's left along cross-range and `z`
//! is the slant-plane normal; see [`beam_to_world`].

use glam::DVec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, sensor_position, sin_cos_deg, RotationMatrix3, ViewGeometry};
use crate::mesh::TriangleMesh;

/// Relative margin added to the bounding-sphere half-angle of the grid.
pub const GRID_MARGIN: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: DVec3,
    pub direction: DVec3,
    pub id: u64,
}

/// Angular window of the regular grid, in degrees of the beam-local frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub alpha_start: f64,
    pub alpha_end: f64,
    pub beta_start: f64,
    pub beta_end: f64,
    pub step: f64,
}

impl GridSpec {
    /// Window covering the mesh bounding sphere seen from the sensor, plus
    /// [`GRID_MARGIN`].
    pub fn auto(geom: &ViewGeometry, mesh: &TriangleMesh) -> Result<Self> {
        geom.validate()?;
        let ratio = mesh.bounding_radius() / geom.range;
        if ratio >= 1.0 {
            return Err(Error::Geometry(format!(
                "sensor at range {} lies inside the target bounding sphere (radius {})",
                geom.range,
                mesh.bounding_radius()
            )));
        }
        let half = ratio.asin().to_degrees() * (1.0 + GRID_MARGIN);
        if 2.0 * half >= 180.0 {
            return Err(Error::Geometry(format!(
                "grid angular extent {:.3}° reaches 180°",
                2.0 * half
            )));
        }
        let spec = Self {
            alpha_start: -half,
            alpha_end: half,
            beta_start: -half,
            beta_end: half,
            step: geom.grid_step_deg,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.alpha_start,
            self.alpha_end,
            self.beta_start,
            self.beta_end,
            self.step,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite || self.step <= 0.0 {
            return Err(Error::Parameter(format!(
                "grid step {} must be finite and > 0",
                self.step
            )));
        }
        if self.alpha_end < self.alpha_start || self.beta_end < self.beta_start {
            return Err(Error::Parameter("grid end precedes start".into()));
        }
        Ok(())
    }

    fn axis_count(start: f64, end: f64, step: f64) -> usize {
        ((end - start) / step + 1e-9).floor() as usize + 1
    }

    pub fn alpha_count(&self) -> usize {
        Self::axis_count(self.alpha_start, self.alpha_end, self.step)
    }

    pub fn beta_count(&self) -> usize {
        Self::axis_count(self.beta_start, self.beta_end, self.step)
    }

    pub fn len(&self) -> usize {
        self.alpha_count() * self.beta_count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(alpha, beta)` of cell `index`, beta-major.
    pub fn angles(&self, index: usize) -> (f64, f64) {
        let na = self.alpha_count();
        let (bi, ai) = (index / na, index % na);
        (
            self.alpha_start + ai as f64 * self.step,
            self.beta_start + bi as f64 * self.step,
        )
    }
}

/// Monte Carlo beam parameters. `sigma` is the per-component standard
/// deviation of the Gaussian perturbation, in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSpec {
    pub count: usize,
    pub sigma: f64,
    pub seed: u64,
}

impl Default for MonteCarloSpec {
    fn default() -> Self {
        Self {
            count: 200_000,
            sigma: 0.05,
            seed: 0,
        }
    }
}

impl MonteCarloSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::Parameter(format!(
                "sigma {} must be finite and >= 0",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// Unit direction for grid angles `(alpha, beta)` in degrees:
/// `(cos β cos α, cos β sin α, sin β)`.
pub fn grid_direction(alpha_deg: f64, beta_deg: f64) -> DVec3 {
    let (sa, ca) = sin_cos_deg(alpha_deg);
    let (sb, cb) = sin_cos_deg(beta_deg);
    DVec3::new(cb * ca, cb * sa, sb)
}

/// Beam-local → world rotation, columns (line of sight, −cross-range,
/// slant normal).
pub fn beam_to_world(geom: &ViewGeometry) -> Result<RotationMatrix3> {
    let los = geometry::los_frame(geom.azimuth_deg, geom.depression_deg)?;
    let (c, u, n) = (los.row(0), los.row(1), los.row(2));
    Ok(RotationMatrix3::from_rows([
        [u.x, -c.x, n.x],
        [u.y, -c.y, n.y],
        [u.z, -c.z, n.z],
    ]))
}

/// Deterministic per-ray sampler. The generator is ChaCha8 keyed by the run
/// seed with the ray id as stream number, so the draws of one ray do not
/// depend on how rays are scheduled. Vector samples are drawn in the
/// beam-local frame and rotated into the world.
pub struct RayStream {
    rng: ChaCha8Rng,
    frame: RotationMatrix3,
}

impl RayStream {
    pub fn new(seed: u64, ray_id: u64, frame: RotationMatrix3) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(ray_id);
        Self { rng, frame }
    }

    /// Sample of `N(0, I)` in world coordinates.
    pub fn gaussian3(&mut self) -> DVec3 {
        let local = DVec3::new(
            self.rng.sample(StandardNormal),
            self.rng.sample(StandardNormal),
            self.rng.sample(StandardNormal),
        );
        self.frame.apply(local)
    }

    /// Sample of `U(-1, 1)³` (in the beam frame) in world coordinates.
    pub fn uniform_cube(&mut self) -> DVec3 {
        let local = DVec3::new(
            self.rng.random_range(-1.0..1.0),
            self.rng.random_range(-1.0..1.0),
            self.rng.random_range(-1.0..1.0),
        );
        self.frame.apply(local)
    }
}

/// Regular grid rays for an explicit window, ids `0..spec.len()`.
pub fn grid_rays_with(geom: &ViewGeometry, mesh: &TriangleMesh, spec: &GridSpec) -> Result<Vec<Ray>> {
    spec.validate()?;
    let frame = beam_to_world(geom)?;
    let origin = sensor_position(geom, mesh.centroid());
    Ok((0..spec.len())
        .map(|i| {
            let (a, b) = spec.angles(i);
            Ray {
                origin,
                direction: frame.apply(grid_direction(a, b)),
                id: i as u64,
            }
        })
        .collect())
}

/// Regular grid rays over the auto-sized window.
pub fn grid_rays(geom: &ViewGeometry, mesh: &TriangleMesh) -> Result<Vec<Ray>> {
    let spec = GridSpec::auto(geom, mesh)?;
    grid_rays_with(geom, mesh, &spec)
}

/// Draws the Monte Carlo direction for one ray from its stream.
pub(crate) fn perturbed_direction(target: DVec3, sigma: f64, stream: &mut RayStream) -> DVec3 {
    let xi = stream.gaussian3() * sigma;
    if sigma == 0.0 {
        return target;
    }
    (target + xi).normalize()
}

/// Monte Carlo rays with ids `first_id..first_id + spec.count`.
pub fn monte_carlo_rays_from(
    geom: &ViewGeometry,
    mesh: &TriangleMesh,
    spec: &MonteCarloSpec,
    first_id: u64,
) -> Result<Vec<Ray>> {
    geom.validate()?;
    spec.validate()?;
    let frame = beam_to_world(geom)?;
    let origin = sensor_position(geom, mesh.centroid());
    let target = geom.los_direction();
    Ok((0..spec.count as u64)
        .map(|k| {
            let id = first_id + k;
            let mut stream = RayStream::new(spec.seed, id, frame);
            Ray {
                origin,
                direction: perturbed_direction(target, spec.sigma, &mut stream),
                id,
            }
        })
        .collect())
}

/// Monte Carlo rays with ids starting at 0.
pub fn monte_carlo_rays(geom: &ViewGeometry, mesh: &TriangleMesh, spec: &MonteCarloSpec) -> Result<Vec<Ray>> {
    monte_carlo_rays_from(geom, mesh, spec, 0)
}
