//! Recursive multi-bounce tracing with a pseudo-RCS response.
//!
//! A ray starts with energy `E₀ = 1`. At bounce `k` the nearest hit adds the
//! segment length to the cumulative path `L`, and the hit scatters
//!
//! ```text
//! I = E_k · exp(−μ L) · Ψ,   Ψ = W_base · H_edge · H_orient · H_struct
//! ```
//!
//! which is kept as a [`ScatterPoint`] when `I > τ_min`. The ray then carries
//! `E_{k+1} = E_k · ρ · exp(−μ ΔL)` along the rough mirror direction and
//! stops after `k_max` hits, on a miss, or once `E_{k+1} < tau_energy`.

use glam::DVec3;
use serde::{Deserialize, Serialize};

use crate::bvh::{Bvh, Hit};
use crate::error::{Error, Result};
use crate::geometry::{sensor_position, ViewGeometry};
use crate::mesh::TriangleMesh;
use crate::rays::{self, beam_to_world, GridSpec, MonteCarloSpec, Ray, RayStream};

/// Secondary-bounce self-intersection guard, relative to the bounding radius.
pub const SECONDARY_T_MIN: f64 = 1e-6;
/// Attempts at drawing an outward rough reflection before falling back to the
/// mirror direction.
pub const REFLECT_ATTEMPTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScatterParams {
    /// Absorption coefficient per model unit.
    pub mu: f64,
    /// Surface roughness in `[0, 1]`.
    pub zeta: f64,
    pub k_max: u32,
    /// Minimum intensity of an emitted point.
    pub tau_min: f64,
    /// Energy below which a ray is terminated.
    pub tau_energy: f64,
    /// Per-bounce reflectance.
    pub rho: f64,
    pub w_base: f64,
    pub alpha_edge: f64,
    /// Small-face threshold as a fraction of the median face area.
    pub tau_area: f64,
    pub alpha_vert: f64,
    pub gain_horizontal: f64,
    /// `|n_z|` below which a face counts as vertical.
    pub tau_vert: f64,
    pub alpha_struct: f64,
}

impl Default for ScatterParams {
    fn default() -> Self {
        Self {
            mu: 0.01,
            zeta: 0.1,
            k_max: 4,
            tau_min: 1e-3,
            tau_energy: 1e-4,
            rho: 0.6,
            w_base: 1.0,
            alpha_edge: 1.5,
            tau_area: 0.05,
            alpha_vert: 2.0,
            gain_horizontal: 0.3,
            tau_vert: 0.3,
            alpha_struct: 2.5,
        }
    }
}

impl ScatterParams {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Parameter(what.to_string()))
            }
        };
        let open01 = |v: f64| v > 0.0 && v < 1.0;
        check(self.mu.is_finite() && self.mu >= 0.0, "mu must be >= 0")?;
        check((0.0..=1.0).contains(&self.zeta), "zeta must be in [0, 1]")?;
        check(self.k_max >= 1 && self.k_max <= 255, "k_max must be in [1, 255]")?;
        check(self.tau_min.is_finite() && self.tau_min > 0.0, "tau_min must be > 0")?;
        check(
            self.tau_energy.is_finite() && self.tau_energy > 0.0,
            "tau_energy must be > 0",
        )?;
        check(self.rho > 0.0 && self.rho <= 1.0, "rho must be in (0, 1]")?;
        check(self.w_base.is_finite() && self.w_base > 0.0, "w_base must be > 0")?;
        check(
            self.alpha_edge.is_finite() && self.alpha_edge > 1.0,
            "alpha_edge must be > 1",
        )?;
        check(open01(self.tau_area), "tau_area must be in (0, 1)")?;
        check(
            self.alpha_vert.is_finite() && self.alpha_vert > 1.0,
            "alpha_vert must be > 1",
        )?;
        check(open01(self.gain_horizontal), "gain_horizontal must be in (0, 1)")?;
        check(open01(self.tau_vert), "tau_vert must be in (0, 1)")?;
        check(
            self.alpha_struct.is_finite() && self.alpha_struct > 1.0,
            "alpha_struct must be > 1",
        )
    }
}

/// State of a ray before its `bounce`-th hit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayState {
    pub position: DVec3,
    pub direction: DVec3,
    pub energy: f64,
    pub path_length: f64,
    pub bounce: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub position: DVec3,
    pub intensity: f64,
    pub bounce: u8,
    pub ray_id: u64,
}

/// Scatter points sorted by `(ray_id, bounce)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<ScatterPoint>,
    bounce_counts: Vec<usize>,
    pub azimuth_deg: f64,
    pub depression_deg: f64,
}

impl PointCloud {
    /// Sorts `points` canonically; `bounce_counts` spans `1..=max(k_max, max bounce)`.
    pub fn new(mut points: Vec<ScatterPoint>, k_max: u32, azimuth_deg: f64, depression_deg: f64) -> Self {
        points.sort_by_key(|p| (p.ray_id, p.bounce));
        let top = points
            .iter()
            .map(|p| p.bounce as usize)
            .max()
            .unwrap_or(0)
            .max(k_max as usize);
        let mut bounce_counts = vec![0; top];
        for p in &points {
            if p.bounce >= 1 {
                bounce_counts[p.bounce as usize - 1] += 1;
            }
        }
        Self {
            points,
            bounce_counts,
            azimuth_deg,
            depression_deg,
        }
    }

    pub fn points(&self) -> &[ScatterPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Point counts for bounce 1, 2, … .
    pub fn bounce_counts(&self) -> &[usize] {
        &self.bounce_counts
    }

    pub fn total_intensity(&self) -> f64 {
        self.points.iter().map(|p| p.intensity).sum()
    }
}

/// Mesh plus its acceleration structure.
#[derive(Debug, Clone)]
pub struct Scene {
    pub mesh: TriangleMesh,
    pub bvh: Bvh,
}

impl Scene {
    pub fn new(mesh: TriangleMesh) -> Self {
        let bvh = Bvh::build(&mesh);
        Self { mesh, bvh }
    }

    pub fn intersect(&self, origin: DVec3, direction: DVec3, t_min: f64) -> Option<Hit> {
        self.bvh.intersect(&self.mesh, origin, direction, t_min)
    }
}

/// `Ψ = W_base · H_edge · H_orient · H_struct` at a hit.
pub fn pseudo_rcs(hit: &Hit, mesh: &TriangleMesh, params: &ScatterParams) -> f64 {
    let edge = if mesh.face_area(hit.face_id) < params.tau_area * mesh.median_face_area() {
        params.alpha_edge
    } else {
        1.0
    };
    let orient = if hit.normal.z.abs() < params.tau_vert {
        params.alpha_vert
    } else {
        params.gain_horizontal
    };
    let structure = if mesh.is_structural(hit.face_id) {
        params.alpha_struct
    } else {
        1.0
    };
    params.w_base * edge * orient * structure
}

/// `E_k · exp(−μ L) · Ψ` for a state whose path length already includes the
/// segment to the hit.
pub fn scatter_intensity(state: &RayState, psi: f64, params: &ScatterParams) -> f64 {
    state.energy * (-params.mu * state.path_length).exp() * psi
}

/// Mirror reflection about `normal`, perturbed by `zeta · u`.
///
/// `normal` must face the incoming ray. Perturbed directions that point into
/// the surface, or that cancel to (nearly) zero, are re-drawn up to
/// [`REFLECT_ATTEMPTS`] times before the exact mirror direction is returned.
pub fn reflect(direction: DVec3, normal: DVec3, zeta: f64, stream: &mut RayStream) -> DVec3 {
    let mirror = direction - 2.0 * direction.dot(normal) * normal;
    if zeta == 0.0 {
        return mirror;
    }
    for _ in 0..REFLECT_ATTEMPTS {
        let v = mirror + zeta * stream.uniform_cube();
        let len = v.length();
        if len < 1e-12 {
            continue;
        }
        let out = v / len;
        if out.dot(normal) > 0.0 {
            return out;
        }
    }
    mirror
}

/// Full record of one traced ray.
#[derive(Debug, Clone, PartialEq)]
pub struct TracedPath {
    pub points: Vec<ScatterPoint>,
    /// State before each hit, starting with the emitted ray.
    pub states: Vec<RayState>,
    /// Direction leaving the last hit; `None` if the ray never hit.
    pub exit_direction: Option<DVec3>,
}

/// Traces one ray and records every intermediate state.
pub fn trace_path(scene: &Scene, ray: &Ray, params: &ScatterParams, stream: &mut RayStream) -> TracedPath {
    let secondary_t_min = SECONDARY_T_MIN * scene.mesh.bounding_radius();
    let mut state = RayState {
        position: ray.origin,
        direction: ray.direction,
        energy: 1.0,
        path_length: 0.0,
        bounce: 0,
    };
    let mut path = TracedPath {
        points: Vec::new(),
        states: vec![state],
        exit_direction: None,
    };
    loop {
        let t_min = if state.bounce == 0 { 0.0 } else { secondary_t_min };
        let Some(hit) = scene.intersect(state.position, state.direction, t_min) else {
            if state.bounce > 0 {
                path.exit_direction = Some(state.direction);
            }
            break;
        };
        let at_hit = RayState {
            path_length: state.path_length + hit.t,
            bounce: state.bounce + 1,
            ..state
        };
        let psi = pseudo_rcs(&hit, &scene.mesh, params);
        let intensity = scatter_intensity(&at_hit, psi, params);
        if intensity > params.tau_min {
            path.points.push(ScatterPoint {
                position: hit.point,
                intensity,
                bounce: at_hit.bounce as u8,
                ray_id: ray.id,
            });
        }
        let energy = state.energy * params.rho * (-params.mu * hit.t).exp();
        let direction = reflect(state.direction, hit.normal, params.zeta, stream);
        if at_hit.bounce >= params.k_max || energy < params.tau_energy {
            path.exit_direction = Some(direction);
            break;
        }
        state = RayState {
            position: hit.point,
            direction,
            energy,
            ..at_hit
        };
        path.states.push(state);
    }
    path
}

/// Scatter points of one ray; at most `k_max` of them.
pub fn trace_ray(scene: &Scene, ray: &Ray, params: &ScatterParams, stream: &mut RayStream) -> Vec<ScatterPoint> {
    trace_path(scene, ray, params, stream).points
}

/// Result of [`simulate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub cloud: PointCloud,
    pub grid: GridSpec,
    pub grid_rays: usize,
    pub monte_carlo_rays: usize,
}

/// Runs `f` on a pool of `workers` threads (or inline when `workers <= 1`).
#[cfg(feature = "parallel")]
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers <= 1 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Parameter(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(not(feature = "parallel"))]
pub fn with_workers<T: Send>(_workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    Ok(f())
}

/// Traces the grid beam (ids `0..n_grid`) followed by the Monte Carlo beam
/// (ids `n_grid..n_grid + mc.count`) and gathers a canonical point cloud.
/// Output is identical for any worker count.
pub fn simulate(
    scene: &Scene,
    geom: &ViewGeometry,
    grid: Option<&GridSpec>,
    mc: &MonteCarloSpec,
    params: &ScatterParams,
    workers: usize,
) -> Result<Simulation> {
    geom.validate_for_radius(scene.mesh.bounding_radius())?;
    mc.validate()?;
    params.validate()?;
    let grid = match grid {
        Some(g) => {
            g.validate()?;
            *g
        }
        None => GridSpec::auto(geom, &scene.mesh)?,
    };

    let frame = beam_to_world(geom)?;
    let origin = sensor_position(geom, scene.mesh.centroid());
    let target = geom.los_direction();
    let n_grid = grid.len();
    let total = n_grid + mc.count;

    let trace_one = |id: usize| -> Vec<ScatterPoint> {
        let mut stream = RayStream::new(mc.seed, id as u64, frame);
        let direction = if id < n_grid {
            let (a, b) = grid.angles(id);
            frame.apply(rays::grid_direction(a, b))
        } else {
            rays::perturbed_direction(target, mc.sigma, &mut stream)
        };
        let ray = Ray {
            origin,
            direction,
            id: id as u64,
        };
        trace_ray(scene, &ray, params, &mut stream)
    };

    let per_ray: Vec<Vec<ScatterPoint>> = with_workers(workers, || {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            if workers > 1 {
                return (0..total).into_par_iter().map(trace_one).collect();
            }
        }
        (0..total).map(trace_one).collect()
    })?;

    let points: Vec<ScatterPoint> = per_ray.into_iter().flatten().collect();
    Ok(Simulation {
        cloud: PointCloud::new(points, params.k_max, geom.azimuth_deg, geom.depression_deg),
        grid,
        grid_rays: n_grid,
        monte_carlo_rays: mc.count,
    })
}
