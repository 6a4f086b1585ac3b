use std::path::Path;
use std::time::Instant;

use sarprior_core::mesh::{load_mesh, StructuralReport};
use sarprior_core::projection::{self, Extent};
use sarprior_core::rays::GridSpec;
use sarprior_core::scatter::simulate;
use sarprior_core::{Scene, ViewGeometry};
use serde::Serialize;

use crate::config::{azimuth_tag, RunConfig};
use crate::error::{CliResult, Failure};
use crate::output::{ensure_dir, file_name, write_bytes, write_json, ToolInfo, TOOL};
use crate::ply;

#[derive(Debug, Clone, Serialize)]
pub struct MeshInfo {
    pub path: String,
    pub vertices: usize,
    pub faces: usize,
    pub degenerate_dropped: usize,
    pub structural: StructuralReport,
    pub centroid: [f64; 3],
    pub bounding_radius: f64,
    pub total_area: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ViewInfo {
    pub azimuth_deg: f64,
    pub depression_deg: f64,
    pub range: f64,
    pub grid_step_deg: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RayInfo {
    pub grid: usize,
    pub monte_carlo: usize,
    pub grid_window: GridSpec,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointInfo {
    pub total: usize,
    pub per_bounce: Vec<usize>,
    pub total_intensity: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ImageInfo {
    pub file: String,
    pub width: usize,
    pub height: usize,
    pub extent: Extent,
    pub max_value: f64,
}

/// Execution details that may differ between otherwise identical runs.
#[derive(Debug, Clone, Serialize)]
pub struct Timings {
    pub workers: usize,
    pub load_mesh_s: f64,
    pub trace_s: f64,
    pub project_s: f64,
    pub write_s: f64,
    pub traced_rays_per_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub tool: ToolInfo,
    pub command: &'static str,
    pub config: RunConfig,
    pub view: ViewInfo,
    pub mesh: MeshInfo,
    pub rays: RayInfo,
    pub points: PointInfo,
    pub cloud_file: String,
    pub image: Option<ImageInfo>,
    /// Always last; excluded from determinism checks.
    pub timings: Timings,
}

/// A loaded, flagged mesh ready for tracing.
pub struct Prepared {
    pub scene: Scene,
    pub mesh: MeshInfo,
    pub load_s: f64,
}

pub fn prepare(config: &RunConfig) -> CliResult<Prepared> {
    let start = Instant::now();
    let mut mesh = load_mesh(&config.mesh)?;
    let structural = mesh.flag_structural_faces(config.structural_tolerance_deg)?;
    let info = MeshInfo {
        path: config.mesh.display().to_string(),
        vertices: mesh.vertices().len(),
        faces: mesh.face_count(),
        degenerate_dropped: mesh.degenerate_dropped(),
        structural,
        centroid: mesh.centroid().to_array(),
        bounding_radius: mesh.bounding_radius(),
        total_area: mesh.total_area(),
    };
    let scene = Scene::new(mesh);
    Ok(Prepared {
        scene,
        mesh: info,
        load_s: start.elapsed().as_secs_f64(),
    })
}

/// Simulates one azimuth and writes `<tag>.ply`, `<tag>.json` and, when
/// projection is configured, the slant-range image.
pub fn run_view(
    prepared: &Prepared,
    config: &RunConfig,
    azimuth_deg: f64,
    command: &'static str,
) -> CliResult<RunMetadata> {
    let mut config = config.clone();
    config.geometry.azimuth_deg = azimuth_deg.rem_euclid(360.0);
    let geom: ViewGeometry = config.geometry.resolve(prepared.mesh.bounding_radius)?;
    config.geometry.azimuth_deg = geom.azimuth_deg;

    let start = Instant::now();
    let sim = simulate(
        &prepared.scene,
        &geom,
        None,
        &config.monte_carlo_spec(),
        &config.scatter,
        config.workers,
    )?;
    let trace_s = start.elapsed().as_secs_f64();

    ensure_dir(&config.out)?;
    let tag = azimuth_tag(geom.azimuth_deg);

    let start = Instant::now();
    let image = match &config.projection {
        Some(p) => {
            let map = projection::project(&sim.cloud, &geom, &p.settings())?;
            let bytes = projection::encode_image(&map, p.format, p.depth())?;
            let path = config.out.join(format!("{tag}.{}", p.format.extension()));
            write_bytes(&path, &bytes)?;
            Some(ImageInfo {
                file: file_name(&path),
                width: map.width,
                height: map.height,
                extent: map.extent,
                max_value: map.max_value(),
            })
        }
        None => None,
    };
    let project_s = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let cloud_path = config.out.join(format!("{tag}.ply"));
    let bytes = ply::encode(&sim.cloud, config.output.ply, config.output.colors).map_err(Failure::io)?;
    write_bytes(&cloud_path, &bytes)?;
    let write_s = start.elapsed().as_secs_f64();

    let traced = sim.grid_rays + sim.monte_carlo_rays;
    let metadata = RunMetadata {
        tool: TOOL,
        command,
        view: ViewInfo {
            azimuth_deg: geom.azimuth_deg,
            depression_deg: geom.depression_deg,
            range: geom.range,
            grid_step_deg: geom.grid_step_deg,
        },
        mesh: prepared.mesh.clone(),
        rays: RayInfo {
            grid: sim.grid_rays,
            monte_carlo: sim.monte_carlo_rays,
            grid_window: sim.grid,
        },
        points: PointInfo {
            total: sim.cloud.len(),
            per_bounce: sim.cloud.bounce_counts().to_vec(),
            total_intensity: sim.cloud.total_intensity(),
        },
        cloud_file: file_name(&cloud_path),
        image,
        timings: Timings {
            workers: config.workers,
            load_mesh_s: prepared.load_s,
            trace_s,
            project_s,
            write_s,
            traced_rays_per_s: if trace_s > 0.0 { traced as f64 / trace_s } else { 0.0 },
        },
        config,
    };
    write_json(&metadata.config.out.join(format!("{tag}.json")), &metadata)?;
    Ok(metadata)
}

pub fn cmd_simulate(config: &RunConfig) -> CliResult<RunMetadata> {
    let prepared = prepare(config)?;
    run_view(&prepared, config, config.geometry.azimuth_deg, "simulate")
}

/// Outcome of one sweep azimuth.
pub struct SweepItem {
    pub azimuth_deg: f64,
    pub result: CliResult<RunMetadata>,
}

pub fn cmd_sweep(config: &RunConfig, azimuths: &[f64]) -> CliResult<Vec<SweepItem>> {
    let prepared = prepare(config)?;
    Ok(azimuths
        .iter()
        .map(|&az| SweepItem {
            azimuth_deg: az,
            result: run_view(&prepared, config, az, "sweep"),
        })
        .collect())
}

pub fn summary(meta: &RunMetadata, out: &Path) -> String {
    let per_bounce: Vec<String> = meta.points.per_bounce.iter().map(|c| c.to_string()).collect();
    format!(
        "{}: {} points (per bounce {}) from {} rays in {:.2}s -> {}",
        crate::config::azimuth_tag(meta.view.azimuth_deg),
        meta.points.total,
        per_bounce.join("/"),
        meta.rays.grid + meta.rays.monte_carlo,
        meta.timings.trace_s,
        out.join(&meta.cloud_file).display()
    )
}
