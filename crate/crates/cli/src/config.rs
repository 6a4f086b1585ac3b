//! Run configuration: built-in defaults, then the TOML file, then flags.
//!
//! ```toml
//! mesh = "fixtures/aircraft.obj"
//! out = "out"
//! seed = 0
//! workers = 4
//! structural_tolerance_deg = 10.0
//!
//! [geometry]
//! azimuth = 300.0
//! depression = 30.0
//! range = 120.0        # default: 10 x bounding radius
//! grid_step = 0.2
//!
//! [monte_carlo]
//! rays = 200000
//! sigma = 0.05
//!
//! [scatter]            # any subset of the scattering parameters
//! mu = 0.01
//! k_max = 4
//!
//! [projection]         # optional; enables the slant-range image
//! size = "256x256"
//! mode = "sum"
//! log_compress = false
//! format = "png"
//! bit_depth = 8
//!
//! [output]
//! ply = "binary"
//! colors = false
//! ```

use std::path::{Path, PathBuf};

use sarprior_core::projection::{BitDepth, ImageFormat, ProjectionSettings};
use sarprior_core::{MonteCarloSpec, ProjectionMode, ScatterParams, ViewGeometry};
use serde::{Deserialize, Serialize};

use crate::args::{ImageFormatArg, ModeArg, PlyEncoding, ProjectFlags, RunFlags};
use crate::error::{CliResult, Failure};

pub const DEFAULT_AZIMUTH: f64 = 0.0;
pub const DEFAULT_DEPRESSION: f64 = 30.0;
pub const DEFAULT_GRID_STEP: f64 = 0.2;
pub const DEFAULT_STRUCTURAL_TOLERANCE: f64 = 10.0;
pub const DEFAULT_IMAGE_SIZE: usize = 256;

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub mesh: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub structural_tolerance_deg: Option<f64>,
    pub geometry: GeometryFile,
    pub monte_carlo: MonteCarloFile,
    pub scatter: Option<ScatterParams>,
    pub projection: Option<ProjectionFile>,
    pub output: OutputFile,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryFile {
    pub azimuth: Option<f64>,
    pub depression: Option<f64>,
    pub range: Option<f64>,
    pub grid_step: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloFile {
    pub rays: Option<usize>,
    pub sigma: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectionFile {
    pub size: Option<String>,
    pub mode: Option<ProjectionMode>,
    pub log_compress: Option<bool>,
    pub format: Option<ImageFormat>,
    pub bit_depth: Option<u8>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputFile {
    pub ply: Option<PlyEncoding>,
    pub colors: Option<bool>,
}

pub fn load_file(path: &Path) -> CliResult<FileConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeometrySettings {
    pub azimuth_deg: f64,
    pub depression_deg: f64,
    /// `None` until resolved against the mesh.
    pub range: Option<f64>,
    pub grid_step_deg: f64,
}

impl GeometrySettings {
    /// Geometry at `range`, or 10 x `bounding_radius` when no range is set.
    pub fn resolve(&self, bounding_radius: f64) -> sarprior_core::Result<ViewGeometry> {
        let range = self.range.unwrap_or(10.0 * bounding_radius);
        ViewGeometry::new(self.azimuth_deg, self.depression_deg, range, self.grid_step_deg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProjectionConfig {
    pub width: usize,
    pub height: usize,
    pub mode: ProjectionMode,
    pub log_compress: bool,
    pub format: ImageFormat,
    pub bit_depth: u8,
}

impl ProjectionConfig {
    pub fn settings(&self) -> ProjectionSettings {
        ProjectionSettings {
            width: self.width,
            height: self.height,
            mode: self.mode,
            log_compress: self.log_compress,
            extent: None,
        }
    }

    pub fn depth(&self) -> BitDepth {
        if self.bit_depth == 16 {
            BitDepth::Sixteen
        } else {
            BitDepth::Eight
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutputSettings {
    pub ply: PlyEncoding,
    pub colors: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloSettings {
    pub rays: usize,
    pub sigma: f64,
}

/// Fully resolved simulation settings; echoed into the run metadata.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub mesh: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
    /// Execution detail only; reported with the timings.
    #[serde(skip)]
    pub workers: usize,
    pub structural_tolerance_deg: f64,
    pub geometry: GeometrySettings,
    pub monte_carlo: MonteCarloSettings,
    pub scatter: ScatterParams,
    pub projection: Option<ProjectionConfig>,
    pub output: OutputSettings,
}

impl RunConfig {
    pub fn monte_carlo_spec(&self) -> MonteCarloSpec {
        MonteCarloSpec {
            count: self.monte_carlo.rays,
            sigma: self.monte_carlo.sigma,
            seed: self.seed,
        }
    }
}

/// Parses `WIDTHxHEIGHT`.
pub fn parse_size(s: &str) -> CliResult<(usize, usize)> {
    let bad = || Failure::config(format!("image size {s:?} is not WIDTHxHEIGHT"));
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let w: usize = w.trim().parse().map_err(|_| bad())?;
    let h: usize = h.trim().parse().map_err(|_| bad())?;
    if w == 0 || h == 0 {
        return Err(Failure::config(format!("image size {s:?} must be at least 1x1")));
    }
    Ok((w, h))
}

/// Merges `[projection]` with flags. Returns `None` when neither asks for
/// an image, unless `required`.
pub fn resolve_projection(
    file: Option<&ProjectionFile>,
    flags: &ProjectFlags,
    required: bool,
) -> CliResult<Option<ProjectionConfig>> {
    if file.is_none() && flags.project.is_none() && !required {
        return Ok(None);
    }
    let empty = ProjectionFile::default();
    let file = file.unwrap_or(&empty);
    let size = flags.project.as_deref().or(file.size.as_deref());
    let (width, height) = match size {
        Some(s) => parse_size(s)?,
        None => (DEFAULT_IMAGE_SIZE, DEFAULT_IMAGE_SIZE),
    };
    let mode = match flags.mode {
        Some(ModeArg::Sum) => ProjectionMode::Sum,
        Some(ModeArg::Max) => ProjectionMode::Max,
        None => file.mode.unwrap_or_default(),
    };
    let format = match flags.image_format {
        Some(ImageFormatArg::Png) => ImageFormat::Png,
        Some(ImageFormatArg::Pgm) => ImageFormat::Pgm,
        None => file.format.unwrap_or(ImageFormat::Png),
    };
    let bit_depth = flags.bit_depth.or(file.bit_depth).unwrap_or(8);
    if bit_depth != 8 && bit_depth != 16 {
        return Err(Failure::config(format!("bit depth {bit_depth} must be 8 or 16")));
    }
    Ok(Some(ProjectionConfig {
        width,
        height,
        mode,
        log_compress: flags.log_compress || file.log_compress.unwrap_or(false),
        format,
        bit_depth,
    }))
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Applies defaults < config file < flags and validates the result.
pub fn resolve_run(flags: &RunFlags, projection: &ProjectFlags) -> CliResult<RunConfig> {
    let file = match &flags.config {
        Some(path) => load_file(path)?,
        None => FileConfig::default(),
    };

    let mesh = flags
        .mesh
        .clone()
        .or(file.mesh)
        .ok_or_else(|| Failure::config("no mesh given (use --mesh or the `mesh` config key)"))?;
    if !mesh.is_file() {
        return Err(Failure::config(format!("mesh file {} does not exist", mesh.display())));
    }

    let mut scatter = file.scatter.unwrap_or_default();
    let overrides = [
        (&mut scatter.mu, flags.mu),
        (&mut scatter.zeta, flags.zeta),
        (&mut scatter.tau_min, flags.tau_min),
        (&mut scatter.rho, flags.rho),
    ];
    for (slot, value) in overrides {
        if let Some(v) = value {
            *slot = v;
        }
    }
    if let Some(k) = flags.kmax {
        scatter.k_max = k;
    }
    scatter.validate().map_err(Failure::config)?;

    let g = &file.geometry;
    let geometry = GeometrySettings {
        azimuth_deg: flags.azimuth.or(g.azimuth).unwrap_or(DEFAULT_AZIMUTH),
        depression_deg: flags.depression.or(g.depression).unwrap_or(DEFAULT_DEPRESSION),
        range: flags.range.or(g.range),
        grid_step_deg: flags.grid_step.or(g.grid_step).unwrap_or(DEFAULT_GRID_STEP),
    };
    // a placeholder range checks every other field now; the real range is
    // checked against the mesh once it is loaded
    let probe = ViewGeometry::new(
        geometry.azimuth_deg,
        geometry.depression_deg,
        geometry.range.unwrap_or(1.0),
        geometry.grid_step_deg,
    )
    .map_err(Failure::config)?;
    let geometry = GeometrySettings {
        azimuth_deg: probe.azimuth_deg,
        ..geometry
    };

    let monte_carlo = MonteCarloSettings {
        rays: flags
            .mc_rays
            .or(file.monte_carlo.rays)
            .unwrap_or(MonteCarloSpec::default().count),
        sigma: flags
            .sigma
            .or(file.monte_carlo.sigma)
            .unwrap_or(MonteCarloSpec::default().sigma),
    };
    let tolerance = file.structural_tolerance_deg.unwrap_or(DEFAULT_STRUCTURAL_TOLERANCE);
    if !(tolerance > 0.0 && tolerance < 45.0) {
        return Err(Failure::config(format!(
            "structural_tolerance_deg {tolerance} outside (0, 45)"
        )));
    }
    let workers = flags.workers.or(file.workers).unwrap_or_else(default_workers);
    if workers == 0 {
        return Err(Failure::config("workers must be at least 1"));
    }

    let config = RunConfig {
        mesh,
        out: flags.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from(".")),
        seed: flags.seed.or(file.seed).unwrap_or(0),
        workers,
        structural_tolerance_deg: tolerance,
        geometry,
        monte_carlo,
        scatter,
        projection: resolve_projection(file.projection.as_ref(), projection, false)?,
        output: OutputSettings {
            ply: flags.ply.or(file.output.ply).unwrap_or_default(),
            colors: flags.colors || file.output.colors.unwrap_or(false),
        },
    };
    config.monte_carlo_spec().validate().map_err(Failure::config)?;
    Ok(config)
}

/// Azimuths of a `start:end:step` sweep, end inclusive.
pub fn parse_sweep(s: &str) -> CliResult<Vec<f64>> {
    let bad = || Failure::config(format!("sweep {s:?} is not START:END:STEP"));
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<CliResult<_>>()?;
    let [start, end, step] = parts[..] else {
        return Err(bad());
    };
    if !(start.is_finite() && end.is_finite() && step.is_finite()) {
        return Err(bad());
    }
    if step <= 0.0 {
        return Err(Failure::config(format!("sweep step {step} must be > 0")));
    }
    if start > end {
        return Err(Failure::config(format!("sweep start {start} exceeds end {end}")));
    }
    let n = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| start + k as f64 * step).collect())
}

/// File stem for an azimuth: `az005`, `az002p5`, `az300`.
pub fn azimuth_tag(azimuth_deg: f64) -> String {
    let text = format!("{:.6}", azimuth_deg.rem_euclid(360.0));
    let text = text.trim_end_matches('0').trim_end_matches('.');
    match text.split_once('.') {
        Some((int, frac)) => format!("az{int:0>3}p{frac}"),
        None => format!("az{text:0>3}"),
    }
}
