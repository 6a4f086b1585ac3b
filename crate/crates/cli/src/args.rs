use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "sarprior", version, about = "Geometric SAR scattering simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Trace one view and write its point cloud and metadata.
    Simulate(SimulateArgs),
    /// Run `simulate` for every azimuth of a `start:end:step` sweep.
    Sweep(SweepArgs),
    /// Rasterize a point cloud onto the slant-range plane.
    Project(ProjectArgs),
    /// Run the feature fusion cascade on one sample or a batch.
    Fuse(FuseArgs),
    /// Write a seeded fusion weights container.
    InitWeights(InitWeightsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PlyEncoding {
    Ascii,
    #[default]
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Sum,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ImageFormatArg {
    Png,
    Pgm,
}

/// Simulation settings; each flag overrides the matching config key.
#[derive(Debug, Clone, Default, Args)]
pub struct RunFlags {
    /// TOML run configuration.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Target mesh (.obj or binary .stl).
    #[arg(long, value_name = "PATH")]
    pub mesh: Option<PathBuf>,
    /// Azimuth in degrees, counter-clockwise from +X.
    #[arg(long, allow_negative_numbers = true)]
    pub azimuth: Option<f64>,
    /// Depression angle in degrees, in (0, 90].
    #[arg(long)]
    pub depression: Option<f64>,
    /// Sensor distance from the mesh centroid [default: 10 x bounding radius].
    #[arg(long)]
    pub range: Option<f64>,
    /// Angular step of the regular ray grid, in degrees.
    #[arg(long)]
    pub grid_step: Option<f64>,
    /// Number of Monte Carlo rays.
    #[arg(long)]
    pub mc_rays: Option<usize>,
    /// Monte Carlo beam spread (standard deviation, radians).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Attenuation coefficient per unit path length.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Surface roughness in [0, 1].
    #[arg(long)]
    pub zeta: Option<f64>,
    /// Maximum bounce count.
    #[arg(long)]
    pub kmax: Option<u32>,
    /// Minimum intensity of an emitted point.
    #[arg(long)]
    pub tau_min: Option<f64>,
    /// Per-bounce reflectance.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Random seed for the Monte Carlo rays.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it [default: available cores].
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Point-cloud encoding.
    #[arg(long, value_enum)]
    pub ply: Option<PlyEncoding>,
    /// Add per-bounce RGB colors to the point cloud.
    #[arg(long)]
    pub colors: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ProjectFlags {
    /// Also write a slant-range image of WIDTHxHEIGHT pixels.
    #[arg(long, value_name = "WxH")]
    pub project: Option<String>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Apply ln(1 + x) and renormalize.
    #[arg(long)]
    pub log_compress: bool,
    #[arg(long, value_enum)]
    pub image_format: Option<ImageFormatArg>,
    /// 8 or 16.
    #[arg(long)]
    pub bit_depth: Option<u8>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub run: RunFlags,
    #[command(flatten)]
    pub projection: ProjectFlags,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Azimuth range `start:end:step` in degrees.
    #[arg(long, value_name = "START:END:STEP")]
    pub sweep: String,
    #[command(flatten)]
    pub run: RunFlags,
    #[command(flatten)]
    pub projection: ProjectFlags,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    /// Point cloud written by `simulate`.
    pub cloud: PathBuf,
    /// TOML configuration; only its `[projection]` table is used.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Viewing azimuth [default: from the cloud header].
    #[arg(long, allow_negative_numbers = true)]
    pub azimuth: Option<f64>,
    /// Viewing depression [default: from the cloud header].
    #[arg(long)]
    pub depression: Option<f64>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub projection: ProjectFlags,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    /// Text features (JSON array, or array of arrays for a batch).
    #[arg(long, value_name = "PATH")]
    pub text: PathBuf,
    /// Point-cloud features.
    #[arg(long, value_name = "PATH")]
    pub point: PathBuf,
    /// Image features, or a style vector used in their place.
    #[arg(long, value_name = "PATH", required_unless_present = "zero_image")]
    pub image: Option<PathBuf>,
    /// Use an all-zero image feature.
    #[arg(long, conflicts_with = "image")]
    pub zero_image: bool,
    /// Weights manifest; seeded weights are used when absent.
    #[arg(long, value_name = "PATH")]
    pub weights: Option<PathBuf>,
    /// Seed for generated weights.
    #[arg(long, conflicts_with = "weights")]
    pub seed: Option<u64>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InitWeightsArgs {
    /// Manifest path; the blob is written beside it with a .bin extension.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}
