use std::path::{Path, PathBuf};

use sarprior_core::projection::{self, Extent};
use sarprior_core::ViewGeometry;
use serde::Serialize;

use crate::args::ProjectArgs;
use crate::config::{load_file, resolve_projection, ProjectionConfig};
use crate::error::{CliResult, Failure};
use crate::output::{ensure_dir, file_name, read_bytes, write_bytes, write_json, ToolInfo, TOOL};
use crate::ply;

#[derive(Debug, Serialize)]
pub struct ProjectMetadata {
    pub tool: ToolInfo,
    pub command: &'static str,
    pub cloud: String,
    pub azimuth_deg: f64,
    pub depression_deg: f64,
    pub projection: ProjectionConfig,
    pub points: usize,
    pub image: String,
    pub extent: Extent,
    pub max_value: f64,
    pub total: f64,
}

pub fn cmd_project(args: &ProjectArgs) -> CliResult<(PathBuf, ProjectMetadata)> {
    let file = match &args.config {
        Some(path) => Some(load_file(path)?),
        None => None,
    };
    let settings = resolve_projection(
        file.as_ref().and_then(|f| f.projection.as_ref()),
        &args.projection,
        true,
    )?
    .expect("projection is required");

    let bytes = read_bytes(&args.cloud)?;
    let parsed = ply::decode(&bytes).map_err(|e| Failure::io(format!("{}: {e}", args.cloud.display())))?;
    let azimuth = args
        .azimuth
        .or(parsed.azimuth_deg)
        .ok_or_else(|| Failure::config("cloud has no azimuth comment; pass --azimuth"))?;
    let depression = args
        .depression
        .or(parsed.depression_deg)
        .ok_or_else(|| Failure::config("cloud has no depression comment; pass --depression"))?;
    // only the viewing angles matter for projection
    let geom = ViewGeometry::new(azimuth, depression, 1.0, 1.0).map_err(Failure::config)?;

    let cloud = parsed.into_cloud(geom.azimuth_deg, geom.depression_deg);
    let map = projection::project(&cloud, &geom, &settings.settings())?;
    let image_bytes = projection::encode_image(&map, settings.format, settings.depth())?;

    let out_dir = match &args.out {
        Some(dir) => dir.clone(),
        None => args.cloud.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    let out_dir = if out_dir.as_os_str().is_empty() {
        PathBuf::from(".")
    } else {
        out_dir
    };
    ensure_dir(&out_dir)?;
    let stem = args
        .cloud
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "cloud".into());
    let image_path = out_dir.join(format!("{stem}.{}", settings.format.extension()));
    write_bytes(&image_path, &image_bytes)?;

    let metadata = ProjectMetadata {
        tool: TOOL,
        command: "project",
        cloud: args.cloud.display().to_string(),
        azimuth_deg: geom.azimuth_deg,
        depression_deg: geom.depression_deg,
        projection: settings,
        points: cloud.len(),
        image: file_name(&image_path),
        extent: map.extent,
        max_value: map.max_value(),
        total: map.total(),
    };
    write_json(&out_dir.join(format!("{stem}_projection.json")), &metadata)?;
    Ok((image_path, metadata))
}
