//! Weights container: a JSON manifest plus a little-endian `f32` blob.
//!
//! ```json
//! {
//!   "format": "sarprior-fusion-weights",
//!   "version": 1,
//!   "dims": { "model": 2048, ... },
//!   "scalars": { "lambda": 0.5, ... },
//!   "blob": "weights.bin",
//!   "arrays": [ { "name": "proj_point.weight", "shape": [2048, 64], "offset": 0 }, ... ]
//! }
//! ```
//!
//! Arrays are row-major; `offset` is in bytes from the start of the blob,
//! which is resolved relative to the manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{FusionDims, FusionParams, FusionScalars, LayerNormParams, Linear};
use crate::error::{Error, Result};

pub const FORMAT: &str = "sarprior-fusion-weights";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub dims: FusionDims,
    pub scalars: FusionScalars,
    pub blob: String,
    pub arrays: Vec<ArrayEntry>,
}

fn expected_shapes(dims: &FusionDims) -> Vec<(String, Vec<usize>)> {
    let mut shapes = Vec::new();
    for name in [
        "proj_point",
        "proj_image",
        "gate_in",
        "gate_out",
        "film_in",
        "film_out",
        "attn_query",
        "attn_key",
        "attn_value",
        "attn_output",
    ] {
        let (o, i) = FusionParams::linear_shape(dims, name);
        shapes.push((format!("{name}.weight"), vec![o, i]));
        shapes.push((format!("{name}.bias"), vec![o]));
    }
    for name in ["norm_text", "norm_point", "norm_image", "norm_refine"] {
        let n = FusionParams::norm_dim(dims, name);
        shapes.push((format!("{name}.scale"), vec![n]));
        shapes.push((format!("{name}.shift"), vec![n]));
    }
    shapes
}

fn named_arrays(params: &FusionParams) -> BTreeMap<String, &[f64]> {
    let mut out = BTreeMap::new();
    for (name, l) in params.linears() {
        out.insert(format!("{name}.weight"), l.weight.as_slice());
        out.insert(format!("{name}.bias"), l.bias.as_slice());
    }
    for (name, n) in params.norms() {
        out.insert(format!("{name}.scale"), n.scale.as_slice());
        out.insert(format!("{name}.shift"), n.shift.as_slice());
    }
    out
}

/// Serializes `params` into a manifest (for a blob named `blob_name`) and
/// the blob bytes. Values are narrowed to `f32`.
pub fn encode(params: &FusionParams, blob_name: &str) -> Result<(Manifest, Vec<u8>)> {
    params.validate()?;
    let arrays = named_arrays(params);
    let mut blob = Vec::new();
    let mut entries = Vec::new();
    for (name, shape) in expected_shapes(&params.dims) {
        let values = arrays[&name];
        entries.push(ArrayEntry {
            name,
            shape,
            offset: blob.len() as u64,
        });
        for &v in values {
            let narrowed = v as f32;
            if !narrowed.is_finite() {
                return Err(Error::Weights(format!("value {v} does not fit in f32")));
            }
            blob.extend_from_slice(&narrowed.to_le_bytes());
        }
    }
    let manifest = Manifest {
        format: FORMAT.to_string(),
        version: VERSION,
        dims: params.dims,
        scalars: params.scalars,
        blob: blob_name.to_string(),
        arrays: entries,
    };
    Ok((manifest, blob))
}

/// Rebuilds parameters from a manifest and its blob, validating every shape.
pub fn decode(manifest: &Manifest, blob: &[u8]) -> Result<FusionParams> {
    if manifest.format != FORMAT {
        return Err(Error::Weights(format!("unknown format {:?}", manifest.format)));
    }
    if manifest.version != VERSION {
        return Err(Error::Weights(format!("unsupported version {}", manifest.version)));
    }
    let dims = manifest.dims;
    dims.validate()?;
    manifest.scalars.validate()?;

    let mut by_name: BTreeMap<&str, &ArrayEntry> = BTreeMap::new();
    for entry in &manifest.arrays {
        if by_name.insert(entry.name.as_str(), entry).is_some() {
            return Err(Error::Weights(format!("array {} listed twice", entry.name)));
        }
    }
    let expected = expected_shapes(&dims);
    if let Some(extra) = by_name.keys().find(|k| !expected.iter().any(|(n, _)| n == *k)) {
        return Err(Error::Weights(format!("unexpected array {extra}")));
    }

    let mut values: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (name, shape) in expected {
        let entry = by_name
            .get(name.as_str())
            .ok_or_else(|| Error::Weights(format!("missing array {name}")))?;
        if entry.shape != shape {
            return Err(Error::Weights(format!(
                "array {name} has shape {:?}, expected {shape:?}",
                entry.shape
            )));
        }
        let count: usize = shape.iter().product();
        let start = usize::try_from(entry.offset).map_err(|_| Error::Weights(format!("offset of {name} too large")))?;
        let end = start
            .checked_add(count * 4)
            .filter(|&e| e <= blob.len())
            .ok_or_else(|| {
                Error::Weights(format!(
                    "array {name} at byte offset {start} runs past the {}-byte blob",
                    blob.len()
                ))
            })?;
        let data: Vec<f64> = blob[start..end]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
            .collect();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Weights(format!("array {name} contains non-finite values")));
        }
        values.insert(name, data);
    }

    let mut take = |key: String| values.remove(&key).expect("checked above");
    let mut params = FusionParams {
        dims,
        scalars: manifest.scalars,
        proj_point: Linear::zeros(0, 0),
        proj_image: Linear::zeros(0, 0),
        norm_text: LayerNormParams::identity(0),
        norm_point: LayerNormParams::identity(0),
        norm_image: LayerNormParams::identity(0),
        gate_in: Linear::zeros(0, 0),
        gate_out: Linear::zeros(0, 0),
        film_in: Linear::zeros(0, 0),
        film_out: Linear::zeros(0, 0),
        attn_query: Linear::zeros(0, 0),
        attn_key: Linear::zeros(0, 0),
        attn_value: Linear::zeros(0, 0),
        attn_output: Linear::zeros(0, 0),
        norm_refine: LayerNormParams::identity(0),
    };
    for (name, layer) in params.linears_mut() {
        let (o, i) = FusionParams::linear_shape(&dims, name);
        *layer = Linear {
            out_dim: o,
            in_dim: i,
            weight: take(format!("{name}.weight")),
            bias: take(format!("{name}.bias")),
        };
    }
    for (name, norm) in params.norms_mut() {
        *norm = LayerNormParams {
            scale: take(format!("{name}.scale")),
            shift: take(format!("{name}.shift")),
        };
    }
    params.validate()?;
    Ok(params)
}

fn blob_path(manifest_path: &Path, blob: &str) -> PathBuf {
    manifest_path.parent().unwrap_or(Path::new(".")).join(blob)
}

/// Writes `<stem>.json`-style manifest at `manifest_path` and the blob
/// beside it with a `.bin` extension.
pub fn save(params: &FusionParams, manifest_path: impl AsRef<Path>) -> Result<()> {
    let manifest_path = manifest_path.as_ref();
    let blob_name = manifest_path
        .with_extension("bin")
        .file_name()
        .and_then(|n| n.to_str())
        .map(str::to_string)
        .ok_or_else(|| Error::Weights(format!("cannot derive a blob name from {}", manifest_path.display())))?;
    let (manifest, blob) = encode(params, &blob_name)?;
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Weights(e.to_string()))?;
    let write =
        |path: PathBuf, bytes: &[u8]| std::fs::write(&path, bytes).map_err(|source| Error::Write { path, source });
    write(blob_path(manifest_path, &blob_name), &blob)?;
    write(manifest_path.to_path_buf(), text.as_bytes())
}

pub fn load(manifest_path: impl AsRef<Path>) -> Result<FusionParams> {
    let manifest_path = manifest_path.as_ref();
    let read = |path: PathBuf| std::fs::read(&path).map_err(|source| Error::Read { path, source });
    let text = read(manifest_path.to_path_buf())?;
    let manifest: Manifest =
        serde_json::from_slice(&text).map_err(|e| Error::Weights(format!("{}: {e}", manifest_path.display())))?;
    let blob = read(blob_path(manifest_path, &manifest.blob))?;
    decode(&manifest, &blob)
}
