use std::path::{Path, PathBuf};

use sarprior_core::fusion::{
    self, weights, FeatureVec, FusionDims, FusionInputs, FusionParams, FusionScalars, GateWeights,
};
use serde::{Deserialize, Serialize};

use crate::args::{FuseArgs, InitWeightsArgs};
use crate::error::{Category, CategoryExt, CliResult, Failure};
use crate::output::{ensure_dir, read_bytes, write_json, ToolInfo, TOOL};

/// A single feature vector or a batch of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Features<T> {
    One(T),
    Batch(Vec<T>),
}

impl<T> Features<T> {
    fn rows(self) -> Vec<T> {
        match self {
            Self::One(v) => vec![v],
            Self::Batch(v) => v,
        }
    }
}

fn read_features(path: &Path) -> CliResult<Features<FeatureVec>> {
    let bytes = read_bytes(path)?;
    serde_json::from_slice(&bytes).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

#[derive(Debug, Serialize)]
pub struct FuseMetadata {
    pub tool: ToolInfo,
    pub command: &'static str,
    pub weights: String,
    pub dims: FusionDims,
    pub scalars: FusionScalars,
    pub rows: usize,
    pub zero_image: bool,
    /// Guide interpolation weight per row.
    pub tau: Vec<f64>,
}

pub struct FuseOutput {
    pub features: PathBuf,
    pub gate: PathBuf,
    pub metadata: FuseMetadata,
}

pub fn cmd_fuse(args: &FuseArgs) -> CliResult<FuseOutput> {
    let (params, source) = match &args.weights {
        Some(path) => (weights::load(path)?, path.display().to_string()),
        None => {
            let seed = args.seed.unwrap_or(0);
            let params = FusionParams::seeded(FusionDims::default(), FusionScalars::default(), seed)?;
            (params, format!("seeded:{seed}"))
        }
    };

    let text = read_features(&args.text)?;
    let single = matches!(text, Features::One(_));
    let text = text.rows();
    let point = read_features(&args.point)?.rows();
    let image = match &args.image {
        Some(path) => read_features(path)?.rows(),
        None => vec![FeatureVec::zeros(params.dims.image); text.len()],
    };
    if point.len() != text.len() || image.len() != text.len() {
        return Err(Failure::new(
            Category::Fusion,
            anyhow::anyhow!(
                "batch sizes differ: {} text, {} point, {} image rows",
                text.len(),
                point.len(),
                image.len()
            ),
        ));
    }
    let rows: Vec<FusionInputs> = text
        .into_iter()
        .zip(point)
        .zip(image)
        .map(|((text, point), image)| FusionInputs { text, point, image })
        .collect();
    let results = fusion::fusion_forward_batch(&rows, &params)?;

    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("."));
    ensure_dir(&out)?;
    let features: Vec<Vec<f64>> = results.iter().map(|r| r.features.values().to_vec()).collect();
    let gates: Vec<GateWeights> = results.iter().map(|r| r.gate).collect();
    let features_path = out.join("fused.json");
    let gate_path = out.join("gate.json");
    if single {
        write_json(&features_path, &features[0])?;
        write_json(&gate_path, &gates[0])?;
    } else {
        write_json(&features_path, &features)?;
        write_json(&gate_path, &gates)?;
    }
    let metadata = FuseMetadata {
        tool: TOOL,
        command: "fuse",
        weights: source,
        dims: params.dims,
        scalars: params.scalars,
        rows: results.len(),
        zero_image: args.zero_image,
        tau: results.iter().map(|r| r.tau).collect(),
    };
    write_json(&out.join("fuse.json"), &metadata)?;
    Ok(FuseOutput {
        features: features_path,
        gate: gate_path,
        metadata,
    })
}

pub fn cmd_init_weights(args: &InitWeightsArgs) -> CliResult<()> {
    let params = FusionParams::seeded(FusionDims::default(), FusionScalars::default(), args.seed)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).or_fail(Category::Io)?;
    }
    weights::save(&params, &args.out)?;
    Ok(())
}
