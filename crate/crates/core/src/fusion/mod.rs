//! Forward kernels of the multi-modal feature fusion cascade.
//!
//! The cascade runs five stages on one sample:
//! [`project_norm`] → [`gate_fuse`] → [`film_modulate`] → [`refine`] →
//! [`cosine_guide`]. [`cfg_combine`] is the guidance-scale combiner applied
//! to a pair of noise predictions.
//!
//! All kernels are pure functions of their inputs and a [`FusionParams`].
//! Dropout is never applied.

mod params;
pub mod weights;

use serde::{Deserialize, Serialize};

pub use params::{FusionDims, FusionParams, FusionScalars, LayerNormParams, Linear};

use crate::error::{Error, Result};

/// A finite feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FeatureVec(Vec<f64>);

impl FeatureVec {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!("feature component {i} is not finite")));
        }
        Ok(Self(values))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Wraps kernel output, rejecting overflow to non-finite values.
    fn checked(values: Vec<f64>, stage: &str) -> Result<Self> {
        Self::new(values).map_err(|_| Error::Parameter(format!("{stage} produced non-finite values")))
    }
}

impl TryFrom<Vec<f64>> for FeatureVec {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<FeatureVec> for Vec<f64> {
    fn from(v: FeatureVec) -> Self {
        v.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Text,
    Point,
    Image,
}

/// Softmax importance of each modality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateWeights {
    pub text: f64,
    pub point: f64,
    pub image: f64,
}

impl GateWeights {
    pub fn as_array(&self) -> [f64; 3] {
        [self.text, self.point, self.image]
    }

    pub fn sum(&self) -> f64 {
        self.text + self.point + self.image
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn expect_dim(what: &str, v: &[f64], expected: usize) -> Result<()> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(Error::Dimension {
            what: what.to_string(),
            expected,
            actual: v.len(),
        })
    }
}

/// Exact-erf GELU.
pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + libm::erf(x * std::f64::consts::FRAC_1_SQRT_2))
}

/// Max-shifted softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn layer_norm_slice(x: &[f64], scale: &[f64], shift: &[f64], eps: f64) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let inv = 1.0 / (var + eps).sqrt();
    x.iter()
        .zip(scale.iter().zip(shift))
        .map(|(v, (g, b))| (v - mean) * inv * g + b)
        .collect()
}

/// Normalizes to zero mean and unit population variance, then applies
/// `scale` and `shift`.
pub fn layer_norm(x: &FeatureVec, scale: &[f64], shift: &[f64], eps: f64) -> Result<FeatureVec> {
    if x.dim() == 0 {
        return Err(Error::Parameter("layer norm of an empty vector".into()));
    }
    expect_dim("layer norm scale", scale, x.dim())?;
    expect_dim("layer norm shift", shift, x.dim())?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Parameter(format!("layer norm eps {eps} must be positive")));
    }
    FeatureVec::checked(layer_norm_slice(x.values(), scale, shift, eps), "layer norm")
}

/// Brings one modality to the shared width `D`. Text is normalized only;
/// point and image features pass through their linear map first.
pub fn project_norm(f: &FeatureVec, which: Modality, params: &FusionParams) -> Result<FeatureVec> {
    let dims = &params.dims;
    let eps = params.scalars.layer_norm_eps;
    let (expected, what) = match which {
        Modality::Text => (dims.model, "text features"),
        Modality::Point => (dims.point, "point features"),
        Modality::Image => (dims.image, "image features"),
    };
    expect_dim(what, f.values(), expected)?;
    let (projected, norm) = match which {
        Modality::Text => (f.clone(), &params.norm_text),
        Modality::Point => (
            FeatureVec::checked(params.proj_point.forward(f.values()), "point projection")?,
            &params.norm_point,
        ),
        Modality::Image => (
            FeatureVec::checked(params.proj_image.forward(f.values()), "image projection")?,
            &params.norm_image,
        ),
    };
    layer_norm(&projected, &norm.scale, &norm.shift, eps)
}

fn check_model_dims(params: &FusionParams, vs: &[(&str, &FeatureVec)]) -> Result<()> {
    vs.iter()
        .try_for_each(|(what, v)| expect_dim(what, v.values(), params.dims.model))
}

/// Raw gate logits `W_gate · GELU(W_in [ft, fp, fi])`.
pub fn gate_logits(ft: &FeatureVec, fp: &FeatureVec, fi: &FeatureVec, params: &FusionParams) -> Result<[f64; 3]> {
    check_model_dims(params, &[("text", ft), ("point", fp), ("image", fi)])?;
    let concat: Vec<f64> = [ft, fp, fi].iter().flat_map(|v| v.values().iter().copied()).collect();
    let hidden: Vec<f64> = params.gate_in.forward(&concat).into_iter().map(gelu).collect();
    let logits = params.gate_out.forward(&hidden);
    if logits.iter().any(|l| !l.is_finite()) {
        return Err(Error::Parameter("gate logits are not finite".into()));
    }
    Ok([logits[0], logits[1], logits[2]])
}

/// Softmax-gated sum of the three normalized modalities.
pub fn gate_fuse(
    ft: &FeatureVec,
    fp: &FeatureVec,
    fi: &FeatureVec,
    params: &FusionParams,
) -> Result<(GateWeights, FeatureVec)> {
    let alpha = softmax(&gate_logits(ft, fp, fi, params)?);
    let gate = GateWeights {
        text: alpha[0],
        point: alpha[1],
        image: alpha[2],
    };
    let fused = ft
        .values()
        .iter()
        .zip(fp.values())
        .zip(fi.values())
        .map(|((t, p), i)| gate.text * t + gate.point * p + gate.image * i)
        .collect();
    Ok((gate, FeatureVec::checked(fused, "gated fusion")?))
}

/// Bounded scales `γ̂ = 1 + λ tanh(γ)` and shifts `β` produced from
/// `[f_pre, fi]`.
pub fn film_coefficients(f_pre: &FeatureVec, fi: &FeatureVec, params: &FusionParams) -> Result<(Vec<f64>, Vec<f64>)> {
    check_model_dims(params, &[("pre-fusion", f_pre), ("image", fi)])?;
    let concat: Vec<f64> = f_pre.values().iter().chain(fi.values()).copied().collect();
    let hidden: Vec<f64> = params.film_in.forward(&concat).into_iter().map(gelu).collect();
    let mut out = params.film_out.forward(&hidden);
    let beta = out.split_off(params.dims.model);
    let lambda = params.scalars.lambda;
    let gamma_hat = out.into_iter().map(|g| 1.0 + lambda * g.tanh()).collect();
    Ok((gamma_hat, beta))
}

pub fn film_modulate(f_pre: &FeatureVec, fi: &FeatureVec, params: &FusionParams) -> Result<FeatureVec> {
    let (gamma_hat, beta) = film_coefficients(f_pre, fi, params)?;
    let out = f_pre
        .values()
        .iter()
        .zip(gamma_hat.iter().zip(&beta))
        // adding a zero shift would turn -0.0 into +0.0
        .map(|(x, (g, b))| if *b == 0.0 { g * x } else { g * x + b })
        .collect();
    FeatureVec::checked(out, "FiLM")
}

/// One multi-head self-attention layer over `tokens` slices of the vector,
/// with a residual connection followed by per-token layer norm.
pub fn refine(f_film: &FeatureVec, params: &FusionParams) -> Result<FeatureVec> {
    let dims = &params.dims;
    check_model_dims(params, &[("FiLM output", f_film)])?;
    let width = dims.token_dim();
    let head_width = width / dims.heads;
    let scale = 1.0 / (head_width as f64).sqrt();
    let tokens: Vec<&[f64]> = f_film.values().chunks_exact(width).collect();
    let q: Vec<Vec<f64>> = tokens.iter().map(|x| params.attn_query.forward(x)).collect();
    let k: Vec<Vec<f64>> = tokens.iter().map(|x| params.attn_key.forward(x)).collect();
    let v: Vec<Vec<f64>> = tokens.iter().map(|x| params.attn_value.forward(x)).collect();

    let mut out = Vec::with_capacity(dims.model);
    for (i, x) in tokens.iter().enumerate() {
        let mut mixed = vec![0.0; width];
        for h in 0..dims.heads {
            let cols = h * head_width..(h + 1) * head_width;
            let scores: Vec<f64> = k
                .iter()
                .map(|kj| dot(&q[i][cols.clone()], &kj[cols.clone()]) * scale)
                .collect();
            for (a, vj) in softmax(&scores).iter().zip(&v) {
                for c in cols.clone() {
                    mixed[c] += a * vj[c];
                }
            }
        }
        let attended = params.attn_output.forward(&mixed);
        let residual: Vec<f64> = x.iter().zip(&attended).map(|(a, b)| a + b).collect();
        out.extend(layer_norm_slice(
            &residual,
            &params.norm_refine.scale,
            &params.norm_refine.shift,
            params.scalars.layer_norm_eps,
        ));
    }
    FeatureVec::checked(out, "refine block")
}

pub fn cosine_similarity(a: &FeatureVec, b: &FeatureVec) -> Result<f64> {
    expect_dim("cosine operand", b.values(), a.dim())?;
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 {
        return Err(Error::ZeroMagnitude("first cosine operand"));
    }
    if nb == 0.0 {
        return Err(Error::ZeroMagnitude("second cosine operand"));
    }
    Ok((dot(a.values(), b.values()) / (na * nb)).clamp(-1.0, 1.0))
}

/// Interpolation weight toward the image direction for a given cosine.
pub fn guide_tau(s_cos: f64, scalars: &FusionScalars) -> f64 {
    let pull = (scalars.tau_target - s_cos).max(0.0);
    (pull / scalars.epsilon.max(1.0 - s_cos)).clamp(0.0, scalars.tau_max)
}

/// Result of [`cosine_guide_with_tau`].
#[derive(Debug, Clone, PartialEq)]
pub struct Guided {
    pub features: FeatureVec,
    pub s_cos: f64,
    pub tau: f64,
}

/// Pulls `f_refined` toward `fi` when their cosine falls below the target,
/// then restores the magnitude of `f_refined`.
pub fn cosine_guide_with_tau(f_refined: &FeatureVec, fi: &FeatureVec, params: &FusionParams) -> Result<Guided> {
    let s_cos = cosine_similarity(f_refined, fi)?;
    let tau = guide_tau(s_cos, &params.scalars);
    if tau == 0.0 {
        return Ok(Guided {
            features: f_refined.clone(),
            s_cos,
            tau,
        });
    }
    let (nr, ni) = (f_refined.norm(), fi.norm());
    let mixed: Vec<f64> = f_refined
        .values()
        .iter()
        .zip(fi.values())
        .map(|(r, i)| (1.0 - tau) * r / nr + tau * i / ni)
        .collect();
    let nm = norm(&mixed);
    if !(nm > 0.0 && nm.is_finite()) {
        return Err(Error::ZeroMagnitude("guided interpolation"));
    }
    let features = FeatureVec::checked(mixed.into_iter().map(|m| m / nm * nr).collect(), "cosine guide")?;
    Ok(Guided { features, s_cos, tau })
}

pub fn cosine_guide(f_refined: &FeatureVec, fi: &FeatureVec, params: &FusionParams) -> Result<FeatureVec> {
    cosine_guide_with_tau(f_refined, fi, params).map(|g| g.features)
}

/// Output of the whole cascade for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionOutput {
    pub features: FeatureVec,
    pub gate: GateWeights,
    /// Guide interpolation weight; 0 when guidance was skipped.
    pub tau: f64,
}

/// Runs the five-stage cascade. For inference without an image, pass a
/// zero vector (or a style vector) as `fi`. When the projected image
/// feature has zero magnitude the guide stage is skipped.
pub fn fusion_forward(
    ft: &FeatureVec,
    fp: &FeatureVec,
    fi: &FeatureVec,
    params: &FusionParams,
) -> Result<FusionOutput> {
    let ft_n = project_norm(ft, Modality::Text, params)?;
    let fp_n = project_norm(fp, Modality::Point, params)?;
    let fi_n = project_norm(fi, Modality::Image, params)?;
    let (gate, f_pre) = gate_fuse(&ft_n, &fp_n, &fi_n, params)?;
    let f_film = film_modulate(&f_pre, &fi_n, params)?;
    let f_refined = refine(&f_film, params)?;
    if fi_n.norm() == 0.0 {
        return Ok(FusionOutput {
            features: f_refined,
            gate,
            tau: 0.0,
        });
    }
    let guided = cosine_guide_with_tau(&f_refined, &fi_n, params)?;
    Ok(FusionOutput {
        features: guided.features,
        gate,
        tau: guided.tau,
    })
}

/// One batch row of raw modality features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionInputs {
    pub text: FeatureVec,
    pub point: FeatureVec,
    pub image: FeatureVec,
}

/// Maps [`fusion_forward`] over independent rows.
pub fn fusion_forward_batch(rows: &[FusionInputs], params: &FusionParams) -> Result<Vec<FusionOutput>> {
    let run = |r: &FusionInputs| fusion_forward(&r.text, &r.point, &r.image, params);
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        rows.par_iter().map(run).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        rows.iter().map(run).collect()
    }
}

/// Guidance-scale combination `u + w (c − u)`, evaluated as
/// `(1 − w) u + w c` so that `w = 0` and `w = 1` return the inputs exactly.
pub fn cfg_combine(eps_uncond: &FeatureVec, eps_cond: &FeatureVec, w: f64) -> Result<FeatureVec> {
    expect_dim("conditional prediction", eps_cond.values(), eps_uncond.dim())?;
    if !w.is_finite() {
        return Err(Error::Parameter(format!("guidance scale {w} is not finite")));
    }
    let out = eps_uncond
        .values()
        .iter()
        .zip(eps_cond.values())
        .map(|(u, c)| (1.0 - w) * u + w * c)
        .collect();
    FeatureVec::checked(out, "guidance combination")
}
