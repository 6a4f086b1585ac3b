use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense affine map `y = W x + b` with `W` stored row-major (`out × in`).
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub out_dim: usize,
    pub in_dim: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Linear {
    pub fn zeros(out_dim: usize, in_dim: usize) -> Self {
        Self {
            out_dim,
            in_dim,
            weight: vec![0.0; out_dim * in_dim],
            bias: vec![0.0; out_dim],
        }
    }

    /// Weights and biases drawn from `U(-1/√in, 1/√in)`.
    pub fn uniform(out_dim: usize, in_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = 1.0 / (in_dim as f64).sqrt();
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-bound..bound)).collect() };
        let weight = draw(out_dim * in_dim);
        let bias = draw(out_dim);
        Self {
            out_dim,
            in_dim,
            weight,
            bias,
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.in_dim);
        self.weight
            .chunks_exact(self.in_dim)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }

    fn check(&self, name: &str, out_dim: usize, in_dim: usize) -> Result<()> {
        if self.out_dim != out_dim || self.in_dim != in_dim {
            return Err(Error::Parameter(format!(
                "{name} is {}x{}, expected {out_dim}x{in_dim}",
                self.out_dim, self.in_dim
            )));
        }
        if self.weight.len() != out_dim * in_dim || self.bias.len() != out_dim {
            return Err(Error::Parameter(format!("{name} storage does not match its shape")));
        }
        check_finite(name, &self.weight)?;
        check_finite(name, &self.bias)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerNormParams {
    pub scale: Vec<f64>,
    pub shift: Vec<f64>,
}

impl LayerNormParams {
    pub fn identity(dim: usize) -> Self {
        Self {
            scale: vec![1.0; dim],
            shift: vec![0.0; dim],
        }
    }

    fn check(&self, name: &str, dim: usize) -> Result<()> {
        if self.scale.len() != dim || self.shift.len() != dim {
            return Err(Error::Parameter(format!("{name} must have dimension {dim}")));
        }
        check_finite(name, &self.scale)?;
        check_finite(name, &self.shift)
    }
}

fn check_finite(name: &str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} contains non-finite values")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FusionDims {
    /// Shared feature width `D`; also the text feature width.
    pub model: usize,
    pub point: usize,
    pub image: usize,
    pub gate_hidden: usize,
    pub film_hidden: usize,
    /// Number of tokens the refine block splits `D` into.
    pub tokens: usize,
    pub heads: usize,
}

impl Default for FusionDims {
    fn default() -> Self {
        Self {
            model: 2048,
            point: 64,
            image: 16,
            gate_hidden: 256,
            film_hidden: 256,
            tokens: 16,
            heads: 4,
        }
    }
}

impl FusionDims {
    pub fn token_dim(&self) -> usize {
        self.model / self.tokens
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.model,
            self.point,
            self.image,
            self.gate_hidden,
            self.film_hidden,
            self.tokens,
            self.heads,
        ];
        if all.contains(&0) {
            return Err(Error::Parameter(format!(
                "fusion dimensions must be positive: {self:?}"
            )));
        }
        if !self.model.is_multiple_of(self.tokens) {
            return Err(Error::Parameter(format!(
                "model width {} is not divisible by {} tokens",
                self.model, self.tokens
            )));
        }
        if !self.token_dim().is_multiple_of(self.heads) {
            return Err(Error::Parameter(format!(
                "token width {} is not divisible by {} heads",
                self.token_dim(),
                self.heads
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionScalars {
    /// FiLM scale range half-width.
    pub lambda: f64,
    pub tau_target: f64,
    pub tau_max: f64,
    pub epsilon: f64,
    pub layer_norm_eps: f64,
    /// Only 0 is supported; inference runs without dropout.
    pub dropout_rate: f64,
}

impl Default for FusionScalars {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            tau_target: 0.5,
            tau_max: 0.8,
            epsilon: 1e-6,
            layer_norm_eps: 1e-5,
            dropout_rate: 0.0,
        }
    }
}

impl FusionScalars {
    pub fn validate(&self) -> Result<()> {
        let s = self;
        let checks = [
            (s.lambda > 0.0 && s.lambda <= 1.0, "lambda must lie in (0, 1]"),
            ((0.0..=1.0).contains(&s.tau_max), "tau_max must lie in [0, 1]"),
            (s.tau_target.is_finite(), "tau_target must be finite"),
            (s.epsilon > 0.0 && s.epsilon.is_finite(), "epsilon must be positive"),
            (
                s.layer_norm_eps > 0.0 && s.layer_norm_eps.is_finite(),
                "layer_norm_eps must be positive",
            ),
            (
                s.dropout_rate == 0.0,
                "dropout_rate must be 0 for deterministic inference",
            ),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::Parameter((*msg).to_string())),
            None => Ok(()),
        }
    }
}

/// Every weight of the fusion cascade. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionParams {
    pub dims: FusionDims,
    pub scalars: FusionScalars,
    pub proj_point: Linear,
    pub proj_image: Linear,
    pub norm_text: LayerNormParams,
    pub norm_point: LayerNormParams,
    pub norm_image: LayerNormParams,
    pub gate_in: Linear,
    pub gate_out: Linear,
    pub film_in: Linear,
    pub film_out: Linear,
    pub attn_query: Linear,
    pub attn_key: Linear,
    pub attn_value: Linear,
    pub attn_output: Linear,
    pub norm_refine: LayerNormParams,
}

impl FusionParams {
    /// Seeded initialization: every linear layer draws from `U(±1/√fan_in)`
    /// in declaration order; layer norms start at unit scale and zero shift.
    pub fn seeded(dims: FusionDims, scalars: FusionScalars, seed: u64) -> Result<Self> {
        dims.validate()?;
        scalars.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (d, t) = (dims.model, dims.token_dim());
        let params = Self {
            dims,
            scalars,
            proj_point: Linear::uniform(d, dims.point, &mut rng),
            proj_image: Linear::uniform(d, dims.image, &mut rng),
            norm_text: LayerNormParams::identity(d),
            norm_point: LayerNormParams::identity(d),
            norm_image: LayerNormParams::identity(d),
            gate_in: Linear::uniform(dims.gate_hidden, 3 * d, &mut rng),
            gate_out: Linear::uniform(3, dims.gate_hidden, &mut rng),
            film_in: Linear::uniform(dims.film_hidden, 2 * d, &mut rng),
            film_out: Linear::uniform(2 * d, dims.film_hidden, &mut rng),
            attn_query: Linear::uniform(t, t, &mut rng),
            attn_key: Linear::uniform(t, t, &mut rng),
            attn_value: Linear::uniform(t, t, &mut rng),
            attn_output: Linear::uniform(t, t, &mut rng),
            norm_refine: LayerNormParams::identity(t),
        };
        Ok(params)
    }

    pub(crate) fn linears(&self) -> [(&'static str, &Linear); 10] {
        [
            ("proj_point", &self.proj_point),
            ("proj_image", &self.proj_image),
            ("gate_in", &self.gate_in),
            ("gate_out", &self.gate_out),
            ("film_in", &self.film_in),
            ("film_out", &self.film_out),
            ("attn_query", &self.attn_query),
            ("attn_key", &self.attn_key),
            ("attn_value", &self.attn_value),
            ("attn_output", &self.attn_output),
        ]
    }

    pub(crate) fn linears_mut(&mut self) -> [(&'static str, &mut Linear); 10] {
        [
            ("proj_point", &mut self.proj_point),
            ("proj_image", &mut self.proj_image),
            ("gate_in", &mut self.gate_in),
            ("gate_out", &mut self.gate_out),
            ("film_in", &mut self.film_in),
            ("film_out", &mut self.film_out),
            ("attn_query", &mut self.attn_query),
            ("attn_key", &mut self.attn_key),
            ("attn_value", &mut self.attn_value),
            ("attn_output", &mut self.attn_output),
        ]
    }

    pub(crate) fn norms(&self) -> [(&'static str, &LayerNormParams); 4] {
        [
            ("norm_text", &self.norm_text),
            ("norm_point", &self.norm_point),
            ("norm_image", &self.norm_image),
            ("norm_refine", &self.norm_refine),
        ]
    }

    pub(crate) fn norms_mut(&mut self) -> [(&'static str, &mut LayerNormParams); 4] {
        [
            ("norm_text", &mut self.norm_text),
            ("norm_point", &mut self.norm_point),
            ("norm_image", &mut self.norm_image),
            ("norm_refine", &mut self.norm_refine),
        ]
    }

    /// Expected `(out, in)` shape of each linear layer.
    pub(crate) fn linear_shape(dims: &FusionDims, name: &str) -> (usize, usize) {
        let (d, t) = (dims.model, dims.token_dim());
        match name {
            "proj_point" => (d, dims.point),
            "proj_image" => (d, dims.image),
            "gate_in" => (dims.gate_hidden, 3 * d),
            "gate_out" => (3, dims.gate_hidden),
            "film_in" => (dims.film_hidden, 2 * d),
            "film_out" => (2 * d, dims.film_hidden),
            _ => (t, t),
        }
    }

    pub(crate) fn norm_dim(dims: &FusionDims, name: &str) -> usize {
        if name == "norm_refine" {
            dims.token_dim()
        } else {
            dims.model
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.dims.validate()?;
        self.scalars.validate()?;
        for (name, layer) in self.linears() {
            let (o, i) = Self::linear_shape(&self.dims, name);
            layer.check(name, o, i)?;
        }
        for (name, norm) in self.norms() {
            norm.check(name, Self::norm_dim(&self.dims, name))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> FusionDims {
        FusionDims {
            model: 32,
            point: 8,
            image: 4,
            gate_hidden: 6,
            film_hidden: 5,
            tokens: 4,
            heads: 2,
        }
    }

    #[test]
    fn seeded_is_reproducible_and_valid() {
        let a = FusionParams::seeded(small(), FusionScalars::default(), 3).unwrap();
        let b = FusionParams::seeded(small(), FusionScalars::default(), 3).unwrap();
        let c = FusionParams::seeded(small(), FusionScalars::default(), 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        a.validate().unwrap();
        let bound = 1.0 / (8f64).sqrt();
        assert!(a.proj_point.weight.iter().all(|w| w.abs() <= bound));
    }

    #[test]
    fn dims_validation() {
        assert!(FusionDims::default().validate().is_ok());
        assert!(FusionDims { tokens: 3, ..small() }.validate().is_err());
        assert!(FusionDims { heads: 3, ..small() }.validate().is_err());
        assert!(FusionDims { image: 0, ..small() }.validate().is_err());
    }

    #[test]
    fn scalar_validation() {
        let ok = FusionScalars::default();
        assert!(ok.validate().is_ok());
        assert!(FusionScalars { lambda: 0.0, ..ok }.validate().is_err());
        assert!(FusionScalars { lambda: 1.0, ..ok }.validate().is_ok());
        assert!(FusionScalars { tau_max: 1.2, ..ok }.validate().is_err());
        assert!(FusionScalars { epsilon: 0.0, ..ok }.validate().is_err());
        assert!(FusionScalars {
            dropout_rate: 0.1,
            ..ok
        }
        .validate()
        .is_err());
    }

    #[test]
    fn linear_forward() {
        let l = Linear {
            out_dim: 2,
            in_dim: 3,
            weight: vec![1.0, 2.0, 3.0, 0.0, -1.0, 0.5],
            bias: vec![0.5, -2.0],
        };
        assert_eq!(l.forward(&[1.0, 1.0, 2.0]), vec![9.5, -2.0]);
    }

    #[test]
    fn validate_catches_shape_and_nan() {
        let mut p = FusionParams::seeded(small(), FusionScalars::default(), 0).unwrap();
        p.gate_out.bias.push(0.0);
        assert!(p.validate().is_err());
        let mut p = FusionParams::seeded(small(), FusionScalars::default(), 0).unwrap();
        p.norm_refine.scale[0] = f64::NAN;
        assert!(p.validate().is_err());
    }
}
