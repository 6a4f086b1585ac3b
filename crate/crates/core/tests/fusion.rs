mod common;

use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sarprior_core::fusion::{
    self, cfg_combine, cosine_guide_with_tau, cosine_similarity, film_coefficients, fusion_forward, gate_fuse,
    guide_tau, layer_norm, weights, FeatureVec, FusionDims, FusionParams, FusionScalars, Linear,
};

fn dims() -> FusionDims {
    FusionDims {
        model: 64,
        point: 64,
        image: 16,
        gate_hidden: 32,
        film_hidden: 32,
        tokens: 16,
        heads: 4,
    }
}

fn random(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> FeatureVec {
    FeatureVec::new((0..n).map(|_| rng.random_range(-scale..scale)).collect()).unwrap()
}

#[test]
fn gate_weights_form_a_distribution() {
    for seed in 0..1000u64 {
        let params = FusionParams::seeded(dims(), FusionScalars::default(), seed).unwrap();
        let mut rng = common::rng(seed);
        let v: Vec<_> = (0..3).map(|_| random(&mut rng, 64, 3.0)).collect();
        let (g, _) = gate_fuse(&v[0], &v[1], &v[2], &params).unwrap();
        assert!((g.sum() - 1.0).abs() <= 1e-12, "seed {seed}");
        assert!(g.as_array().iter().all(|&a| a > 0.0 && a < 1.0));
    }
}

#[test]
fn film_scale_is_bounded() {
    let mut rng = common::rng(50);
    for seed in 0..200u64 {
        let lambda = rng.random_range(0.01..=1.0);
        let scalars = FusionScalars {
            lambda,
            ..Default::default()
        };
        let mut params = FusionParams::seeded(dims(), scalars, seed).unwrap();
        // exaggerate the output layer so tanh saturates on some channels
        params.film_out.weight.iter_mut().for_each(|w| *w *= 40.0);
        let (pre, im) = (random(&mut rng, 64, 5.0), random(&mut rng, 64, 5.0));
        let (g, _) = film_coefficients(&pre, &im, &params).unwrap();
        assert!(g.iter().all(|&x| x >= 1.0 - lambda && x <= 1.0 + lambda));
    }
}

#[test]
fn zeroed_film_network_is_exact_identity() {
    let mut rng = common::rng(51);
    let mut params = FusionParams::seeded(dims(), FusionScalars::default(), 1).unwrap();
    params.film_out = Linear::zeros(128, 32);
    for _ in 0..100 {
        let pre = random(&mut rng, 64, 4.0);
        let out = fusion::film_modulate(&pre, &random(&mut rng, 64, 4.0), &params).unwrap();
        assert!(out
            .values()
            .iter()
            .zip(pre.values())
            .all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}

/// Draws a pair with a cosine spread over the whole range, including
/// nearly parallel and nearly opposite vectors.
fn random_pair(rng: &mut ChaCha8Rng, n: usize) -> (FeatureVec, FeatureVec) {
    let a = random(rng, n, 1.0);
    let noise = random(rng, n, 1.0);
    let mix: f64 = rng.random_range(-1.0..1.0);
    let b: Vec<f64> = a
        .values()
        .iter()
        .zip(noise.values())
        .map(|(x, e)| mix * x + (1.0 - mix.abs()) * e)
        .collect();
    let scale = 10f64.powf(rng.random_range(-3.0..3.0));
    (a, FeatureVec::new(b.into_iter().map(|v| v * scale).collect()).unwrap())
}

#[test]
fn cosine_guide_invariants() {
    let mut rng = common::rng(52);
    let params = FusionParams::seeded(dims(), FusionScalars::default(), 0).unwrap();
    let sc = params.scalars;
    let mut pulled = 0;
    for _ in 0..1000 {
        let (r, i) = random_pair(&mut rng, 64);
        let g = cosine_guide_with_tau(&r, &i, &params).unwrap();
        assert!((0.0..=sc.tau_max).contains(&g.tau));
        if g.s_cos >= sc.tau_target {
            assert_eq!(g.tau, 0.0);
            assert_eq!(g.features, r);
        } else {
            pulled += 1;
        }
        let after = cosine_similarity(&g.features, &i).unwrap();
        assert!(after >= g.s_cos - 1e-12, "{after} < {}", g.s_cos);
        let rel = (g.features.norm() - r.norm()).abs() / r.norm();
        assert!(rel <= 1e-9);
    }
    assert!(pulled > 300, "only {pulled} pairs exercised the interpolation");
}

#[test]
fn tau_matches_closed_form() {
    let sc = FusionScalars::default();
    for k in 0..=200 {
        let s = -1.0 + k as f64 / 100.0;
        let expected = if s >= 0.5 {
            0.0
        } else {
            ((0.5 - s) / (1.0 - s).max(1e-6)).min(0.8)
        };
        assert!((guide_tau(s, &sc) - expected).abs() < 1e-15);
    }
}

#[test]
fn cfg_endpoints_and_affinity() {
    let mut rng = common::rng(53);
    for _ in 0..200 {
        let u = random(&mut rng, 32, 10.0);
        let c = random(&mut rng, 32, 10.0);
        assert_eq!(cfg_combine(&u, &c, 0.0).unwrap(), u);
        assert_eq!(cfg_combine(&u, &c, 1.0).unwrap(), c);
        for w in [-1.5, 0.25, 0.5, 2.0, 7.5] {
            let got = cfg_combine(&u, &c, w).unwrap();
            for ((g, a), b) in got.values().iter().zip(u.values()).zip(c.values()) {
                let direct = a + w * (b - a);
                assert!((g - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
            }
        }
    }
}

#[test]
fn forward_is_deterministic_and_continuous() {
    let params = FusionParams::seeded(dims(), FusionScalars::default(), 8).unwrap();
    let mut rng = common::rng(54);
    let (t, p, i) = (
        random(&mut rng, 64, 1.0),
        random(&mut rng, 64, 1.0),
        random(&mut rng, 16, 1.0),
    );
    let base = fusion_forward(&t, &p, &i, &params).unwrap();
    assert_eq!(base, fusion_forward(&t, &p, &i, &params).unwrap());

    let direction = random(&mut rng, 64, 1.0);
    let mut previous = f64::INFINITY;
    for h in [1e-3, 1e-4, 1e-5] {
        let shifted: Vec<f64> = p
            .values()
            .iter()
            .zip(direction.values())
            .map(|(x, d)| x + h * d)
            .collect();
        let out = fusion_forward(&t, &FeatureVec::new(shifted).unwrap(), &i, &params).unwrap();
        let diff = out
            .features
            .values()
            .iter()
            .zip(base.features.values())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(diff < previous, "h = {h}: {diff} not below {previous}");
        previous = diff;
    }
    assert!(previous < 1e-3);
}

#[test]
fn zero_image_inference_is_deterministic() {
    let params = FusionParams::seeded(FusionDims::default(), FusionScalars::default(), 0).unwrap();
    let mut rng = common::rng(55);
    let (t, p) = (random(&mut rng, 2048, 1.0), random(&mut rng, 64, 1.0));
    let zero = FeatureVec::zeros(16);
    let a = fusion_forward(&t, &p, &zero, &params).unwrap();
    let b = fusion_forward(&t, &p, &zero, &params).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.features.dim(), 2048);
    assert!((a.gate.sum() - 1.0).abs() < 1e-12);
}

#[test]
fn weights_round_trip_preserves_forward() {
    let params = FusionParams::seeded(dims(), FusionScalars::default(), 12).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.json");
    weights::save(&params, &path).unwrap();
    let loaded = weights::load(&path).unwrap();
    weights::save(&loaded, dir.path().join("again.json")).unwrap();
    assert_eq!(weights::load(dir.path().join("again.json")).unwrap(), loaded);

    let mut rng = common::rng(56);
    let (t, p, i) = (
        random(&mut rng, 64, 1.0),
        random(&mut rng, 64, 1.0),
        random(&mut rng, 16, 1.0),
    );
    let a = fusion_forward(&t, &p, &i, &params).unwrap();
    let b = fusion_forward(&t, &p, &i, &loaded).unwrap();
    // f32 storage perturbs weights by about 6e-8 relative
    for (x, y) in a.features.values().iter().zip(b.features.values()) {
        assert!((x - y).abs() < 1e-4);
    }
}

proptest! {
    #[test]
    fn layer_norm_moments(values in prop::collection::vec(-1e3f64..1e3, 2..300)) {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let spread = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        prop_assume!(spread > 1e-6);
        let x = FeatureVec::new(values).unwrap();
        let y = layer_norm(&x, &vec![1.0; x.dim()], &vec![0.0; x.dim()], 1e-12).unwrap();
        let m = y.values().iter().sum::<f64>() / n;
        let v = y.values().iter().map(|a| (a - m).powi(2)).sum::<f64>() / n;
        prop_assert!(m.abs() < 1e-12);
        prop_assert!((v - 1.0).abs() < 1e-6);
    }

    #[test]
    fn projected_point_features_are_normalized(seed in any::<u64>()) {
        let params = FusionParams::seeded(dims(), FusionScalars { layer_norm_eps: 1e-12, ..Default::default() }, seed).unwrap();
        let mut rng = common::rng(seed);
        let y = fusion::project_norm(&random(&mut rng, 64, 2.0), fusion::Modality::Point, &params).unwrap();
        let n = y.dim() as f64;
        let m = y.values().iter().sum::<f64>() / n;
        let v = y.values().iter().map(|a| (a - m).powi(2)).sum::<f64>() / n;
        prop_assert!(m.abs() < 1e-12);
        prop_assert!((v - 1.0).abs() < 1e-6);
    }
}
