//! Test-only oracles. Nothing here calls into the implementation paths it is
//! used to check, apart from the forward pass and loss being differentiated.
#![allow(dead_code)]

use hasoc_core::loss::{batch_loss, ClassWeights, WeightScheme};
use hasoc_core::model::{self, init_params, EncoderKind, ModelConfig, ModelParams, Parameters};
use hasoc_core::textenc::EncodedBatch;
use hasoc_core::Execution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct GradCase {
    pub config: ModelConfig,
    pub params: ModelParams,
    pub batch: EncodedBatch,
    pub weights: ClassWeights,
}

/// Random small configuration: V <= 20, D <= 8, B <= 4, L <= 6.
pub fn random_case(seed: u64, encoder: EncoderKind) -> GradCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let num_heads = rng.random_range(1..=2);
    let embed_dim = match encoder {
        EncoderKind::Bag => rng.random_range(1..=8),
        EncoderKind::Attention => num_heads * rng.random_range(1..=8 / num_heads),
    };
    let config = ModelConfig {
        vocab_size: rng.random_range(3..=20),
        embed_dim,
        num_classes: if rng.random_bool(0.5) { 2 } else { 4 },
        encoder,
        num_heads,
        ffn_dim: rng.random_range(1..=8),
        init_seed: seed,
    };
    let mut params = init_params(&config).unwrap();
    // non-zero biases so their gradients are exercised away from the origin
    for t in params.tensors_mut() {
        if t.name.ends_with(".b1") || t.name.ends_with(".b2") || t.name == "head.b" {
            for v in t.data.iter_mut() {
                *v = rng.random_range(-0.5..0.5);
            }
        }
    }
    let b = rng.random_range(1..=4);
    let max_len = rng.random_range(1..=6);
    let rows: Vec<Vec<usize>> = (0..b)
        .map(|_| {
            let len = rng.random_range(1..=max_len);
            (0..len).map(|_| rng.random_range(1..config.vocab_size)).collect()
        })
        .collect();
    let labels = (0..b).map(|_| rng.random_range(0..config.num_classes)).collect();
    let batch = EncodedBatch::from_id_rows(&rows, max_len, labels);
    let weights = ClassWeights {
        scheme: WeightScheme::InverseFrequencyNormalized,
        weights: (0..config.num_classes).map(|_| rng.random_range(0.2..3.0)).collect(),
    };
    GradCase { config, params, batch, weights }
}

fn loss_at(case: &GradCase, params: &ModelParams) -> f64 {
    let (logits, _) = model::forward_with(&case.config, params, &case.batch, Execution::Serial).unwrap();
    batch_loss(logits.view(), &case.batch.labels, &case.weights).unwrap().0
}

/// Largest elementwise relative error between the analytic gradient and
/// central differences, with denominator `max(|a|, |g|, 1e-8)`.
/// Returns `(max_rel_err, entries_checked)`.
pub fn max_relative_error(case: &GradCase, step: f64) -> (f64, usize) {
    let (logits, cache) = model::forward_with(&case.config, &case.params, &case.batch, Execution::Serial).unwrap();
    let (_, dlogits) = batch_loss(logits.view(), &case.batch.labels, &case.weights).unwrap();
    let grads = model::backward(&case.config, &case.params, &cache, dlogits.view()).unwrap();
    let analytic: Vec<Vec<f64>> = grads.tensors().iter().map(|t| t.data.to_vec()).collect();

    let mut worst = 0.0f64;
    let mut checked = 0;
    let n_tensors = analytic.len();
    for ti in 0..n_tensors {
        for j in 0..analytic[ti].len() {
            let mut plus = case.params.clone();
            let mut minus = case.params.clone();
            plus.tensors_mut()[ti].data[j] += step;
            minus.tensors_mut()[ti].data[j] -= step;
            let name = case.params.tensors()[ti].name;
            let d = case.config.embed_dim;
            // the PAD row is frozen: its gradient is defined as zero
            let numeric = if name == "embedding" && j < d {
                0.0
            } else {
                (loss_at(case, &plus) - loss_at(case, &minus)) / (2.0 * step)
            };
            let a = analytic[ti][j];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            worst = worst.max(rel);
            checked += 1;
        }
    }
    (worst, checked)
}
