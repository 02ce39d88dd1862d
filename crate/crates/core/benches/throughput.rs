//! Serial vs parallel execution of the per-example work: a forward/backward
//! pass over one batch, evaluation over a corpus, and a short training run.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hasoc_core::loss::batch_loss;
use hasoc_core::model::{backward_with, forward_with, init_params};
use hasoc_core::synth::{generate, SyntheticSpec};
use hasoc_core::textenc::{build_vocab, encode_batch, tokenize};
use hasoc_core::train::evaluate_with;
use hasoc_core::{train, EncoderKind, Execution, ModelConfig, Task, TrainConfig};

const MODES: [(&str, Execution); 2] = [("serial", Execution::Serial), ("parallel", Execution::Parallel)];

fn corpus(n: usize) -> hasoc_core::Dataset {
    generate(&SyntheticSpec {
        signal_rate: 0.5,
        class_vocab: 200,
        shared_vocab: 400,
        label_noise: 0.1,
        tokens_per_example: 32,
        ..SyntheticSpec::separable(n, 1)
    })
}

fn forward_backward(c: &mut Criterion) {
    let data = corpus(64);
    let tokens: Vec<Vec<String>> = data.examples().iter().map(|e| tokenize(&e.text, true)).collect();
    let vocab = build_vocab(&tokens, 1);
    let mut group = c.benchmark_group("forward_backward_batch64");
    for encoder in [EncoderKind::Bag, EncoderKind::Attention] {
        let config = ModelConfig {
            vocab_size: vocab.len(),
            embed_dim: 64,
            num_classes: 2,
            encoder,
            num_heads: 4,
            ffn_dim: 128,
            init_seed: 0,
        };
        let params = init_params(&config).unwrap();
        let batch = encode_batch(data.examples(), Task::A, &vocab, 32, true, Execution::Serial).unwrap();
        let weights = hasoc_core::ClassWeights::uniform(2);
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(format!("{encoder:?}"), name), &exec, |b, &exec| {
                b.iter(|| {
                    let (logits, cache) = forward_with(&config, &params, &batch, exec).unwrap();
                    let (_, dlogits) = batch_loss(logits.view(), &batch.labels, &weights).unwrap();
                    black_box(backward_with(&config, &params, &cache, dlogits.view(), exec).unwrap())
                })
            });
        }
    }
    group.finish();
}

fn training_and_evaluation(c: &mut Criterion) {
    let data = corpus(400);
    let mut config = TrainConfig::new(Task::A);
    config.epochs = 1;
    config.model.encoder = EncoderKind::Attention;
    config.model.embed_dim = 32;
    let (checkpoint, _) = train(&data, &config).unwrap();

    let mut group = c.benchmark_group("pipeline_400_examples");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new("evaluate", name), &exec, |b, &exec| {
            b.iter(|| black_box(evaluate_with(&checkpoint, &data, 64, exec).unwrap()))
        });
        let mut cfg = config.clone();
        cfg.execution = exec;
        group.bench_with_input(BenchmarkId::new("train_one_epoch", name), &cfg, |b, cfg| {
            b.iter(|| black_box(train(&data, cfg).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, forward_backward, training_and_evaluation);
criterion_main!(benches);
