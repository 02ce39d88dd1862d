//! Training protocol: seeded split, minibatch AdamW training on the weighted
//! loss, per-epoch validation macro F1 and best-epoch checkpoint selection.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checkpoint::Checkpoint;
use crate::corpus::{self, class_counts, CorpusError, Dataset, SplitMode, Task};
use crate::exec::Execution;
use crate::loss::{batch_loss, compute_class_weights, ClassWeights, LossError, WeightScheme};
use crate::metrics::{Metrics, MetricsError};
use crate::model::{self, init_params, EncoderKind, ModelConfig, ModelError, ModelParams};
use crate::optim::{adamw_step, OptimError, OptimHyper, OptimizerState};
use crate::textenc::{self, build_vocab, encode_batch, select_max_len, tokenize, EncodedBatch, TextEncError};

/// Epoch `e` reshuffles with ChaCha stream `EPOCH_STREAM_BASE + e`.
const EPOCH_STREAM_BASE: u64 = 16;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    TextEnc(#[from] TextEncError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("class {class} has {count} example(s); at least 2 are needed")]
    DegenerateClass { class: String, count: usize },
    #[error("checkpoint is for subtask {checkpoint} but data is for subtask {data}")]
    TaskMismatch { checkpoint: Task, data: Task },
    #[error("cannot evaluate an empty dataset")]
    EmptyDataset,
    #[error("numeric failure at epoch {epoch}, batch {batch}: {detail}")]
    Numeric {
        epoch: usize,
        batch: usize,
        detail: String,
    },
}

/// Encoder shape settings; vocabulary size, class count and init seed are
/// filled in during training.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSettings {
    pub embed_dim: usize,
    pub encoder: EncoderKind,
    pub num_heads: usize,
    pub ffn_dim: usize,
}

impl Default for ModelSettings {
    fn default() -> Self {
        Self {
            embed_dim: 32,
            encoder: EncoderKind::Bag,
            num_heads: 2,
            ffn_dim: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub task: Task,
    pub seed: u64,
    pub train_fraction: f64,
    #[serde(default)]
    pub split: SplitMode,
    pub batch_size: usize,
    pub epochs: usize,
    pub optimizer: OptimHyper,
    pub weight_scheme: WeightScheme,
    pub lowercase: bool,
    pub min_token_freq: usize,
    pub max_len_percentile: f64,
    /// Explicit sequence length; overrides the percentile rule when set.
    pub max_len: Option<usize>,
    pub model: ModelSettings,
    #[serde(skip)]
    pub execution: Execution,
}

impl TrainConfig {
    pub fn new(task: Task) -> Self {
        Self {
            task,
            seed: 42,
            train_fraction: 0.9,
            split: SplitMode::Stratified,
            batch_size: 8,
            epochs: 4,
            optimizer: OptimHyper::default(),
            weight_scheme: WeightScheme::InverseFrequencyNormalized,
            lowercase: true,
            min_token_freq: 2,
            max_len_percentile: 99.0,
            max_len: None,
            model: ModelSettings::default(),
            execution: Execution::default(),
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: String| Err(TrainError::Config(m));
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if self.max_len == Some(0) {
            return bad("max_len must be at least 1".into());
        }
        if !(self.max_len_percentile > 0.0 && self.max_len_percentile <= 100.0) {
            return bad(format!("max_len_percentile {} outside (0, 100]", self.max_len_percentile));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!("train_fraction {} outside (0, 1)", self.train_fraction));
        }
        self.optimizer
            .validate()
            .map_err(|e: OptimError| TrainError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean weighted loss over all training examples seen this epoch.
    pub train_loss: f64,
    pub validation: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    /// Earliest epoch attaining the best validation macro F1 (1-based).
    pub best_epoch: usize,
    pub best_macro_f1: f64,
    pub class_weights: ClassWeights,
    pub max_len: usize,
    pub vocab_size: usize,
    pub train_size: usize,
    pub valid_size: usize,
}

impl TrainReport {
    /// Line-oriented run log.
    pub fn render_log(&self, config: &TrainConfig) -> String {
        let mut out = String::new();
        let o = &config.optimizer;
        let weights: Vec<String> = self.class_weights.weights.iter().map(|w| format!("{w:.6}")).collect();
        let _ = writeln!(
            out,
            "setup task={} train={} valid={} vocab={} max_len={} seed={}",
            config.task, self.train_size, self.valid_size, self.vocab_size, self.max_len, config.seed
        );
        let _ = writeln!(
            out,
            "optimizer adamw lr={} beta1={} beta2={} eps={} weight_decay={}",
            o.lr, o.beta1, o.beta2, o.eps, o.weight_decay
        );
        let _ = writeln!(
            out,
            "class_weights scheme={} weights=[{}]",
            self.class_weights.scheme,
            weights.join(",")
        );
        for e in &self.epochs {
            let _ = writeln!(
                out,
                "epoch={} train_loss={:.6} val_macro_f1={:.6}",
                e.epoch, e.train_loss, e.validation.macro_f1
            );
        }
        let _ = writeln!(out, "best_epoch={} best_macro_f1={:.6}", self.best_epoch, self.best_macro_f1);
        out
    }
}

fn epoch_order(n: usize, seed: u64, epoch: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(EPOCH_STREAM_BASE + epoch as u64);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    order
}

/// Predicted classes for a pre-encoded batch, evaluated in chunks of
/// `chunk` rows.
pub(crate) fn predict_encoded(
    config: &ModelConfig,
    params: &ModelParams,
    encoded: &EncodedBatch,
    chunk: usize,
    exec: Execution,
) -> Result<Vec<usize>, ModelError> {
    let n = encoded.batch_size();
    let chunk = chunk.max(1);
    let starts: Vec<usize> = (0..n).step_by(chunk).collect();
    let parts = exec.try_map_indexed(starts.len(), |c| {
        let rows: Vec<usize> = (starts[c]..(starts[c] + chunk).min(n)).collect();
        let (logits, _) = model::forward_with(config, params, &encoded.select(&rows), Execution::Serial)?;
        model::predict(logits.view())
    })?;
    Ok(parts.into_iter().flatten().collect())
}

/// Runs the full protocol and returns the best-epoch checkpoint.
pub fn train(dataset: &Dataset, config: &TrainConfig) -> Result<(Checkpoint, TrainReport), TrainError> {
    config.validate()?;
    if dataset.task() != config.task {
        return Err(TrainError::Config(format!(
            "dataset is for subtask {} but config.task is {}",
            dataset.task(),
            config.task
        )));
    }
    let scheme = dataset.scheme();
    let counts = class_counts(dataset)?;
    for (c, &n) in counts.as_slice().iter().enumerate() {
        if n < 2 {
            return Err(TrainError::DegenerateClass {
                class: scheme.classes()[c].to_string(),
                count: n,
            });
        }
    }

    let exec = config.execution;
    let (train_set, valid_set) = corpus::split(dataset, config.split, config.train_fraction, config.seed)?;

    let train_tokens: Vec<Vec<String>> = train_set
        .examples()
        .iter()
        .map(|e| tokenize(&e.text, config.lowercase))
        .collect();
    let vocab = build_vocab(&train_tokens, config.min_token_freq);
    let class_weights = compute_class_weights(&class_counts(&train_set)?, config.weight_scheme)?;
    let max_len = match config.max_len {
        Some(l) => l,
        None => {
            let lengths: Vec<usize> = train_tokens.iter().map(|t| t.len().max(1)).collect();
            select_max_len(&lengths, config.max_len_percentile)?
        }
    };

    let model_config = ModelConfig {
        vocab_size: vocab.len(),
        embed_dim: config.model.embed_dim,
        num_classes: scheme.num_classes(),
        encoder: config.model.encoder,
        num_heads: config.model.num_heads,
        ffn_dim: config.model.ffn_dim,
        init_seed: config.seed,
    };
    let mut params = init_params(&model_config)?;
    let mut state = OptimizerState::new(&params);

    let train_enc = encode_batch(train_set.examples(), config.task, &vocab, max_len, config.lowercase, exec)?;
    let valid_enc = encode_batch(valid_set.examples(), config.task, &vocab, max_len, config.lowercase, exec)?;

    let mut records = Vec::with_capacity(config.epochs);
    let mut best: Option<(usize, f64, ModelParams)> = None;
    for epoch in 1..=config.epochs {
        let order = epoch_order(train_enc.batch_size(), config.seed, epoch);
        let mut loss_sum = 0.0;
        for (b, rows) in order.chunks(config.batch_size).enumerate() {
            let numeric = |detail: String| TrainError::Numeric {
                epoch,
                batch: b + 1,
                detail,
            };
            let batch = train_enc.select(rows);
            let (logits, cache) = model::forward_with(&model_config, &params, &batch, exec)?;
            let (loss, dlogits) =
                batch_loss(logits.view(), &batch.labels, &class_weights).map_err(|e| numeric(e.to_string()))?;
            let grads = model::backward_with(&model_config, &params, &cache, dlogits.view(), exec)?;
            adamw_step(&mut params, &grads, &mut state, &config.optimizer).map_err(|e| numeric(e.to_string()))?;
            loss_sum += loss * rows.len() as f64;
        }
        let train_loss = loss_sum / train_enc.batch_size() as f64;

        let pred = predict_encoded(&model_config, &params, &valid_enc, config.batch_size, exec)
            .map_err(|e| TrainError::Numeric {
                epoch,
                batch: 0,
                detail: format!("validation: {e}"),
            })?;
        let validation = Metrics::compute(&valid_enc.labels, &pred, scheme.num_classes())?;
        if best.as_ref().is_none_or(|(_, f1, _)| validation.macro_f1 > *f1) {
            best = Some((epoch, validation.macro_f1, params.clone()));
        }
        records.push(EpochRecord {
            epoch,
            train_loss,
            validation,
        });
    }

    let (best_epoch, best_macro_f1, best_params) = best.expect("at least one epoch");
    let report = TrainReport {
        epochs: records,
        best_epoch,
        best_macro_f1,
        class_weights: class_weights.clone(),
        max_len,
        vocab_size: vocab.len(),
        train_size: train_set.len(),
        valid_size: valid_set.len(),
    };
    let checkpoint = Checkpoint {
        config: config.clone(),
        vocab,
        class_weights,
        max_len,
        model_config,
        params: best_params,
        best_epoch,
        best_macro_f1,
    };
    Ok((checkpoint, report))
}

/// Scores a labeled dataset with the default evaluation batch size.
pub fn evaluate(checkpoint: &Checkpoint, dataset: &Dataset) -> Result<Metrics, TrainError> {
    evaluate_with(checkpoint, dataset, checkpoint.config.batch_size, Execution::default())
}

pub fn evaluate_with(
    checkpoint: &Checkpoint,
    dataset: &Dataset,
    batch_size: usize,
    exec: Execution,
) -> Result<Metrics, TrainError> {
    let task = checkpoint.config.task;
    if dataset.task() != task {
        return Err(TrainError::TaskMismatch {
            checkpoint: task,
            data: dataset.task(),
        });
    }
    if dataset.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let encoded = textenc::encode_batch(
        dataset.examples(),
        task,
        &checkpoint.vocab,
        checkpoint.max_len,
        checkpoint.config.lowercase,
        exec,
    )?;
    let pred = predict_encoded(&checkpoint.model_config, &checkpoint.params, &encoded, batch_size, exec)?;
    Ok(Metrics::compute(&encoded.labels, &pred, dataset.scheme().num_classes())?)
}
