//! Class-imbalance-aware text classification for hate and offensive content
//! detection.
//!
//! The pipeline loads HASOC-style tweet files, tokenizes them into padded
//! batches, trains a small encoder with a class-weighted cross-entropy loss
//! under AdamW, and selects the epoch with the best validation macro F1.
//!
//! Data-parallel work (per-example forward/backward passes, batch encoding,
//! evaluation) runs on rayon when the default `parallel` feature is enabled;
//! every reduction happens in a fixed serial order, so results are
//! bit-identical with [`Execution::Serial`].

pub mod checkpoint;
pub mod corpus;
pub mod exec;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod optim;
pub mod synth;
pub mod textenc;
pub mod train;

pub use checkpoint::{Checkpoint, CheckpointError};
pub use corpus::{Dataset, Delimiter, LabelScheme, LabeledExample, Task};
pub use exec::Execution;
pub use loss::{ClassWeights, WeightScheme};
pub use metrics::Metrics;
pub use model::{EncoderKind, ModelConfig, ModelParams};
pub use optim::OptimHyper;
pub use train::{evaluate, train, TrainConfig, TrainError, TrainReport};
