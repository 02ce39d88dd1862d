//! JSON checkpoint: everything needed to re-create the trained classifier.
//!
//! Tensors are stored as nested row-major arrays next to an explicit `shape`.
//! Floats use the shortest representation that parses back to the same
//! `f64`, so a save/load cycle is lossless.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{LabelScheme, Task};
use crate::exec::Execution;
use crate::loss::ClassWeights;
use crate::model::{ModelConfig, ModelError, ModelParams, Parameters};
use crate::textenc::{encode_texts, TextEncError, Vocabulary};
use crate::train::{predict_encoded, TrainConfig};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed checkpoint: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported checkpoint format_version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("inconsistent checkpoint: {0}")]
    Inconsistent(String),
    #[error("parameters contain non-finite values")]
    NonFinite,
}

/// Trained classifier plus the preprocessing state it was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: TrainConfig,
    pub vocab: Vocabulary,
    pub class_weights: ClassWeights,
    pub max_len: usize,
    pub model_config: ModelConfig,
    pub params: ModelParams,
    pub best_epoch: usize,
    pub best_macro_f1: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct SchemeDoc {
    task: Task,
    classes: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum TensorValues {
    Vector(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorDoc {
    name: String,
    shape: Vec<usize>,
    values: TensorValues,
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointDoc {
    format_version: u32,
    config: TrainConfig,
    label_scheme: SchemeDoc,
    vocabulary: Vec<String>,
    class_weights: ClassWeights,
    max_len: usize,
    model: ModelConfig,
    tensors: Vec<TensorDoc>,
    best_epoch: usize,
    best_macro_f1: f64,
}

fn inconsistent(msg: impl Into<String>) -> CheckpointError {
    CheckpointError::Inconsistent(msg.into())
}

impl Checkpoint {
    pub fn task(&self) -> Task {
        self.config.task
    }

    pub fn scheme(&self) -> LabelScheme {
        self.config.task.scheme()
    }

    pub fn to_json(&self) -> Result<String, CheckpointError> {
        if !self.params.is_finite() {
            return Err(CheckpointError::NonFinite);
        }
        let tensors = self
            .params
            .tensors()
            .into_iter()
            .map(|t| {
                let values = match t.shape.as_slice() {
                    [_, cols] => TensorValues::Matrix(t.data.chunks(*cols).map(<[f64]>::to_vec).collect()),
                    _ => TensorValues::Vector(t.data.to_vec()),
                };
                TensorDoc {
                    name: t.name.to_string(),
                    shape: t.shape,
                    values,
                }
            })
            .collect();
        let doc = CheckpointDoc {
            format_version: FORMAT_VERSION,
            config: self.config.clone(),
            label_scheme: SchemeDoc {
                task: self.task(),
                classes: self.scheme().classes().iter().map(|s| s.to_string()).collect(),
            },
            vocabulary: self.vocab.tokens().to_vec(),
            class_weights: self.class_weights.clone(),
            max_len: self.max_len,
            model: self.model_config.clone(),
            tensors,
            best_epoch: self.best_epoch,
            best_macro_f1: self.best_macro_f1,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self, CheckpointError> {
        let version: serde_json::Value = serde_json::from_str(text)?;
        let found = version
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| inconsistent("missing format_version"))? as u32;
        if found != FORMAT_VERSION {
            return Err(CheckpointError::Version {
                found,
                expected: FORMAT_VERSION,
            });
        }
        let doc: CheckpointDoc = serde_json::from_value(version)?;

        let scheme = doc.label_scheme.task.scheme();
        if doc.config.task != doc.label_scheme.task || doc.label_scheme.classes != scheme.classes() {
            return Err(inconsistent("label scheme does not match the configured task"));
        }
        let vocab = Vocabulary::from_tokens(doc.vocabulary).map_err(|e: TextEncError| inconsistent(e.to_string()))?;
        doc.model.validate().map_err(|e| inconsistent(e.to_string()))?;
        if doc.model.vocab_size != vocab.len() {
            return Err(inconsistent(format!(
                "vocabulary has {} tokens but the model expects {}",
                vocab.len(),
                doc.model.vocab_size
            )));
        }
        if doc.model.num_classes != scheme.num_classes() || doc.class_weights.num_classes() != scheme.num_classes() {
            return Err(inconsistent("class count disagrees with the label scheme"));
        }
        if doc.max_len == 0 {
            return Err(inconsistent("max_len must be at least 1"));
        }

        let mut params = ModelParams::zeros(&doc.model);
        {
            let targets = params.tensors_mut();
            if targets.len() != doc.tensors.len() {
                return Err(inconsistent(format!(
                    "expected {} tensors, found {}",
                    targets.len(),
                    doc.tensors.len()
                )));
            }
            for (target, stored) in targets.into_iter().zip(&doc.tensors) {
                if target.name != stored.name {
                    return Err(inconsistent(format!("expected tensor `{}`, found `{}`", target.name, stored.name)));
                }
                let flat: Vec<f64> = match (&stored.values, stored.shape.as_slice()) {
                    (TensorValues::Vector(v), [n]) if v.len() == *n => v.clone(),
                    (TensorValues::Matrix(rows), [r, c]) if rows.len() == *r && rows.iter().all(|row| row.len() == *c) => {
                        rows.concat()
                    }
                    _ => return Err(inconsistent(format!("tensor `{}` values do not match its shape", stored.name))),
                };
                if flat.len() != target.data.len() {
                    return Err(inconsistent(format!("tensor `{}` has the wrong shape", stored.name)));
                }
                target.data.copy_from_slice(&flat);
            }
        }
        if !params.is_finite() {
            return Err(CheckpointError::NonFinite);
        }

        Ok(Checkpoint {
            config: doc.config,
            vocab,
            class_weights: doc.class_weights,
            max_len: doc.max_len,
            model_config: doc.model,
            params,
            best_epoch: doc.best_epoch,
            best_macro_f1: doc.best_macro_f1,
        })
    }

    /// Writes to a temporary file in the target directory, then renames it
    /// over `path`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CheckpointError> {
        let path = path.as_ref();
        let json = self.to_json()?;
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(json.as_bytes())?;
        tmp.as_file().sync_all()?;
        tmp.persist(path).map_err(|e| CheckpointError::Io(e.error))?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CheckpointError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Class ids for raw texts, using the training-time preprocessing.
    pub fn predict_texts<S: AsRef<str> + Sync>(&self, texts: &[S], exec: Execution) -> Result<Vec<usize>, ModelError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let encoded = encode_texts(texts, &self.vocab, self.max_len, self.config.lowercase, exec)
            .map_err(|e| ModelError::Shape(e.to_string()))?;
        predict_encoded(&self.model_config, &self.params, &encoded, self.config.batch_size, exec)
    }
}
