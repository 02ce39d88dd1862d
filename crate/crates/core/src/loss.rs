//! Class-weighted cross-entropy.
//!
//! For logits `z` and true class `y`,
//!
//! ```text
//! loss(z, y) = w[y] * (-z[y] + log(sum_j exp(z[j])))
//! ```
//!
//! where `w` grows as a class gets rarer in the training data, so errors on
//! minority classes cost more. The log-sum-exp is always evaluated with the
//! maximum logit subtracted.

use std::fmt;

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::ClassCounts;

#[derive(Debug, Error, PartialEq)]
pub enum LossError {
    #[error("non-finite logit")]
    NonFinite,
    #[error("class {class} out of range for {num_classes} classes")]
    ClassOutOfRange { class: usize, num_classes: usize },
    #[error("class {0} has zero count; inverse-frequency weights are undefined")]
    ZeroCount(usize),
    #[error("{logits} logit rows but {labels} labels")]
    BatchMismatch { logits: usize, labels: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("weight vector has {weights} entries but logits have {logits}")]
    WidthMismatch { weights: usize, logits: usize },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    Uniform,
    /// `w_c = N / (K * n_c)`. Same ordering as plain `1/n_c`, scaled so the
    /// average per-example weight over the training data is one.
    #[default]
    InverseFrequencyNormalized,
}

impl fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightScheme::Uniform => "uniform",
            WeightScheme::InverseFrequencyNormalized => "inverse_frequency_normalized",
        })
    }
}

/// Positive per-class loss multipliers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub scheme: WeightScheme,
    pub weights: Vec<f64>,
}

impl ClassWeights {
    pub fn uniform(num_classes: usize) -> Self {
        Self {
            scheme: WeightScheme::Uniform,
            weights: vec![1.0; num_classes],
        }
    }

    pub fn num_classes(&self) -> usize {
        self.weights.len()
    }

    pub fn get(&self, class: usize) -> f64 {
        self.weights[class]
    }

    /// All weights multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            scheme: self.scheme,
            weights: self.weights.iter().map(|w| w * factor).collect(),
        }
    }
}

pub fn compute_class_weights(
    counts: &ClassCounts,
    scheme: WeightScheme,
) -> Result<ClassWeights, LossError> {
    let k = counts.num_classes();
    match scheme {
        WeightScheme::Uniform => Ok(ClassWeights::uniform(k)),
        WeightScheme::InverseFrequencyNormalized => {
            let total = counts.total() as f64;
            let weights = counts
                .as_slice()
                .iter()
                .enumerate()
                .map(|(c, &n)| {
                    if n == 0 {
                        Err(LossError::ZeroCount(c))
                    } else {
                        Ok(total / (k as f64 * n as f64))
                    }
                })
                .collect::<Result<_, _>>()?;
            Ok(ClassWeights { scheme, weights })
        }
    }
}

fn check_row(logits: ArrayView1<f64>, class: usize, weights: &ClassWeights) -> Result<(), LossError> {
    let k = logits.len();
    if weights.num_classes() != k {
        return Err(LossError::WidthMismatch {
            weights: weights.num_classes(),
            logits: k,
        });
    }
    if class >= k {
        return Err(LossError::ClassOutOfRange {
            class,
            num_classes: k,
        });
    }
    if logits.iter().any(|z| !z.is_finite()) {
        return Err(LossError::NonFinite);
    }
    Ok(())
}

/// Returns `(max, log(sum_j exp(z_j - max)))`.
fn shifted_lse(logits: ArrayView1<f64>) -> (f64, f64) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|z| (z - max).exp()).sum();
    (max, sum.ln())
}

fn row_loss(logits: ArrayView1<f64>, class: usize, weights: &ClassWeights) -> f64 {
    let (max, lse) = shifted_lse(logits);
    // (max + lse) - z_y, grouped so the large terms cancel first
    weights.get(class) * ((max - logits[class]) + lse)
}

fn row_grad(logits: ArrayView1<f64>, class: usize, weights: &ClassWeights, scale: f64, out: &mut [f64]) {
    let (max, lse) = shifted_lse(logits);
    let w = weights.get(class) * scale;
    for (k, (o, &z)) in out.iter_mut().zip(logits.iter()).enumerate() {
        let p = (z - max - lse).exp();
        *o = w * (p - if k == class { 1.0 } else { 0.0 });
    }
}

pub fn weighted_ce(logits: &[f64], class: usize, weights: &ClassWeights) -> Result<f64, LossError> {
    let view = ArrayView1::from(logits);
    check_row(view, class, weights)?;
    Ok(row_loss(view, class, weights))
}

/// `w[y] * (softmax(z) - onehot(y))`.
pub fn weighted_ce_grad(
    logits: &[f64],
    class: usize,
    weights: &ClassWeights,
) -> Result<Vec<f64>, LossError> {
    let view = ArrayView1::from(logits);
    check_row(view, class, weights)?;
    let mut out = vec![0.0; logits.len()];
    row_grad(view, class, weights, 1.0, &mut out);
    Ok(out)
}

/// Mean weighted cross-entropy over the batch and its gradient with respect
/// to every logit (already divided by the batch size).
pub fn batch_loss(
    logits: ArrayView2<f64>,
    labels: &[usize],
    weights: &ClassWeights,
) -> Result<(f64, Array2<f64>), LossError> {
    let b = logits.nrows();
    if b == 0 {
        return Err(LossError::EmptyBatch);
    }
    if labels.len() != b {
        return Err(LossError::BatchMismatch {
            logits: b,
            labels: labels.len(),
        });
    }
    let scale = 1.0 / b as f64;
    let mut total = 0.0;
    let mut dlogits = Array2::zeros(logits.raw_dim());
    for (i, &y) in labels.iter().enumerate() {
        let row = logits.row(i);
        check_row(row, y, weights)?;
        total += row_loss(row, y, weights);
        let mut out = dlogits.row_mut(i);
        row_grad(
            row,
            y,
            weights,
            scale,
            out.as_slice_mut().expect("fresh array is contiguous"),
        );
    }
    Ok((total * scale, dlogits))
}
