//! Confusion matrix and macro-averaged F1.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("{truth} truth labels but {pred} predictions")]
    LengthMismatch { truth: usize, pred: usize },
    #[error("class id {id} out of range for {num_classes} classes")]
    ClassOutOfRange { id: usize, num_classes: usize },
    #[error("no samples to score")]
    Empty,
    #[error("need at least two classes")]
    TooFewClasses,
}

/// Rows are true classes, columns are predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix(Vec<Vec<usize>>);

impl ConfusionMatrix {
    pub fn from_rows(rows: Vec<Vec<usize>>) -> Self {
        Self(rows)
    }

    pub fn num_classes(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, truth: usize, pred: usize) -> usize {
        self.0[truth][pred]
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.0
    }

    pub fn total(&self) -> usize {
        self.0.iter().flatten().sum()
    }

    /// Number of samples whose true class is `class`.
    pub fn support(&self, class: usize) -> usize {
        self.0[class].iter().sum()
    }
}

pub fn confusion(truth: &[usize], pred: &[usize], num_classes: usize) -> Result<ConfusionMatrix, MetricsError> {
    if truth.len() != pred.len() {
        return Err(MetricsError::LengthMismatch {
            truth: truth.len(),
            pred: pred.len(),
        });
    }
    if truth.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut m = vec![vec![0; num_classes]; num_classes];
    for (&t, &p) in truth.iter().zip(pred) {
        if let Some(&id) = [t, p].iter().find(|&&id| id >= num_classes) {
            return Err(MetricsError::ClassOutOfRange { id, num_classes });
        }
        m[t][p] += 1;
    }
    Ok(ConfusionMatrix(m))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Per-class precision/recall/F1 and their unweighted mean F1. Any 0/0 is 0,
/// and classes with no support still count toward the mean.
pub fn macro_f1(confusion: &ConfusionMatrix) -> Result<(Vec<ClassScores>, f64), MetricsError> {
    let k = confusion.num_classes();
    if k < 2 {
        return Err(MetricsError::TooFewClasses);
    }
    if confusion.total() == 0 {
        return Err(MetricsError::Empty);
    }
    let per_class: Vec<ClassScores> = (0..k)
        .map(|c| {
            let tp = confusion.get(c, c) as f64;
            let predicted: usize = (0..k).map(|r| confusion.get(r, c)).sum();
            let precision = ratio(tp, predicted as f64);
            let recall = ratio(tp, confusion.support(c) as f64);
            ClassScores {
                precision,
                recall,
                f1: ratio(2.0 * precision * recall, precision + recall),
            }
        })
        .collect();
    let macro_f1 = per_class.iter().map(|s| s.f1).sum::<f64>() / k as f64;
    Ok((per_class, macro_f1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub confusion: ConfusionMatrix,
    pub per_class: Vec<ClassScores>,
    pub macro_f1: f64,
}

impl Metrics {
    pub fn compute(truth: &[usize], pred: &[usize], num_classes: usize) -> Result<Self, MetricsError> {
        let confusion = confusion(truth, pred, num_classes)?;
        let (per_class, macro_f1) = macro_f1(&confusion)?;
        Ok(Self {
            confusion,
            per_class,
            macro_f1,
        })
    }
}
