//! Word-level tweet tokenizer, vocabulary, sequence-length selection and
//! padded batch encoding.

use std::collections::HashMap;

use ndarray::Array2;
use thiserror::Error;

use crate::corpus::{LabeledExample, Task};
use crate::exec::Execution;

pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";
pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;

#[derive(Debug, Error, PartialEq)]
pub enum TextEncError {
    #[error("cannot select a length from an empty list")]
    EmptyLengths,
    #[error("percentile {0} must lie in (0, 100]")]
    InvalidPercentile(f64),
    #[error("max_len must be at least 1")]
    InvalidMaxLen,
    #[error("example `{id}` has no label for subtask {task}")]
    Unlabeled { id: String, task: Task },
    #[error("vocabulary must start with `<pad>`, `<unk>` and contain no duplicates")]
    InvalidVocabulary,
}

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2018}'..='\u{201F}' // curly quotes
                | '\u{2010}'..='\u{2015}' // dashes
                | '\u{2026}' // ellipsis
                | '\u{00A1}' | '\u{00BF}' | '\u{00AB}' | '\u{00BB}'
                | '\u{0964}' | '\u{0965}' // danda, double danda
        )
}

/// Splits on Unicode whitespace, then peels punctuation off both ends of each
/// chunk as single-character tokens. A leading `#` or `@` stays attached when
/// it directly precedes a non-punctuation character.
pub fn tokenize(text: &str, lowercase: bool) -> Vec<String> {
    let text = if lowercase {
        text.to_lowercase()
    } else {
        text.to_string()
    };
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let mut start = 0;
        while start < chars.len() && is_punct(chars[start]) {
            let c = chars[start];
            let attaches = matches!(c, '#' | '@')
                && chars.get(start + 1).is_some_and(|&n| !is_punct(n));
            if attaches {
                break;
            }
            tokens.push(c.to_string());
            start += 1;
        }
        let mut end = chars.len();
        while end > start + 1 && is_punct(chars[end - 1]) {
            end -= 1;
        }
        if start < end {
            tokens.push(chars[start..end].iter().collect());
        }
        tokens.extend(chars[end..].iter().map(|c| c.to_string()));
    }
    tokens
}

/// Token list with `<pad>` at id 0 and `<unk>` at id 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Rebuilds a vocabulary from its serialized token list.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self, TextEncError> {
        if tokens.len() < 2 || tokens[PAD_ID] != PAD_TOKEN || tokens[UNK_ID] != UNK_TOKEN {
            return Err(TextEncError::InvalidVocabulary);
        }
        let index: HashMap<String, usize> = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        if index.len() != tokens.len() {
            return Err(TextEncError::InvalidVocabulary);
        }
        Ok(Self { tokens, index })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }
}

/// Keeps tokens with frequency `>= min_freq`, ordered by descending frequency
/// and then lexicographically.
pub fn build_vocab<S: AsRef<str>>(corpus: &[Vec<S>], min_freq: usize) -> Vocabulary {
    let mut freq: HashMap<&str, usize> = HashMap::new();
    for tokens in corpus {
        for t in tokens {
            *freq.entry(t.as_ref()).or_default() += 1;
        }
    }
    let mut kept: Vec<(&str, usize)> = freq
        .into_iter()
        .filter(|&(t, n)| n >= min_freq.max(1) && t != PAD_TOKEN && t != UNK_TOKEN)
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

    let tokens = [PAD_TOKEN, UNK_TOKEN]
        .into_iter()
        .chain(kept.into_iter().map(|(t, _)| t))
        .map(str::to_string)
        .collect();
    Vocabulary::from_tokens(tokens).expect("reserved slots and unique tokens")
}

/// Nearest-rank percentile: the element at 1-based rank `ceil(p/100 * n)` of
/// the ascending sort.
pub fn select_max_len(lengths: &[usize], percentile: f64) -> Result<usize, TextEncError> {
    if lengths.is_empty() {
        return Err(TextEncError::EmptyLengths);
    }
    if !(percentile > 0.0 && percentile <= 100.0) {
        return Err(TextEncError::InvalidPercentile(percentile));
    }
    let mut sorted = lengths.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    // p*n first keeps integral percentiles exact
    let rank = ((percentile * n as f64) / 100.0).ceil() as usize;
    Ok(sorted[rank.clamp(1, n) - 1].max(1))
}

/// Padded id matrix with mask, lengths and (optionally) labels.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedBatch {
    pub ids: Array2<usize>,
    pub mask: Array2<u8>,
    pub lengths: Vec<usize>,
    /// Empty for unlabeled batches.
    pub labels: Vec<usize>,
}

impl EncodedBatch {
    pub fn batch_size(&self) -> usize {
        self.ids.nrows()
    }

    pub fn max_len(&self) -> usize {
        self.ids.ncols()
    }

    /// Real token ids of row `i`.
    pub fn row_tokens(&self, i: usize) -> Vec<usize> {
        self.ids.row(i).iter().take(self.lengths[i]).copied().collect()
    }

    /// Sub-batch made of the given rows, in the given order.
    pub fn select(&self, rows: &[usize]) -> EncodedBatch {
        EncodedBatch {
            ids: self.ids.select(ndarray::Axis(0), rows),
            mask: self.mask.select(ndarray::Axis(0), rows),
            lengths: rows.iter().map(|&i| self.lengths[i]).collect(),
            labels: if self.labels.is_empty() {
                Vec::new()
            } else {
                rows.iter().map(|&i| self.labels[i]).collect()
            },
        }
    }

    /// Builds a batch from already-mapped id rows, truncating and padding to
    /// `max_len`. Empty rows become a single `<unk>`.
    pub fn from_id_rows(rows: &[Vec<usize>], max_len: usize, labels: Vec<usize>) -> Self {
        let b = rows.len();
        let mut ids = Array2::from_elem((b, max_len), PAD_ID);
        let mut mask = Array2::zeros((b, max_len));
        let mut lengths = Vec::with_capacity(b);
        for (i, row) in rows.iter().enumerate() {
            let kept: &[usize] = if row.is_empty() {
                &[UNK_ID]
            } else {
                &row[..row.len().min(max_len)]
            };
            for (t, &id) in kept.iter().enumerate() {
                ids[[i, t]] = id;
                mask[[i, t]] = 1;
            }
            lengths.push(kept.len());
        }
        Self {
            ids,
            mask,
            lengths,
            labels,
        }
    }
}

/// Tokenizes, truncates to the first `max_len` tokens, then maps to ids.
pub fn encode_ids(text: &str, vocab: &Vocabulary, max_len: usize, lowercase: bool) -> Vec<usize> {
    tokenize(text, lowercase)
        .iter()
        .take(max_len)
        .map(|t| vocab.id(t))
        .collect()
}

/// Encodes unlabeled texts.
pub fn encode_texts<S: AsRef<str> + Sync>(
    texts: &[S],
    vocab: &Vocabulary,
    max_len: usize,
    lowercase: bool,
    exec: Execution,
) -> Result<EncodedBatch, TextEncError> {
    if max_len == 0 {
        return Err(TextEncError::InvalidMaxLen);
    }
    let rows = exec.map_indexed(texts.len(), |i| {
        encode_ids(texts[i].as_ref(), vocab, max_len, lowercase)
    });
    Ok(EncodedBatch::from_id_rows(&rows, max_len, Vec::new()))
}

/// Encodes labeled examples for `task`.
pub fn encode_batch(
    examples: &[LabeledExample],
    task: Task,
    vocab: &Vocabulary,
    max_len: usize,
    lowercase: bool,
    exec: Execution,
) -> Result<EncodedBatch, TextEncError> {
    let labels = examples
        .iter()
        .map(|ex| {
            ex.label(task).ok_or_else(|| TextEncError::Unlabeled {
                id: ex.id.clone(),
                task,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let texts: Vec<&str> = examples.iter().map(|e| e.text.as_str()).collect();
    let mut batch = encode_texts(&texts, vocab, max_len, lowercase, exec)?;
    batch.labels = labels;
    Ok(batch)
}
