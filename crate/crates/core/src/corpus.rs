//! HASOC-format labeled data: label schemes, loading, class statistics and
//! seeded train/validation splits.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// ChaCha stream reserved for dataset splitting.
pub(crate) const SPLIT_STREAM: u64 = 1;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("row {row}: file is not valid UTF-8")]
    Encoding { row: usize },
    #[error("malformed delimited data: {0}")]
    Malformed(String),
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("row {row}: unknown {column} label `{value}`")]
    UnknownLabel {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}: empty text")]
    EmptyText { row: usize },
    #[error("row {row}: task1 label `{label_a}` conflicts with task2 label `{label_b}`")]
    LabelConflict {
        row: usize,
        label_a: String,
        label_b: String,
    },
    #[error("duplicate tweet_id `{0}`")]
    DuplicateId(String),
    #[error("example `{id}` has no label for subtask {task}")]
    Unlabeled { id: String, task: Task },
    #[error("label id {label} out of range for subtask {task}")]
    LabelOutOfRange { label: usize, task: Task },
    #[error("train fraction {0} must lie strictly between 0 and 1")]
    InvalidFraction(f64),
    #[error("class {0} has no examples")]
    EmptyClass(String),
}

/// HASOC subtask: A is binary (HOF/NOT), B is fine-grained (HATE/OFFN/PRFN/NONE).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Task {
    A,
    B,
}

impl Task {
    /// Name of the label column in HASOC files.
    pub fn column(self) -> &'static str {
        match self {
            Task::A => "task1",
            Task::B => "task2",
        }
    }

    pub fn scheme(self) -> LabelScheme {
        LabelScheme::new(self)
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Task::A => f.write_str("A"),
            Task::B => f.write_str("B"),
        }
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "A" | "a" => Ok(Task::A),
            "B" | "b" => Ok(Task::B),
            other => Err(format!("unknown task `{other}` (expected A or B)")),
        }
    }
}

const TASK_A_CLASSES: [&str; 2] = ["HOF", "NOT"];
const TASK_B_CLASSES: [&str; 4] = ["HATE", "OFFN", "PRFN", "NONE"];

/// Ordered class list of a subtask. The position of a name is its class id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelScheme {
    task: Task,
}

impl LabelScheme {
    pub fn new(task: Task) -> Self {
        Self { task }
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn classes(&self) -> &'static [&'static str] {
        match self.task {
            Task::A => &TASK_A_CLASSES,
            Task::B => &TASK_B_CLASSES,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.classes().len()
    }

    /// Case-sensitive lookup of a label string.
    pub fn id_of(&self, label: &str) -> Option<usize> {
        self.classes().iter().position(|c| *c == label)
    }

    pub fn name_of(&self, id: usize) -> Option<&'static str> {
        self.classes().get(id).copied()
    }

    /// Class id of the "nothing objectionable" label (NOT / NONE).
    pub fn negative_class(&self) -> usize {
        self.num_classes() - 1
    }
}

/// One tweet with its subtask labels (class ids into the respective schemes).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub id: String,
    pub text: String,
    pub label_a: Option<usize>,
    pub label_b: Option<usize>,
}

impl LabeledExample {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            label_a: None,
            label_b: None,
        }
    }

    pub fn with_label(mut self, task: Task, class: usize) -> Self {
        match task {
            Task::A => self.label_a = Some(class),
            Task::B => self.label_b = Some(class),
        }
        self
    }

    pub fn label(&self, task: Task) -> Option<usize> {
        match task {
            Task::A => self.label_a,
            Task::B => self.label_b,
        }
    }
}

/// Immutable collection of examples for one subtask.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    scheme: LabelScheme,
    examples: Vec<LabeledExample>,
    language: String,
}

impl Dataset {
    /// Builds a dataset, checking id uniqueness and label ranges.
    pub fn new(
        task: Task,
        examples: Vec<LabeledExample>,
        language: impl Into<String>,
    ) -> Result<Self, CorpusError> {
        let mut seen = HashSet::with_capacity(examples.len());
        for ex in &examples {
            if !seen.insert(ex.id.as_str()) {
                return Err(CorpusError::DuplicateId(ex.id.clone()));
            }
            for (t, label) in [(Task::A, ex.label_a), (Task::B, ex.label_b)] {
                if let Some(label) = label {
                    if label >= t.scheme().num_classes() {
                        return Err(CorpusError::LabelOutOfRange { label, task: t });
                    }
                }
            }
        }
        Ok(Self {
            scheme: task.scheme(),
            examples,
            language: language.into(),
        })
    }

    pub fn scheme(&self) -> LabelScheme {
        self.scheme
    }

    pub fn task(&self) -> Task {
        self.scheme.task()
    }

    pub fn examples(&self) -> &[LabeledExample] {
        &self.examples
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Labels for the dataset's own task, in example order.
    pub fn labels(&self) -> Result<Vec<usize>, CorpusError> {
        let task = self.task();
        self.examples
            .iter()
            .map(|ex| {
                ex.label(task).ok_or_else(|| CorpusError::Unlabeled {
                    id: ex.id.clone(),
                    task,
                })
            })
            .collect()
    }

    fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            scheme: self.scheme,
            examples: indices.iter().map(|&i| self.examples[i].clone()).collect(),
            language: self.language.clone(),
        }
    }
}

/// Field delimiter of an input file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Delimiter {
    Tab,
    Comma,
}

impl Delimiter {
    pub fn byte(self) -> u8 {
        match self {
            Delimiter::Tab => b'\t',
            Delimiter::Comma => b',',
        }
    }
}

impl FromStr for Delimiter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tab" | "\t" => Ok(Delimiter::Tab),
            "comma" | "," => Ok(Delimiter::Comma),
            other => Err(format!("unknown delimiter `{other}` (expected tab or comma)")),
        }
    }
}

/// Column positions resolved from a header row.
struct Columns {
    id: usize,
    text: usize,
    task1: Option<usize>,
    task2: Option<usize>,
}

/// Reads a header + rows file into raw records. Row numbers are 1-based with
/// the header at row 1.
fn read_records(
    path: &Path,
    delimiter: Delimiter,
) -> Result<(Columns, Vec<(usize, csv::ByteRecord)>), CorpusError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter.byte())
        .has_headers(false)
        .flexible(false)
        .from_path(path)
        .map_err(map_csv_error)?;

    let mut records = reader.byte_records();
    let header = match records.next() {
        Some(r) => r.map_err(map_csv_error)?,
        None => return Err(CorpusError::MissingColumn("tweet_id".into())),
    };
    let names = header
        .iter()
        .map(|f| std::str::from_utf8(f).map(|s| s.trim().trim_start_matches('\u{feff}')))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| CorpusError::Encoding { row: 1 })?;
    let find = |name: &str| names.iter().position(|n| *n == name);
    let columns = Columns {
        id: find("tweet_id").ok_or_else(|| CorpusError::MissingColumn("tweet_id".into()))?,
        text: find("text").ok_or_else(|| CorpusError::MissingColumn("text".into()))?,
        task1: find("task1"),
        task2: find("task2"),
    };

    let mut rows = Vec::new();
    for (i, rec) in records.enumerate() {
        rows.push((i + 2, rec.map_err(map_csv_error)?));
    }
    Ok((columns, rows))
}

fn map_csv_error(err: csv::Error) -> CorpusError {
    if err.is_io_error() {
        match err.into_kind() {
            csv::ErrorKind::Io(io) => CorpusError::Io(io),
            other => CorpusError::Malformed(format!("{other:?}")),
        }
    } else {
        CorpusError::Malformed(err.to_string())
    }
}

fn field(record: &csv::ByteRecord, idx: usize, row: usize) -> Result<&str, CorpusError> {
    let raw = record.get(idx).unwrap_or_default();
    std::str::from_utf8(raw).map_err(|_| CorpusError::Encoding { row })
}

fn parse_label(
    record: &csv::ByteRecord,
    col: Option<usize>,
    task: Task,
    row: usize,
) -> Result<Option<usize>, CorpusError> {
    let Some(col) = col else { return Ok(None) };
    let value = field(record, col, row)?.trim();
    if value.is_empty() {
        return Ok(None);
    }
    task.scheme()
        .id_of(value)
        .map(Some)
        .ok_or_else(|| CorpusError::UnknownLabel {
            row,
            column: task.column().to_string(),
            value: value.to_string(),
        })
}

/// Loads a labeled HASOC file. The task's label column must be present; the
/// other subtask's column is parsed when it exists so the NOT/NONE coupling
/// can be checked. Any `ID` column is ignored.
pub fn load_dataset(
    path: impl AsRef<Path>,
    delimiter: Delimiter,
    task: Task,
) -> Result<Dataset, CorpusError> {
    let (cols, rows) = read_records(path.as_ref(), delimiter)?;
    let required = match task {
        Task::A => cols.task1,
        Task::B => cols.task2,
    };
    if required.is_none() {
        return Err(CorpusError::MissingColumn(task.column().into()));
    }

    let mut examples = Vec::with_capacity(rows.len());
    for (row, rec) in &rows {
        let row = *row;
        let id = field(rec, cols.id, row)?.trim().to_string();
        let text = field(rec, cols.text, row)?.to_string();
        if text.trim().is_empty() {
            return Err(CorpusError::EmptyText { row });
        }
        let label_a = parse_label(rec, cols.task1, Task::A, row)?;
        let label_b = parse_label(rec, cols.task2, Task::B, row)?;
        if let (Some(a), Some(b)) = (label_a, label_b) {
            let a_neg = a == Task::A.scheme().negative_class();
            let b_neg = b == Task::B.scheme().negative_class();
            if a_neg != b_neg {
                return Err(CorpusError::LabelConflict {
                    row,
                    label_a: TASK_A_CLASSES[a].into(),
                    label_b: TASK_B_CLASSES[b].into(),
                });
            }
        }
        examples.push(LabeledExample {
            id,
            text,
            label_a,
            label_b,
        });
    }
    Dataset::new(task, examples, "und")
}

/// Loads a label-free `tweet_id`,`text` file for prediction. Empty texts and
/// repeated ids are accepted.
pub fn load_unlabeled(
    path: impl AsRef<Path>,
    delimiter: Delimiter,
) -> Result<Vec<(String, String)>, CorpusError> {
    let (cols, rows) = read_records(path.as_ref(), delimiter)?;
    rows.iter()
        .map(|(row, rec)| {
            Ok((
                field(rec, cols.id, *row)?.trim().to_string(),
                field(rec, cols.text, *row)?.to_string(),
            ))
        })
        .collect()
}

/// Per-class example counts, indexed by class id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts(Vec<usize>);

impl ClassCounts {
    pub fn new(counts: Vec<usize>) -> Self {
        Self(counts)
    }

    pub fn get(&self, class: usize) -> usize {
        self.0.get(class).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn num_classes(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

pub fn class_counts(dataset: &Dataset) -> Result<ClassCounts, CorpusError> {
    let mut counts = vec![0; dataset.scheme().num_classes()];
    for label in dataset.labels()? {
        counts[label] += 1;
    }
    Ok(ClassCounts(counts))
}

/// How the train/validation partition is drawn.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    #[default]
    Stratified,
    Uniform,
}

/// Number of training examples taken from a group of `n`.
///
/// Groups of two or more always keep at least one example on each side.
fn train_take(n: usize, fraction: f64) -> usize {
    let take = (fraction * n as f64).round() as usize;
    if n >= 2 {
        take.clamp(1, n - 1)
    } else {
        take.min(n)
    }
}

fn split_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SPLIT_STREAM);
    rng
}

fn check_fraction(fraction: f64) -> Result<(), CorpusError> {
    if fraction > 0.0 && fraction < 1.0 {
        Ok(())
    } else {
        Err(CorpusError::InvalidFraction(fraction))
    }
}

/// Per-class seeded shuffle followed by a prefix take of
/// `round(fraction * n_c)` examples. Both parts keep input order.
pub fn stratified_split(
    dataset: &Dataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset), CorpusError> {
    check_fraction(train_fraction)?;
    let labels = dataset.labels()?;
    let scheme = dataset.scheme();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); scheme.num_classes()];
    for (i, &label) in labels.iter().enumerate() {
        by_class[label].push(i);
    }
    if let Some(c) = by_class.iter().position(Vec::is_empty) {
        return Err(CorpusError::EmptyClass(scheme.classes()[c].into()));
    }

    let mut rng = split_rng(seed);
    let mut in_train = vec![false; dataset.len()];
    for members in &mut by_class {
        members.shuffle(&mut rng);
        for &i in &members[..train_take(members.len(), train_fraction)] {
            in_train[i] = true;
        }
    }
    Ok(partition(dataset, &in_train))
}

/// Seeded shuffle of the whole dataset followed by a prefix take.
pub fn uniform_split(
    dataset: &Dataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset), CorpusError> {
    check_fraction(train_fraction)?;
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(&mut split_rng(seed));
    let mut in_train = vec![false; dataset.len()];
    for &i in &order[..train_take(order.len(), train_fraction)] {
        in_train[i] = true;
    }
    Ok(partition(dataset, &in_train))
}

pub fn split(
    dataset: &Dataset,
    mode: SplitMode,
    train_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset), CorpusError> {
    match mode {
        SplitMode::Stratified => stratified_split(dataset, train_fraction, seed),
        SplitMode::Uniform => uniform_split(dataset, train_fraction, seed),
    }
}

fn partition(dataset: &Dataset, in_train: &[bool]) -> (Dataset, Dataset) {
    let (train, valid): (Vec<usize>, Vec<usize>) =
        (0..dataset.len()).partition(|&i| in_train[i]);
    (dataset.subset(&train), dataset.subset(&valid))
}
