use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use hasoc_core::corpus::{class_counts, load_dataset, load_unlabeled, ClassCounts};
use hasoc_core::loss::compute_class_weights;
use hasoc_core::{evaluate, train, Checkpoint, Delimiter, Execution, LabelScheme, Metrics, Task, WeightScheme};
use serde::Serialize;

use crate::config;
use crate::error::CliError;

type Result<T> = std::result::Result<T, CliError>;

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn append_ext(path: &Path, ext: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(ext);
    PathBuf::from(s)
}

fn trim_decimals(x: f64) -> String {
    let s = format!("{x:.2}");
    s.strip_suffix(".00").map(str::to_string).unwrap_or(s)
}

/// Class counts relative to the smallest class, e.g. `1.86:1`.
pub fn format_ratio(counts: &[usize]) -> Option<String> {
    let min = *counts.iter().min()?;
    if min == 0 {
        return None;
    }
    let parts: Vec<String> = counts.iter().map(|&c| trim_decimals(c as f64 / min as f64)).collect();
    Some(parts.join(":"))
}

pub fn render_stats(scheme: LabelScheme, counts: &ClassCounts) -> String {
    let mut out = String::new();
    let total = counts.total();
    let _ = writeln!(out, "subtask {} examples={total}", scheme.task());
    for (c, name) in scheme.classes().iter().enumerate() {
        let n = counts.get(c);
        let share = if total == 0 { 0.0 } else { 100.0 * n as f64 / total as f64 };
        let _ = writeln!(out, "{name:<5} {n:>6} {share:>6.2}%");
    }
    let names = scheme.classes().join(":");
    match format_ratio(counts.as_slice()) {
        Some(r) => {
            let _ = writeln!(out, "ratio {names} = {r}");
        }
        None => {
            let _ = writeln!(out, "ratio {names} = undefined (empty class)");
        }
    }
    let scheme_name = WeightScheme::InverseFrequencyNormalized;
    match compute_class_weights(counts, scheme_name) {
        Ok(w) => {
            let parts: Vec<String> = scheme
                .classes()
                .iter()
                .zip(&w.weights)
                .map(|(name, w)| format!("{name}={w:.6}"))
                .collect();
            let _ = writeln!(out, "weights {scheme_name} {}", parts.join(" "));
        }
        Err(e) => {
            let _ = writeln!(out, "weights {scheme_name} undefined: {e}");
        }
    }
    out
}

pub fn stats(data: &Path, task: Task, delimiter: Delimiter) -> Result<()> {
    let dataset = load_dataset(data, delimiter, task).map_err(|e| CliError::from(e).context(data.display()))?;
    if dataset.is_empty() {
        return Err(CliError::data(format!("{}: no examples", data.display())));
    }
    let counts = class_counts(&dataset)?;
    print!("{}", render_stats(dataset.scheme(), &counts));
    Ok(())
}

pub fn train_cmd(data: &Path, config_path: &Path, output: &Path, task: Task, delimiter: Delimiter) -> Result<()> {
    let config = config::parse(&read_text(config_path)?, task)
        .map_err(|e| CliError::usage(format!("{}: {e}", config_path.display())))?;
    let dataset = load_dataset(data, delimiter, task).map_err(|e| CliError::from(e).context(data.display()))?;
    let (checkpoint, report) = train(&dataset, &config)?;
    checkpoint.save(output).map_err(|e| CliError::from(e).context(output.display()))?;
    let log = report.render_log(&config);
    write_text(&append_ext(output, ".log"), &log)?;
    print!("{log}");
    Ok(())
}

fn load_checkpoint(model: &Path, task: Option<Task>) -> Result<Checkpoint> {
    let checkpoint = Checkpoint::load(model).map_err(|e| CliError::from(e).context(model.display()))?;
    if let Some(t) = task {
        if t != checkpoint.task() {
            return Err(CliError::data(format!(
                "checkpoint is for subtask {} but subtask {t} was requested",
                checkpoint.task()
            )));
        }
    }
    Ok(checkpoint)
}

pub fn predict(model: &Path, input: &Path, output: &Path, task: Option<Task>, delimiter: Delimiter) -> Result<()> {
    let checkpoint = load_checkpoint(model, task)?;
    let rows = load_unlabeled(input, delimiter).map_err(|e| CliError::from(e).context(input.display()))?;
    let texts: Vec<&str> = rows.iter().map(|(_, t)| t.as_str()).collect();
    let classes = checkpoint.predict_texts(&texts, Execution::default())?;
    let scheme = checkpoint.scheme();
    let mut out = String::new();
    for ((id, _), c) in rows.iter().zip(classes) {
        let label = scheme.name_of(c).expect("prediction within scheme");
        let _ = writeln!(out, "{id}\t{label}");
    }
    write_text(output, &out)
}

#[derive(Debug, Serialize)]
struct ClassReport {
    label: &'static str,
    precision: f64,
    recall: f64,
    f1: f64,
    support: usize,
}

#[derive(Debug, Serialize)]
struct EvalReport {
    task: Task,
    n: usize,
    macro_f1: f64,
    per_class: Vec<ClassReport>,
    confusion: Vec<Vec<usize>>,
}

fn eval_report(scheme: LabelScheme, metrics: &Metrics) -> EvalReport {
    EvalReport {
        task: scheme.task(),
        n: metrics.confusion.total(),
        macro_f1: metrics.macro_f1,
        per_class: scheme
            .classes()
            .iter()
            .enumerate()
            .map(|(c, label)| {
                let s = metrics.per_class[c];
                ClassReport {
                    label,
                    precision: s.precision,
                    recall: s.recall,
                    f1: s.f1,
                    support: metrics.confusion.support(c),
                }
            })
            .collect(),
        confusion: metrics.confusion.rows().to_vec(),
    }
}

pub fn render_metrics(scheme: LabelScheme, metrics: &Metrics) -> String {
    let classes = scheme.classes();
    let mut out = String::new();
    let _ = writeln!(out, "confusion (rows = truth, columns = prediction)");
    let _ = write!(out, "{:<5}", "");
    for name in classes {
        let _ = write!(out, " {name:>6}");
    }
    out.push('\n');
    for (name, row) in classes.iter().zip(metrics.confusion.rows()) {
        let _ = write!(out, "{name:<5}");
        for n in row {
            let _ = write!(out, " {n:>6}");
        }
        out.push('\n');
    }
    let _ = writeln!(out, "{:<5} {:>9} {:>9} {:>9}", "class", "precision", "recall", "f1");
    for (name, s) in classes.iter().zip(&metrics.per_class) {
        let _ = writeln!(out, "{name:<5} {:>9.6} {:>9.6} {:>9.6}", s.precision, s.recall, s.f1);
    }
    let _ = writeln!(out, "macro_f1 {:.6}", metrics.macro_f1);
    out
}

pub fn evaluate_cmd(
    model: &Path,
    data: &Path,
    output: Option<&Path>,
    task: Option<Task>,
    delimiter: Delimiter,
) -> Result<()> {
    let checkpoint = load_checkpoint(model, task)?;
    let dataset =
        load_dataset(data, delimiter, checkpoint.task()).map_err(|e| CliError::from(e).context(data.display()))?;
    let metrics = evaluate(&checkpoint, &dataset)?;
    let scheme = checkpoint.scheme();
    print!("{}", render_metrics(scheme, &metrics));
    let report = serde_json::to_string_pretty(&eval_report(scheme, &metrics)).expect("report serializes");
    let path = output.map(Path::to_path_buf).unwrap_or_else(|| append_ext(model, ".eval.json"));
    write_text(&path, &(report + "\n"))
}
