use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hasoc_core::synth::{generate, SyntheticSpec};
use hasoc_core::{Checkpoint, Dataset};
use serde_json::Value;

fn hasoc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hasoc")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_counts(path: &Path, hof: usize, not: usize) {
    let mut out = String::from("tweet_id\ttext\ttask1\n");
    for i in 0..hof + not {
        let label = if i < hof { "HOF" } else { "NOT" };
        let _ = writeln!(out, "{i}\ttext {i}\t{label}");
    }
    std::fs::write(path, out).unwrap();
}

fn write_dataset(path: &Path, data: &Dataset) {
    let scheme = data.scheme();
    let mut out = String::from("tweet_id\ttext\ttask1\n");
    for e in data.examples() {
        let _ = writeln!(out, "{}\t{}\t{}", e.id, e.text, scheme.name_of(e.label_a.unwrap()).unwrap());
    }
    std::fs::write(path, out).unwrap();
}

fn config_with(edits: &[(&str, Value)]) -> String {
    let out = hasoc(&["default-config"]);
    assert!(out.status.success());
    let mut doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    for (k, v) in edits {
        doc[*k] = v.clone();
    }
    doc.to_string()
}

struct Trained {
    _dir: tempfile::TempDir,
    dir: PathBuf,
    data: PathBuf,
    config: PathBuf,
    model: PathBuf,
}

fn trained(edits: &[(&str, Value)]) -> Trained {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let data = root.join("train.tsv");
    write_dataset(&data, &generate(&SyntheticSpec::separable(120, 4)));
    let config = root.join("config.json");
    let mut all = vec![("lr", Value::from(0.01)), ("embed_dim", Value::from(16))];
    all.extend(edits.iter().cloned());
    std::fs::write(&config, config_with(&all)).unwrap();
    let model = root.join("model.json");
    let out = hasoc(&["train", "--data", p(&data), "--config", p(&config), "--output", p(&model), "--task", "A"]);
    assert!(out.status.success(), "{}", stderr(&out));
    Trained {
        _dir: dir,
        dir: root,
        data,
        config,
        model,
    }
}

#[test]
fn stats_reports_counts_ratio_and_weights() {
    let dir = tempfile::tempdir().unwrap();
    let en = dir.path().join("en.tsv");
    write_counts(&en, 2501, 1342);
    let out = hasoc(&["stats", "--data", p(&en), "--task", "A"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("examples=3843"), "{text}");
    assert!(text.contains("ratio HOF:NOT = 1.86:1"), "{text}");
    assert!(text.contains("HOF=0.768293 NOT=1.431818"), "{text}");

    let hi = dir.path().join("hi.tsv");
    write_counts(&hi, 1433, 3161);
    let text = stdout(&hasoc(&["stats", "--data", p(&hi), "--task", "A"]));
    assert!(text.contains("ratio HOF:NOT = 1:2.21"), "{text}");
}

#[test]
fn stats_on_empty_or_missing_file_fails_with_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.tsv");
    std::fs::write(&empty, "").unwrap();
    let out = hasoc(&["stats", "--data", p(&empty), "--task", "A"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!stderr(&out).is_empty());

    let header_only = dir.path().join("header.tsv");
    std::fs::write(&header_only, "tweet_id\ttext\ttask1\n").unwrap();
    assert_eq!(hasoc(&["stats", "--data", p(&header_only), "--task", "A"]).status.code(), Some(3));

    let missing = dir.path().join("nope.tsv");
    assert_eq!(hasoc(&["stats", "--data", p(&missing), "--task", "A"]).status.code(), Some(3));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(hasoc(&[]).status.code(), Some(2));
    assert_eq!(hasoc(&["stats", "--data", "x", "--task", "C"]).status.code(), Some(2));
    assert_eq!(hasoc(&["stats", "--data", "x", "--task", "A", "--delimiter", "pipe"]).status.code(), Some(2));
}

#[test]
fn missing_config_key_names_key_and_default() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("train.tsv");
    write_counts(&data, 10, 10);
    let mut doc: Value = serde_json::from_str(&config_with(&[])).unwrap();
    doc.as_object_mut().unwrap().remove("min_token_freq");
    let config = dir.path().join("config.json");
    std::fs::write(&config, doc.to_string()).unwrap();
    let model = dir.path().join("model.json");
    let out = hasoc(&["train", "--data", p(&data), "--config", p(&config), "--output", p(&model), "--task", "A"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("min_token_freq") && err.contains("default: 2"), "{err}");
    assert!(!model.exists());
}

#[test]
fn train_writes_checkpoint_and_log_and_is_reproducible() {
    let t = trained(&[("max_len", Value::from(120))]);
    let checkpoint = Checkpoint::load(&t.model).unwrap();
    assert_eq!(checkpoint.max_len, 120);
    let log = std::fs::read_to_string(t.dir.join("model.json.log")).unwrap();
    assert!(log.starts_with("setup task=A"), "{log}");
    assert!(log.contains("epoch=4 train_loss="), "{log}");
    assert!(log.contains("best_epoch="), "{log}");

    let rerun = t.dir.join("rerun.json");
    let out = hasoc(&["train", "--data", p(&t.data), "--config", p(&t.config), "--output", p(&rerun), "--task", "A"]);
    assert!(out.status.success());
    assert_eq!(std::fs::read(&t.model).unwrap(), std::fs::read(&rerun).unwrap());
}

#[test]
fn predict_keeps_order_duplicates_and_empty_texts() {
    let t = trained(&[]);
    let input = t.dir.join("input.tsv");
    std::fs::write(&input, "tweet_id\ttext\nx1\tc0w1 c0w2 c0w3\nx1\tc1w1 c1w2\nx3\t\n").unwrap();
    let output = t.dir.join("pred.tsv");
    let out = hasoc(&["predict", "--model", p(&t.model), "--input", p(&input), "--output", p(&output)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&output).unwrap();
    let rows: Vec<(&str, &str)> = text.lines().map(|l| l.split_once('\t').unwrap()).collect();
    assert_eq!(rows.iter().map(|r| r.0).collect::<Vec<_>>(), ["x1", "x1", "x3"]);
    assert_eq!(rows[0].1, "HOF");
    assert_eq!(rows[1].1, "NOT");
    assert!(["HOF", "NOT"].contains(&rows[2].1));

    let out = hasoc(&["predict", "--model", p(&t.model), "--input", p(&input), "--output", p(&output), "--task", "B"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn evaluate_prints_metrics_and_writes_report() {
    let t = trained(&[]);
    let out = hasoc(&["evaluate", "--model", p(&t.model), "--data", p(&t.data)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("macro_f1 1.000000"), "{}", stdout(&out));

    let report: Value = serde_json::from_str(&std::fs::read_to_string(t.dir.join("model.json.eval.json")).unwrap()).unwrap();
    let mut keys: Vec<&String> = report.as_object().unwrap().keys().collect();
    keys.sort();
    assert_eq!(keys, ["confusion", "macro_f1", "n", "per_class", "task"]);
    assert_eq!(report["n"], 120);
    assert_eq!(report["task"], "A");
    assert_eq!(report["per_class"].as_array().unwrap().len(), 2);
}

#[test]
fn evaluate_always_majority_model_scores_one_third() {
    let t = trained(&[]);
    let mut checkpoint = Checkpoint::load(&t.model).unwrap();
    checkpoint.params.head_w.fill(0.0);
    checkpoint.params.head_b[0] = 1.0;
    checkpoint.params.head_b[1] = 0.0;
    let constant = t.dir.join("constant.json");
    checkpoint.save(&constant).unwrap();

    let data = t.dir.join("two.tsv");
    std::fs::write(&data, "tweet_id\ttext\ttask1\n1\tanything\tHOF\n2\tanything else\tNOT\n").unwrap();
    let report = t.dir.join("report.json");
    let out = hasoc(&["evaluate", "--model", p(&constant), "--data", p(&data), "--output", p(&report)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("macro_f1 0.333333"), "{}", stdout(&out));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(doc["confusion"], serde_json::json!([[1, 0], [1, 0]]));
}

#[test]
fn evaluate_without_label_column_is_schema_error() {
    let t = trained(&[]);
    let data = t.dir.join("unlabeled.tsv");
    std::fs::write(&data, "tweet_id\ttext\n1\thello\n").unwrap();
    let out = hasoc(&["evaluate", "--model", p(&t.model), "--data", p(&data)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("task1"), "{}", stderr(&out));
}

#[test]
fn comma_delimited_input_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    std::fs::write(&data, "tweet_id,text,task1\n1,\"hello, world\",HOF\n2,bye,NOT\n3,again,NOT\n").unwrap();
    let out = hasoc(&["stats", "--data", p(&data), "--task", "A", "--delimiter", "comma"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("ratio HOF:NOT = 1:2"), "{}", stdout(&out));
}
