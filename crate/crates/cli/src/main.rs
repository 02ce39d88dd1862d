//! `hasoc`: corpus statistics, training, prediction and evaluation for the
//! HASOC hate-speech subtasks.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hasoc_core::{Delimiter, Task};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "hasoc", version, about = "Imbalance-aware hate-speech classifier")]
struct Cli {
    /// Field separator of input files.
    #[arg(long, global = true, default_value = "tab")]
    delimiter: Delimiter,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print class counts, ratios and inverse-frequency weights.
    Stats {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        task: Task,
    },
    /// Train a classifier and write its checkpoint plus `<output>.log`.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        task: Task,
    },
    /// Label a `tweet_id`,`text` file.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Fail unless the checkpoint was trained for this subtask.
        #[arg(long)]
        task: Option<Task>,
    },
    /// Score a checkpoint on labeled data. The JSON report goes to
    /// `--output`, or `<model>.eval.json` when omitted.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        task: Option<Task>,
    },
    /// Print a config file holding every key at its default value.
    DefaultConfig,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let delim = cli.delimiter;
    match cli.command {
        Command::Stats { data, task } => commands::stats(&data, task, delim),
        Command::Train { data, config, output, task } => commands::train_cmd(&data, &config, &output, task, delim),
        Command::Predict { model, input, output, task } => commands::predict(&model, &input, &output, task, delim),
        Command::Evaluate { model, data, output, task } => {
            commands::evaluate_cmd(&model, &data, output.as_deref(), task, delim)
        }
        Command::DefaultConfig => {
            println!("{}", serde_json::to_string_pretty(&config::default_document()).expect("serializable"));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(error::EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
