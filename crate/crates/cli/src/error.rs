//! Maps library errors onto process exit codes.

use std::fmt;

use hasoc_core::corpus::CorpusError;
use hasoc_core::loss::LossError;
use hasoc_core::model::ModelError;
use hasoc_core::{CheckpointError, TrainError};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_NUMERIC: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self { code: EXIT_DATA, message: message.into() }
    }

    pub fn context(self, what: impl fmt::Display) -> Self {
        Self { code: self.code, message: format!("{what}: {}", self.message) }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn model_code(e: &ModelError) -> u8 {
    match e {
        ModelError::Config(_) => EXIT_USAGE,
        ModelError::NonFinite => EXIT_NUMERIC,
        _ => EXIT_DATA,
    }
}

fn loss_code(e: &LossError) -> u8 {
    match e {
        LossError::NonFinite => EXIT_NUMERIC,
        _ => EXIT_DATA,
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        let code = match e {
            CorpusError::InvalidFraction(_) => EXIT_USAGE,
            _ => EXIT_DATA,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        Self { code: model_code(&e), message: e.to_string() }
    }
}

impl From<LossError> for CliError {
    fn from(e: LossError) -> Self {
        Self { code: loss_code(&e), message: e.to_string() }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        let code = match &e {
            TrainError::Corpus(CorpusError::InvalidFraction(_)) => EXIT_USAGE,
            TrainError::Model(m) => model_code(m),
            TrainError::Loss(l) => loss_code(l),
            TrainError::Config(_) => EXIT_USAGE,
            TrainError::Numeric { .. } => EXIT_NUMERIC,
            _ => EXIT_DATA,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<CheckpointError> for CliError {
    fn from(e: CheckpointError) -> Self {
        let code = match e {
            CheckpointError::NonFinite => EXIT_NUMERIC,
            _ => EXIT_DATA,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<String> for CliError {
    fn from(message: String) -> Self {
        Self::data(message)
    }
}
