use std::path::PathBuf;

use crate::fedcore::PartyId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("matrix is not symmetric positive-definite (pivot {pivot} = {value:e})")]
    NotSpd { pivot: usize, value: f64 },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("invalid hyperparameters: {0}")]
    InvalidHyperParams(String),

    #[error("invalid generator or partition spec: {0}")]
    InvalidSpec(String),

    #[error("expected {expected} client messages, got {actual}")]
    MissingClient { expected: usize, actual: usize },

    #[error("{party} failed in round {round}: {source}")]
    PartyFailure {
        round: u32,
        party: PartyId,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed frame: {0}")]
    MalformedFrame(String),

    #[error("message kind {kind} is not permitted from {sender} under the {protocol} protocol")]
    Disallowed {
        kind: &'static str,
        sender: PartyId,
        protocol: &'static str,
    },

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("sample {index} has an empty sequence")]
    EmptySequence { index: usize },

    #[error("empty batch")]
    EmptyBatch,

    #[error("empty dataset")]
    EmptyDataset,

    #[error("length mismatch: {0} predictions vs {1} labels")]
    LengthMismatch(usize, usize),

    #[error("{}:{line}:{column}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dims(context: &'static str, expected: impl ToString, actual: impl ToString) -> Self {
        Error::DimensionMismatch {
            context,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
