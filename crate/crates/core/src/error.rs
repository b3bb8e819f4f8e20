use std::path::PathBuf;

use thiserror::Error;

use crate::graph::NodeId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown node {0}")]
    UnknownNode(String),

    #[error("unknown seed category {0:?}")]
    UnknownSeed(String),

    #[error("partition {0} is empty")]
    EmptyPartition(String),

    #[error("node {node} ({name}) has an out-edge without a position rank")]
    MissingPosition { node: NodeId, name: String },

    #[error("negative click count {count} on edge {src} -> {dst}")]
    NegativeClicks { src: String, dst: String, count: f64 },

    #[error("step {step} out of range 1..={max}")]
    StepOutOfRange { step: usize, max: usize },

    #[error("target sets overlap at node {0}")]
    OverlappingTargets(NodeId),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },
}

impl Error {
    pub(crate) fn parse(source_name: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.to_string(),
            line,
            message: message.into(),
        }
    }

    /// Attaches the file a nested error came from.
    pub fn in_file(self, path: impl Into<PathBuf>) -> Self {
        Error::File {
            path: path.into(),
            source: Box::new(self),
        }
    }

    /// True for errors caused by caller-supplied parameters rather than data.
    pub fn is_config(&self) -> bool {
        match self {
            Error::InvalidConfig(_) | Error::StepOutOfRange { .. } => true,
            Error::File { source, .. } => source.is_config(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
