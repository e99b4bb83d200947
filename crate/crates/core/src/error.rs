use thiserror::Error;

/// Errors raised by graph construction, inference and the algorithms built on them.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("node index {index} out of range (graph has {len} nodes)")]
    NodeOutOfRange { index: usize, len: usize },

    #[error("self-loop on node {0}")]
    SelfLoop(usize),

    #[error("directed part of the graph contains a cycle")]
    Cycle,

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("hidden node {node} violates the semi-Markov condition: {reason}")]
    SemiMarkovViolation { node: usize, reason: String },

    #[error("operation requires a projected graph (no hidden nodes)")]
    NotProjected,

    #[error("node {0} is not intervenable")]
    NotIntervenable(usize),

    #[error("graph is not identifiable: bidirected path from {treatment} to its child {child}")]
    NotIdentifiable { treatment: usize, child: usize },

    #[error("invalid conditional probability table for node {node}: {reason}")]
    InvalidCpt { node: usize, reason: String },

    #[error("exact enumeration needs {needed} variables, limit is {limit}")]
    EnumerationInfeasible { needed: usize, limit: usize },

    #[error("positivity violated: P(X_{node}={value}, Pa={cell}) = 0")]
    Positivity { node: usize, value: u8, cell: usize },

    #[error("algorithm {algorithm} cannot run on this instance: {reason}")]
    IncompatibleAlgorithm { algorithm: String, reason: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("instance format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for ModelError {
    fn from(e: std::io::Error) -> Self {
        ModelError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for ModelError {
    fn from(e: serde_json::Error) -> Self {
        ModelError::Format(e.to_string())
    }
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;
