use thiserror::Error;

use crate::graph::GraphError;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised while building or querying influence diagrams.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),
    #[error("model error: {0}")]
    Model(String),
    #[error("policy error: {0}")]
    Policy(String),
    #[error("capacity error: {0}")]
    Capacity(String),
    #[error("positivity violation: observational conditional undefined after history {history}")]
    Positivity { history: String },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}
