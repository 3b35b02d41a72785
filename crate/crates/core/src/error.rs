use thiserror::Error;

use crate::topology::NodeId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid topology: {0}")]
    Topology(String),

    #[error("unknown node {node} (topology has {node_count} nodes)")]
    UnknownNode { node: NodeId, node_count: usize },

    #[error("node {node} is not a neighbor of node {of}")]
    NotNeighbor { node: NodeId, of: NodeId },

    #[error("invalid configuration: {0}")]
    Config(String),

    /// A transmission was submitted with a start time earlier than the
    /// channel clock. Indicates an event-ordering bug in the caller.
    #[error("transmission from node {sender} starts at {start} but the channel is at {now}")]
    SimulationOrder { sender: NodeId, start: f64, now: f64 },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("no results to emit")]
    EmptyResults,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
