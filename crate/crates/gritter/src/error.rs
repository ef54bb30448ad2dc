use crate::network::{EdgeId, NodeId};

/// Errors raised by ingestion, preprocessing and planning.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("schema error in {file}: {message}")]
    Schema { file: String, message: String },

    #[error("edge {edge} references unknown node {node}")]
    UnknownNode { edge: u64, node: NodeId },

    #[error("validation error on edge {edge}: {message}")]
    InvalidEdge { edge: u64, message: String },

    #[error("{0}")]
    InvalidInput(String),

    #[error("depot {depot} at node {node} pruned by strongly-connected-component extraction")]
    DepotUnreachable { depot: u64, node: NodeId },

    #[error("no path from node {from} to node {to}")]
    Unreachable { from: NodeId, to: NodeId },

    #[error(
        "edge {edge} cannot be routed from depot {depot} within limits \
         (round trip {minutes:.2} min / {km:.2} km, salt {lane_km:.2} lane-km)"
    )]
    UnroutableEdge {
        edge: EdgeId,
        depot: u64,
        minutes: f64,
        km: f64,
        lane_km: f64,
    },

    #[error("instance generation failed: {0}")]
    Generation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
