//! Earliest-arrival time-path search over a [`TimeGraph`](crate::time_graph::TimeGraph).

mod bound;
mod partial;
mod search;
mod types;


pub use bound::{lower_bound, RouteBound};
pub use partial::{build_partial_subgraph, ResourceMask, Topology};
pub use search::{time_path, Search, SearchStats};
pub use types::{Position, Route, SourceSpec, Stage, Step, TimePath};

use crate::graph::{GraphError, NodeId};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlanError {
    #[error("malformed route: {0}")]
    MalformedRoute(String),
    #[error("bad source: {0}")]
    BadSource(String),
    #[error("no spatial path from node {} to node {}", .from.0, .to.0)]
    NoSpatialPath { from: NodeId, to: NodeId },
    #[error(transparent)]
    Graph(#[from] GraphError),
}
