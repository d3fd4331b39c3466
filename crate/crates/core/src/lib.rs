//! Anchored, collision-free timetabling for AGV fleets on resource graphs.

pub mod anchor;
pub mod gap_tree;
pub mod geo;
pub mod graph;
pub mod pathing;
pub mod scenario;
pub mod scheduler;
pub mod suites;
pub mod time;
pub mod time_graph;

pub use gap_tree::{AgvSet, GapTree};
pub use graph::{
    build_adjacency_links, build_grid, EdgeId, GeoLinks, Guide, NodeId, ResourceGraph, ResourceId, ResourceKind,
};
pub use pathing::{time_path, Route, SourceSpec, Stage, Step, TimePath};
pub use scenario::{generate, run, GenParams, GraphSpec, Outcome, Scenario, ScenarioError};
pub use scheduler::{build_timetable, metrics, Anchoriser, Config, Demand, Metrics, Preset, Timetable};
pub use time::{AgvId, Interval, TimePoint};
pub use time_graph::{Reservation, TimeGraph};
