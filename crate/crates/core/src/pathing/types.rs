use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use crate::graph::{EdgeId, NodeId, ResourceGraph, ResourceId, ResourceKind};
use crate::time::{AgvId, Interval, TimePoint};

use super::PlanError;

/// Where a search starts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Position {
    Node {
        node: NodeId,
    },
    /// Part-way along `edge`, `elapsed` ticks from its `a` endpoint, moving
    /// toward `toward`.
    Edge {
        edge: EdgeId,
        elapsed: u64,
        toward: NodeId,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SourceSpec {
    pub agv: AgvId,
    pub position: Position,
    pub earliest: TimePoint,
}

impl SourceSpec {
    pub fn at_node(agv: AgvId, node: NodeId, earliest: impl Into<TimePoint>) -> Self {
        SourceSpec { agv, position: Position::Node { node }, earliest: earliest.into() }
    }

    pub fn on_edge(agv: AgvId, edge: EdgeId, elapsed: u64, toward: NodeId, earliest: impl Into<TimePoint>) -> Self {
        SourceSpec { agv, position: Position::Edge { edge, elapsed, toward }, earliest: earliest.into() }
    }
}

impl Position {
    /// The resource the AGV currently sits on.
    pub fn resource(&self, g: &ResourceGraph) -> ResourceId {
        match *self {
            Position::Node { node } => g.node_resource(node),
            Position::Edge { edge, .. } => g.edge_resource(edge),
        }
    }

    /// For an edge position: ticks left until `toward` is reached.
    pub fn remaining(&self, g: &ResourceGraph) -> Result<Option<u64>, PlanError> {
        let Position::Edge { edge, elapsed, toward } = *self else {
            return Ok(None);
        };
        if edge.index() >= g.edge_count() {
            return Err(PlanError::BadSource(format!("unknown edge {}", edge.0)));
        }
        let e = g.edge(edge);
        if elapsed >= e.weight {
            return Err(PlanError::BadSource(format!(
                "elapsed {elapsed} is not below edge {} weight {}",
                edge.0, e.weight
            )));
        }
        let remaining = if toward == e.b {
            e.weight - elapsed
        } else if toward == e.a && !e.directed {
            elapsed
        } else {
            return Err(PlanError::BadSource(format!("edge {} cannot be driven toward node {}", edge.0, toward.0)));
        };
        if remaining == 0 {
            return Err(PlanError::BadSource(format!("position on edge {} is already at node {}", edge.0, toward.0)));
        }
        Ok(Some(remaining))
    }
}

/// One leg of a route: reach any of `targets` and stay for `min_stop`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stage {
    pub targets: Vec<NodeId>,
    pub min_stop: TimePoint,
}

impl Stage {
    pub fn new(targets: Vec<NodeId>, min_stop: impl Into<TimePoint>) -> Self {
        Stage { targets, min_stop: min_stop.into() }
    }

    /// Final stage that parks indefinitely.
    pub fn park(targets: Vec<NodeId>) -> Self {
        Stage { targets, min_stop: TimePoint::INFINITY }
    }
}

/// Ordered stages visited in sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Route {
    pub stages: Vec<Stage>,
}

impl Route {
    pub fn new(stages: Vec<Stage>) -> Self {
        Route { stages }
    }

    pub fn validate(&self, g: &ResourceGraph) -> Result<(), PlanError> {
        if self.stages.is_empty() {
            return Err(PlanError::MalformedRoute("route has no stages".into()));
        }
        let last = self.stages.len() - 1;
        for (k, stage) in self.stages.iter().enumerate() {
            if stage.targets.is_empty() {
                return Err(PlanError::MalformedRoute(format!("stage {k} has no targets")));
            }
            if let Some(t) = stage.targets.iter().find(|t| t.index() >= g.node_count()) {
                return Err(PlanError::MalformedRoute(format!("stage {k} targets unknown node {}", t.0)));
            }
            if stage.min_stop.is_infinite() && k != last {
                return Err(PlanError::MalformedRoute(format!("infinite stop on non-final stage {k}")));
            }
        }
        Ok(())
    }
}

/// One resource occupied over one (possibly empty) interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub resource: ResourceId,
    pub occupation: Interval,
}

/// Contiguous sequence of occupations for one AGV.
///
/// Zero-length node steps mark instants where the AGV passes through a node
/// without stopping.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimePath {
    pub agv: AgvId,
    pub steps: Vec<Step>,
    /// When the final stage's target was reached.
    pub arrival: TimePoint,
    /// When each stage's stop began, in stage order.
    pub stage_arrivals: Vec<TimePoint>,
}

impl TimePath {
    /// `prev.end == next.start` for every consecutive pair.
    pub fn is_contiguous(&self) -> bool {
        self.steps.windows(2).all(|w| w[0].occupation.end == w[1].occupation.start)
    }

    pub fn start(&self) -> Option<TimePoint> {
        self.steps.first().map(|s| s.occupation.start)
    }

    pub fn end(&self) -> Option<TimePoint> {
        self.steps.last().map(|s| s.occupation.end)
    }

    pub fn last_resource(&self) -> Option<ResourceId> {
        self.steps.last().map(|s| s.resource)
    }

    /// Ticks spent driving along edges; with unit speed this is distance.
    pub fn distance(&self, g: &ResourceGraph) -> u64 {
        self.steps
            .iter()
            .filter(|s| matches!(g.kind(s.resource), ResourceKind::Edge(_)))
            .map(|s| s.occupation.len())
            .sum()
    }

    /// Distinct resources visited, in order of first visit.
    pub fn resources(&self) -> Vec<ResourceId> {
        let mut seen = FxHashSet::default();
        self.steps.iter().map(|s| s.resource).filter(|r| seen.insert(*r)).collect()
    }
}
