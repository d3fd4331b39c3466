//! Resource graphs: nodes and edges are both reservable resources.
//!
//! Resources share one id space: node `i` is resource `i`, edge `j` is
//! resource `node_count + j`. An undirected edge is a single resource that
//! may be traversed in both directions.

mod grid;
mod links;
mod spatial;

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use grid::build_grid;
pub use links::{build_adjacency_links, GeoLinks};
pub use spatial::{distance_table, spatial_path, DistanceTable, Guide, SpatialPath};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub u32);

/// Index into the shared node/edge resource space of one graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ResourceId(pub u32);

impl NodeId {
    #[inline]
    pub const fn index(self) -> usize {
        self.0 as usize
    }
}

impl EdgeId {
    #[inline]
    pub const fn index(self) -> usize {
        self.0 as usize
    }
}

impl ResourceId {
    #[inline]
    pub const fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ResourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResourceKind {
    Node(NodeId),
    Edge(EdgeId),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    /// Integer embedding, required by the manhattan guide.
    pub pos: Option<(i64, i64)>,
    pub anchor: bool,
    /// Created by edge subdivision; never a demand endpoint.
    pub subdivision: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub a: NodeId,
    pub b: NodeId,
    pub weight: u64,
    pub directed: bool,
}

impl Edge {
    /// The endpoint opposite `n`.
    #[inline]
    pub fn other(&self, n: NodeId) -> NodeId {
        if n == self.a {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("edge {edge} references unknown node {node}")]
    UnknownNode { edge: usize, node: u32 },
    #[error("edge {0} has zero weight")]
    ZeroWeight(usize),
    #[error("edge {0} is a self-loop")]
    SelfLoop(usize),
    #[error("graph has nodes without coordinates; the manhattan guide needs an embedding")]
    NotEmbedded,
}

/// First violated structural assumption, as reported by [`ResourceGraph::validate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum Violation {
    #[error("assumption 1: graph is not strongly connected")]
    NotStronglyConnected,
    #[error("assumption 2: {anchors} anchors for {agvs} AGVs")]
    TooFewAnchors { anchors: usize, agvs: usize },
    #[error("assumption 3: graph without anchors is not strongly connected")]
    InteriorNotStronglyConnected,
    #[error("assumption 4: edge {0} joins two anchors")]
    AnchorEdge(u32),
}

impl Violation {
    /// Assumption number (1-4).
    pub fn assumption(&self) -> u8 {
        match self {
            Violation::NotStronglyConnected => 1,
            Violation::TooFewAnchors { .. } => 2,
            Violation::InteriorNotStronglyConnected => 3,
            Violation::AnchorEdge(_) => 4,
        }
    }
}

/// Layout graph plus adjacency indices. Immutable after construction.
#[derive(Clone, Debug)]
pub struct ResourceGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    /// Traversable (edge, head) pairs per node.
    out: Vec<Vec<(EdgeId, NodeId)>>,
    /// Incident edges regardless of direction.
    incident: Vec<Vec<EdgeId>>,
    by_pos: HashMap<(i64, i64), NodeId>,
    manhattan_unit: Option<u64>,
}

impl ResourceGraph {
    pub fn new(nodes: Vec<Node>, edges: Vec<Edge>) -> Result<Self, GraphError> {
        let n = nodes.len();
        let mut out = vec![Vec::new(); n];
        let mut incident = vec![Vec::new(); n];
        for (j, e) in edges.iter().enumerate() {
            for node in [e.a, e.b] {
                if node.index() >= n {
                    return Err(GraphError::UnknownNode { edge: j, node: node.0 });
                }
            }
            if e.weight == 0 {
                return Err(GraphError::ZeroWeight(j));
            }
            if e.a == e.b {
                return Err(GraphError::SelfLoop(j));
            }
            let id = EdgeId(j as u32);
            out[e.a.index()].push((id, e.b));
            if !e.directed {
                out[e.b.index()].push((id, e.a));
            }
            incident[e.a.index()].push(id);
            incident[e.b.index()].push(id);
        }

        let embedded = nodes.iter().all(|n| n.pos.is_some());
        let by_pos = if embedded {
            nodes.iter().enumerate().map(|(i, n)| (n.pos.unwrap(), NodeId(i as u32))).collect()
        } else {
            HashMap::new()
        };
        // Largest per-unit cost that never overestimates any edge, so that
        // unit * manhattan(u, v) is an admissible bound.
        let manhattan_unit = embedded.then(|| {
            edges
                .iter()
                .filter_map(|e| {
                    let d = manhattan(nodes[e.a.index()].pos.unwrap(), nodes[e.b.index()].pos.unwrap());
                    (d > 0).then(|| e.weight / d)
                })
                .min()
                .unwrap_or(0)
        });

        Ok(ResourceGraph { nodes, edges, out, incident, by_pos, manhattan_unit })
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn resource_count(&self) -> usize {
        self.nodes.len() + self.edges.len()
    }

    #[inline]
    pub fn node(&self, n: NodeId) -> &Node {
        &self.nodes[n.index()]
    }

    #[inline]
    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e.index()]
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = (NodeId, &Node)> + '_ {
        self.nodes.iter().enumerate().map(|(i, n)| (NodeId(i as u32), n))
    }

    pub fn edges(&self) -> impl ExactSizeIterator<Item = (EdgeId, &Edge)> + '_ {
        self.edges.iter().enumerate().map(|(i, e)| (EdgeId(i as u32), e))
    }

    pub fn anchors(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes().filter(|(_, n)| n.anchor).map(|(id, _)| id)
    }

    pub fn anchor_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.anchor).count()
    }

    #[inline]
    pub fn is_anchor(&self, n: NodeId) -> bool {
        self.nodes[n.index()].anchor
    }

    /// Traversable `(edge, head)` pairs leaving `n`.
    #[inline]
    pub fn outgoing(&self, n: NodeId) -> &[(EdgeId, NodeId)] {
        &self.out[n.index()]
    }

    #[inline]
    pub fn incident(&self, n: NodeId) -> &[EdgeId] {
        &self.incident[n.index()]
    }

    #[inline]
    pub fn node_resource(&self, n: NodeId) -> ResourceId {
        ResourceId(n.0)
    }

    #[inline]
    pub fn edge_resource(&self, e: EdgeId) -> ResourceId {
        ResourceId((self.nodes.len() + e.index()) as u32)
    }

    #[inline]
    pub fn kind(&self, r: ResourceId) -> ResourceKind {
        let n = self.nodes.len();
        if r.index() < n {
            ResourceKind::Node(NodeId(r.0))
        } else {
            ResourceKind::Edge(EdgeId((r.index() - n) as u32))
        }
    }

    #[inline]
    pub fn contains_resource(&self, r: ResourceId) -> bool {
        r.index() < self.resource_count()
    }

    /// Resources adjacent in the node/edge incidence graph.
    pub fn resource_neighbours(&self, r: ResourceId) -> impl Iterator<Item = ResourceId> + '_ {
        let (node_side, edge_side) = match self.kind(r) {
            ResourceKind::Node(n) => (Some(n), None),
            ResourceKind::Edge(e) => (None, Some(e)),
        };
        let from_node =
            node_side.into_iter().flat_map(move |n| self.incident(n).iter().map(move |&e| self.edge_resource(e)));
        let from_edge = edge_side.into_iter().flat_map(move |e| {
            let edge = self.edge(e);
            [self.node_resource(edge.a), self.node_resource(edge.b)]
        });
        from_node.chain(from_edge)
    }

    pub fn node_at(&self, x: i64, y: i64) -> Option<NodeId> {
        self.by_pos.get(&(x, y)).copied()
    }

    pub fn is_embedded(&self) -> bool {
        self.manhattan_unit.is_some()
    }

    /// Ticks per manhattan unit, if every node is embedded.
    pub fn manhattan_unit(&self) -> Option<u64> {
        self.manhattan_unit
    }

    /// `unit * |dx| + |dy|` lower bound on travel time between two nodes.
    pub fn manhattan_bound(&self, u: NodeId, v: NodeId) -> Option<u64> {
        let unit = self.manhattan_unit?;
        let d = manhattan(self.nodes[u.index()].pos?, self.nodes[v.index()].pos?);
        Some(unit.saturating_mul(d))
    }

    /// Checks structural assumptions 1-4 for a fleet of `num_agvs`.
    pub fn validate(&self, num_agvs: usize) -> Result<(), Violation> {
        if !self.strongly_connected(|_| true) {
            return Err(Violation::NotStronglyConnected);
        }
        let anchors = self.anchor_count();
        if anchors < num_agvs {
            return Err(Violation::TooFewAnchors { anchors, agvs: num_agvs });
        }
        if !self.strongly_connected(|n| !self.is_anchor(n)) {
            return Err(Violation::InteriorNotStronglyConnected);
        }
        if let Some((id, _)) = self.edges().find(|(_, e)| self.is_anchor(e.a) && self.is_anchor(e.b)) {
            return Err(Violation::AnchorEdge(id.0));
        }
        Ok(())
    }

    /// Strong connectivity of the subgraph induced by `keep`. The empty
    /// subgraph counts as connected.
    fn strongly_connected(&self, keep: impl Fn(NodeId) -> bool) -> bool {
        let kept: Vec<NodeId> = (0..self.nodes.len() as u32).map(NodeId).filter(|&n| keep(n)).collect();
        let Some(&root) = kept.first() else {
            return true;
        };
        let reach = |forward: bool| {
            let mut seen = vec![false; self.nodes.len()];
            let mut queue = VecDeque::from([root]);
            seen[root.index()] = true;
            while let Some(u) = queue.pop_front() {
                for &e in self.incident(u) {
                    let edge = self.edge(e);
                    let v = edge.other(u);
                    let traversable =
                        if forward { !edge.directed || edge.a == u } else { !edge.directed || edge.b == u };
                    if traversable && keep(v) && !seen[v.index()] {
                        seen[v.index()] = true;
                        queue.push_back(v);
                    }
                }
            }
            kept.iter().all(|n| seen[n.index()])
        };
        reach(true) && reach(false)
    }

    /// Splits every edge into `s` equal sub-edges joined by `s - 1` new
    /// non-anchor nodes. Embedded coordinates are scaled by `s` so the new
    /// nodes land on integer positions.
    pub fn subdivide(&self, s: u64) -> Result<ResourceGraph, GraphError> {
        if s == 0 {
            return Err(GraphError::InvalidParameter("subdivision count must be at least 1".into()));
        }
        if s == 1 {
            return Ok(self.clone());
        }
        if let Some((id, e)) = self.edges().find(|(_, e)| e.weight % s != 0) {
            return Err(GraphError::InvalidParameter(format!(
                "edge {} weight {} is not divisible by {s}",
                id.0, e.weight
            )));
        }
        let scale = s as i64;
        let mut nodes: Vec<Node> =
            self.nodes.iter().map(|n| Node { pos: n.pos.map(|(x, y)| (x * scale, y * scale)), ..n.clone() }).collect();
        let mut edges = Vec::with_capacity(self.edges.len() * s as usize);
        for e in &self.edges {
            let (pa, pb) = (self.nodes[e.a.index()].pos, self.nodes[e.b.index()].pos);
            let mut prev = e.a;
            for k in 1..s as i64 {
                let pos = match (pa, pb) {
                    (Some((ax, ay)), Some((bx, by))) => Some((ax * scale + k * (bx - ax), ay * scale + k * (by - ay))),
                    _ => None,
                };
                let id = NodeId(nodes.len() as u32);
                nodes.push(Node { pos, anchor: false, subdivision: true });
                edges.push(Edge { a: prev, b: id, weight: e.weight / s, directed: e.directed });
                prev = id;
            }
            edges.push(Edge { a: prev, b: e.b, weight: e.weight / s, directed: e.directed });
        }
        ResourceGraph::new(nodes, edges)
    }
}

#[inline]
pub(crate) fn manhattan(a: (i64, i64), b: (i64, i64)) -> u64 {
    a.0.abs_diff(b.0) + a.1.abs_diff(b.1)
}
