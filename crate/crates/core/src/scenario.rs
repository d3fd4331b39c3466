//! Scenario files, a seeded scenario generator and the end-to-end runner.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::anchor::{AnchorError, Placement};
use crate::graph::{
    build_adjacency_links, build_grid, Edge, GeoLinks, GraphError, Node, NodeId, ResourceGraph, ResourceKind, Violation,
};
use crate::pathing::Position;
use crate::scheduler::{
    build_timetable, metrics, Anchoriser, Config, Demand, Metrics, Preset, ScheduleError, Timetable,
};
use crate::time::TimePoint;
use crate::time_graph::{Reservation, SafetyViolation, TimeGraphError};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Violation(#[from] Violation),
    #[error(transparent)]
    Placement(#[from] AnchorError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    TimeGraph(#[from] TimeGraphError),
    #[error("safety audit failed: {0}")]
    Audit(#[from] SafetyViolation),
    #[error("timetable is not anchored: {0}")]
    NotAnchored(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridTag {
    Grid,
}

/// Grid parameters, expanded with [`build_grid`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    #[serde(rename = "type")]
    pub kind: GridTag,
    pub n: usize,
    pub weight: u64,
    #[serde(default = "one")]
    pub subdivisions: u64,
    #[serde(default = "one_u32")]
    pub link_radius: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<i64>,
    #[serde(default)]
    pub anchor: bool,
    /// Created by subdivision; excluded from demand endpoints.
    #[serde(default, skip_serializing_if = "is_false")]
    pub subdivision: bool,
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub id: u32,
    pub a: u32,
    pub b: u32,
    pub weight: u64,
    #[serde(default)]
    pub directed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Meta {
    #[serde(default = "one")]
    pub subdivisions: u64,
    #[serde(default = "one_u32")]
    pub link_radius: u32,
}

impl Default for Meta {
    fn default() -> Self {
        Meta { subdivisions: 1, link_radius: 1 }
    }
}

/// Node and edge lists; ids must be `0..len` in order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplicitGraph {
    pub nodes: Vec<NodeSpec>,
    pub edges: Vec<EdgeSpec>,
    #[serde(default)]
    pub meta: Meta,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphSpec {
    Grid(GridSpec),
    Explicit(ExplicitGraph),
}

fn one() -> u64 {
    1
}

fn one_u32() -> u32 {
    1
}

impl GraphSpec {
    pub fn grid(n: usize, weight: u64, subdivisions: u64, link_radius: u32) -> Self {
        GraphSpec::Grid(GridSpec { kind: GridTag::Grid, n, weight, subdivisions, link_radius })
    }

    pub fn meta(&self) -> Meta {
        match self {
            GraphSpec::Grid(g) => Meta { subdivisions: g.subdivisions, link_radius: g.link_radius },
            GraphSpec::Explicit(e) => e.meta,
        }
    }

    /// The graph before subdivision.
    pub fn base_graph(&self) -> Result<ResourceGraph, ScenarioError> {
        match self {
            GraphSpec::Grid(g) => Ok(build_grid(g.n, g.weight)?),
            GraphSpec::Explicit(e) => e.to_graph(),
        }
    }

    /// The subdivided graph and its geographic links.
    pub fn build(&self) -> Result<(ResourceGraph, GeoLinks), ScenarioError> {
        let meta = self.meta();
        let g = self.base_graph()?.subdivide(meta.subdivisions)?;
        let links = build_adjacency_links(&g, meta.link_radius);
        Ok((g, links))
    }
}

impl ExplicitGraph {
    pub fn from_graph(g: &ResourceGraph, meta: Meta) -> Self {
        ExplicitGraph {
            nodes: g
                .nodes()
                .map(|(id, n)| NodeSpec {
                    id: id.0,
                    x: n.pos.map(|p| p.0),
                    y: n.pos.map(|p| p.1),
                    anchor: n.anchor,
                    subdivision: n.subdivision,
                })
                .collect(),
            edges: g
                .edges()
                .map(|(id, e)| EdgeSpec { id: id.0, a: e.a.0, b: e.b.0, weight: e.weight, directed: e.directed })
                .collect(),
            meta,
        }
    }

    fn to_graph(&self) -> Result<ResourceGraph, ScenarioError> {
        let mut nodes = Vec::with_capacity(self.nodes.len());
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id as usize != i {
                return Err(ScenarioError::Invalid(format!("node at index {i} has id {}", n.id)));
            }
            let pos = match (n.x, n.y) {
                (Some(x), Some(y)) => Some((x, y)),
                (None, None) => None,
                _ => return Err(ScenarioError::Invalid(format!("node {i} has only one coordinate"))),
            };
            nodes.push(Node { pos, anchor: n.anchor, subdivision: n.subdivision });
        }
        let mut edges = Vec::with_capacity(self.edges.len());
        for (i, e) in self.edges.iter().enumerate() {
            if e.id as usize != i {
                return Err(ScenarioError::Invalid(format!("edge at index {i} has id {}", e.id)));
            }
            edges.push(Edge { a: NodeId(e.a), b: NodeId(e.b), weight: e.weight, directed: e.directed });
        }
        Ok(ResourceGraph::new(nodes, edges)?)
    }
}

/// Everything needed to build one timetable. Placement and demand node ids
/// refer to the subdivided graph, whose original nodes keep their ids.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub graph: GraphSpec,
    pub placement: Vec<Position>,
    #[serde(default)]
    pub demands: Vec<Demand>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_preset")]
    pub preset: Preset,
    #[serde(default = "default_anchoriser")]
    pub anchoriser: Anchoriser,
    #[serde(default)]
    pub stop_pickup: u64,
    #[serde(default)]
    pub stop_dropoff: u64,
    /// Extra reservations added after planning, before the safety audit.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inject_reservations: Vec<Reservation>,
}

fn default_preset() -> Preset {
    Preset::FullManhattan
}

fn default_anchoriser() -> Anchoriser {
    Anchoriser::Greedy
}

impl Scenario {
    pub fn from_json(s: &str) -> Result<Self, ScenarioError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialises")
    }

    pub fn config(&self) -> Config {
        Config {
            preset: self.preset,
            anchoriser: self.anchoriser,
            stop_pickup: self.stop_pickup,
            stop_dropoff: self.stop_dropoff,
            seed: self.seed,
        }
    }

    /// Builds the graph and checks the scenario against it.
    pub fn prepare(&self) -> Result<Prepared, ScenarioError> {
        let meta = self.graph.meta();
        check_radius(meta)?;
        let (graph, links) = self.graph.build()?;
        let placement = Placement::new(self.placement.clone());
        graph.validate(placement.len())?;
        placement.validate(&graph)?;
        check_separation(&graph, &links, &placement)?;
        Ok(Prepared { graph, links, placement })
    }
}

/// A scenario's graph, links and checked placement.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub graph: ResourceGraph,
    pub links: GeoLinks,
    pub placement: Placement,
}

fn check_radius(meta: Meta) -> Result<(), ScenarioError> {
    if u64::from(meta.link_radius) >= 2 * meta.subdivisions {
        return Err(ScenarioError::Invalid(format!(
            "link radius {} must be below twice the subdivision count {}",
            meta.link_radius, meta.subdivisions
        )));
    }
    Ok(())
}

fn check_separation(g: &ResourceGraph, links: &GeoLinks, placement: &Placement) -> Result<(), ScenarioError> {
    let rs: Vec<_> = placement.agvs().map(|a| placement.resource(g, a)).collect();
    for (i, &r) in rs.iter().enumerate() {
        if let Some(j) = rs[..i].iter().position(|&q| links.is_linked(r, q)) {
            return Err(ScenarioError::Invalid(format!(
                "AGVs {j} and {i} are within link radius {} of each other",
                links.radius()
            )));
        }
    }
    Ok(())
}

/// Generator parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenParams {
    pub grid: usize,
    pub weight: u64,
    pub agvs: usize,
    pub demands: usize,
    pub seed: u64,
    pub subdivisions: u64,
    pub link_radius: u32,
    pub preset: Preset,
    pub anchoriser: Anchoriser,
    pub stop_pickup: u64,
    pub stop_dropoff: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            grid: 10,
            weight: 5000,
            agvs: 4,
            demands: 10,
            seed: 0,
            subdivisions: 1,
            link_radius: 1,
            preset: Preset::FullManhattan,
            anchoriser: Anchoriser::Greedy,
            stop_pickup: 0,
            stop_dropoff: 0,
        }
    }
}

/// Random placement attempts per AGV before the density is declared infeasible.
const PLACEMENT_TRIES: usize = 200;

/// Extra separation beyond the link radius when either AGV starts on an edge.
pub const EDGE_SPACING: u32 = 3;

/// Seeded grid scenario: AGVs on distinct, mutually unlinked resources and
/// demands between distinct plain interior nodes, all released at time zero.
///
/// Pairs involving an AGV that starts on an edge are kept more than
/// `link_radius + EDGE_SPACING` resources apart.
pub fn generate(p: &GenParams) -> Result<Scenario, ScenarioError> {
    let graph = GraphSpec::grid(p.grid, p.weight, p.subdivisions, p.link_radius);
    check_radius(graph.meta())?;
    let (g, links) = graph.build()?;
    g.validate(p.agvs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);

    // An AGV mid-edge cannot wait, so nobody may be able to cover its exit
    // nodes before it gets there: within one edge time a neighbour closes in
    // by at most two resources.
    let spacing = build_adjacency_links(&g, p.link_radius + EDGE_SPACING);
    let is_edge = |r| matches!(g.kind(r), ResourceKind::Edge(_));
    let mut taken = Vec::with_capacity(p.agvs);
    let mut placement = Vec::with_capacity(p.agvs);
    for i in 0..p.agvs {
        let mut placed = false;
        for _ in 0..PLACEMENT_TRIES {
            let r = crate::graph::ResourceId(rng.gen_range(0..g.resource_count() as u32));
            let clash = |&q: &crate::graph::ResourceId| {
                q == r || links.is_linked(r, q) || ((is_edge(r) || is_edge(q)) && spacing.is_linked(r, q))
            };
            if taken.iter().any(clash) {
                continue;
            }
            let pos = match g.kind(r) {
                ResourceKind::Node(node) => Position::Node { node },
                ResourceKind::Edge(edge) => {
                    let e = g.edge(edge);
                    if e.weight < 2 {
                        continue;
                    }
                    let toward = if e.directed || rng.gen_bool(0.5) { e.b } else { e.a };
                    Position::Edge { edge, elapsed: rng.gen_range(1..e.weight), toward }
                }
            };
            taken.push(r);
            placement.push(pos);
            placed = true;
            break;
        }
        if !placed {
            return Err(ScenarioError::Invalid(format!("could not place AGV {i} of {}; density too high", p.agvs)));
        }
    }

    let endpoints: Vec<NodeId> = g.nodes().filter(|(_, n)| !n.anchor && !n.subdivision).map(|(id, _)| id).collect();
    if p.demands > 0 && endpoints.len() < 2 {
        return Err(ScenarioError::Invalid("grid has fewer than two demand endpoints".into()));
    }
    let demands = (0..p.demands as u32)
        .map(|id| {
            let pair: Vec<NodeId> = endpoints.choose_multiple(&mut rng, 2).copied().collect();
            Demand { id, pickup: pair[0], dropoff: pair[1], horizon: TimePoint::ZERO }
        })
        .collect();

    Ok(Scenario {
        graph,
        placement,
        demands,
        seed: p.seed,
        preset: p.preset,
        anchoriser: p.anchoriser,
        stop_pickup: p.stop_pickup,
        stop_dropoff: p.stop_dropoff,
        inject_reservations: Vec::new(),
    })
}

/// A completed and audited run.
#[derive(Debug)]
pub struct Outcome {
    pub graph: ResourceGraph,
    pub timetable: Timetable,
    pub metrics: Metrics,
    pub runtime_ms: f64,
}

impl Outcome {
    pub fn timetable_json(&self) -> String {
        self.timetable.to_json(&self.graph)
    }
}

/// Anchors, plans every demand, applies injected reservations, then audits.
pub fn run(s: &Scenario) -> Result<Outcome, ScenarioError> {
    let prepared = s.prepare()?;
    let clock = Instant::now();
    let mut timetable =
        build_timetable(&prepared.graph, &prepared.links, &prepared.placement, &s.demands, &s.config())?;
    let runtime_ms = clock.elapsed().as_secs_f64() * 1e3;
    timetable.time_graph.reserve_all(&s.inject_reservations)?;
    timetable.time_graph.audit_safety(timetable.all_paths())?;
    timetable.check_anchored(&prepared.graph).map_err(ScenarioError::NotAnchored)?;
    let metrics = metrics(&timetable, &prepared.graph);
    Ok(Outcome { graph: prepared.graph, timetable, metrics, runtime_ms })
}

/// Header of the metrics CSV.
pub const METRICS_HEADER: &str = "suite,param,algorithm,runtime_ms,makespan,total_distance";

/// One metrics CSV row, without a trailing newline.
pub fn metrics_row(
    suite: &str,
    param: impl std::fmt::Display,
    algorithm: &str,
    runtime_ms: f64,
    m: &Metrics,
) -> String {
    format!("{suite},{param},{algorithm},{runtime_ms:.3},{},{}", m.makespan, m.total_distance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::{AgvId, Interval};

    fn params(seed: u64) -> GenParams {
        GenParams { seed, ..GenParams::default() }
    }

    #[test]
    fn grid_spec_round_trips() {
        let json = r#"{"type":"grid","n":6,"weight":5000,"subdivisions":1,"link_radius":1}"#;
        let spec: GraphSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec, GraphSpec::grid(6, 5000, 1, 1));
        assert_eq!(serde_json::to_string(&spec).unwrap(), json);
    }

    #[test]
    fn explicit_graph_round_trips() {
        let g = build_grid(5, 5000).unwrap();
        let spec = GraphSpec::Explicit(ExplicitGraph::from_graph(&g, Meta::default()));
        let back: GraphSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        let (h, _) = back.build().unwrap();
        assert_eq!(h.node_count(), g.node_count());
        assert_eq!(
            h.edges().map(|(_, e)| e.clone()).collect::<Vec<_>>(),
            g.edges().map(|(_, e)| e.clone()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn explicit_ids_must_be_dense() {
        let json = r#"{"nodes":[{"id":1,"anchor":true},{"id":0}],"edges":[]}"#;
        let spec: GraphSpec = serde_json::from_str(json).unwrap();
        assert!(matches!(spec.build(), Err(ScenarioError::Invalid(_))));
    }

    #[test]
    fn generate_is_deterministic() {
        let p = GenParams { grid: 10, agvs: 4, demands: 10, seed: 7, ..GenParams::default() };
        assert_eq!(generate(&p).unwrap().to_json(), generate(&p).unwrap().to_json());
        let s = generate(&p).unwrap();
        assert_eq!(Scenario::from_json(&s.to_json()).unwrap(), s);
    }

    #[test]
    fn generated_scenarios_are_valid() {
        for seed in 0..100 {
            let p = GenParams {
                agvs: 8,
                demands: 12,
                subdivisions: 1 + seed % 3,
                link_radius: 1 + (seed % 3) as u32,
                weight: 6000,
                ..params(seed)
            };
            let s = generate(&p).unwrap();
            let prepared = s.prepare().unwrap();
            for d in &s.demands {
                assert_ne!(d.pickup, d.dropoff);
                let n = prepared.graph.node(d.pickup);
                assert!(!n.anchor && !n.subdivision);
                assert!(!prepared.graph.node(d.dropoff).anchor);
            }
        }
    }

    #[test]
    fn edge_starts_keep_extra_distance() {
        for seed in 0..30 {
            let s = generate(&GenParams { grid: 14, agvs: 12, demands: 0, ..params(seed) }).unwrap();
            let prepared = s.prepare().unwrap();
            let g = &prepared.graph;
            let wide = build_adjacency_links(g, 1 + EDGE_SPACING);
            let rs: Vec<_> = prepared.placement.agvs().map(|a| prepared.placement.resource(g, a)).collect();
            for (i, &a) in rs.iter().enumerate() {
                for &b in &rs[..i] {
                    let edge = |r| matches!(g.kind(r), ResourceKind::Edge(_));
                    assert!(!(edge(a) || edge(b)) || !wide.is_linked(a, b), "seed {seed}");
                }
            }
        }
    }

    #[test]
    fn generator_rejects_overfull_grids() {
        let p = GenParams { grid: 4, agvs: 9, ..params(1) };
        assert!(matches!(generate(&p), Err(ScenarioError::Violation(_))));
        let p = GenParams { grid: 4, agvs: 8, subdivisions: 2, link_radius: 4, weight: 6000, ..params(1) };
        assert!(matches!(generate(&p), Err(ScenarioError::Invalid(_))));
        let p = GenParams { subdivisions: 1, link_radius: 2, ..params(1) };
        assert!(matches!(generate(&p), Err(ScenarioError::Invalid(_))));
    }

    #[test]
    fn run_is_deterministic_and_audited() {
        for preset in Preset::ALL {
            let p = GenParams { grid: 8, agvs: 3, demands: 8, preset, stop_pickup: 500, ..params(11) };
            let s = generate(&p).unwrap();
            let a = run(&s).unwrap();
            let b = run(&s).unwrap();
            assert_eq!(a.timetable_json(), b.timetable_json());
            assert_eq!(a.metrics, b.metrics);
            assert!(a.metrics.makespan > 0);
        }
    }

    #[test]
    fn single_agv_makespan_ignores_guidance() {
        for seed in 0..20 {
            let base = GenParams { grid: 9, agvs: 1, demands: 6, stop_pickup: 400, ..params(seed) };
            let zero = run(&generate(&GenParams { preset: Preset::FullZero, ..base }).unwrap()).unwrap();
            let guided = run(&generate(&GenParams { preset: Preset::FullManhattan, ..base }).unwrap()).unwrap();
            assert_eq!(zero.metrics.makespan, guided.metrics.makespan, "seed {seed}");
        }
    }

    #[test]
    fn empty_demands_from_anchors_have_zero_makespan() {
        let g = build_grid(6, 5000).unwrap();
        let anchors: Vec<_> = g.anchors().collect();
        let s = Scenario {
            graph: GraphSpec::grid(6, 5000, 1, 1),
            placement: vec![Position::Node { node: anchors[0] }, Position::Node { node: anchors[7] }],
            demands: vec![],
            seed: 0,
            preset: Preset::FullZero,
            anchoriser: Anchoriser::Naive,
            stop_pickup: 0,
            stop_dropoff: 0,
            inject_reservations: vec![],
        };
        assert_eq!(run(&s).unwrap().metrics, Metrics { makespan: 0, total_distance: 0 });
    }

    #[test]
    fn injected_conflict_fails_audit() {
        let mut s = generate(&GenParams { grid: 6, agvs: 1, demands: 0, ..params(2) }).unwrap();
        let clean = run(&s).unwrap();
        let last = clean.timetable.paths[0].last().unwrap().steps.last().unwrap().resource;
        s.inject_reservations = vec![Reservation::new(last, AgvId(9), Interval::new(0, 1_000_000))];
        assert!(matches!(run(&s), Err(ScenarioError::Audit(v)) if v.other == AgvId(9)));
    }

    #[test]
    fn prepare_rejects_close_agvs() {
        let mut s = generate(&GenParams { grid: 6, agvs: 1, demands: 0, ..params(3) }).unwrap();
        let g = build_grid(6, 5000).unwrap();
        let a = g.node_at(2, 2).unwrap();
        let e = g.incident(a)[0];
        s.placement = vec![Position::Node { node: a }, Position::Edge { edge: e, elapsed: 1, toward: g.edge(e).b }];
        assert!(matches!(s.prepare(), Err(ScenarioError::Invalid(_))));
    }

    #[test]
    fn metrics_row_shape() {
        let row = metrics_row("run", 7, "full-zero", 1.23456, &Metrics { makespan: 10, total_distance: 4 });
        assert_eq!(row, "run,7,full-zero,1.235,10,4");
    }
}
