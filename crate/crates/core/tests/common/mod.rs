//! Shared test oracles.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};

use anchorpath::graph::{Edge, EdgeId, Node, NodeId, ResourceGraph, ResourceId};
use anchorpath::pathing::{Position, Route, SourceSpec, Stage, TimePath};
use anchorpath::time_graph::{Reservation, TimeGraph};
use anchorpath::{AgvId, Interval, TimePoint};
use rand::Rng;

pub const ME: AgvId = AgvId(0);

/// A tiny time-pathing instance for the exhaustive oracle.
#[derive(Clone, Debug)]
pub struct Instance {
    pub graph: ResourceGraph,
    pub reservations: Vec<Reservation>,
    pub sources: Vec<SourceSpec>,
    pub route: Route,
}

impl Instance {
    pub fn time_graph(&self) -> TimeGraph {
        let mut tg = TimeGraph::new(self.graph.resource_count());
        tg.reserve_all(&self.reservations).unwrap();
        tg
    }

    /// Free for `agv` at tick `t` according to the raw reservation list.
    fn free(&self, r: ResourceId, agv: AgvId, t: u64) -> bool {
        !self.reservations.iter().any(|q| q.resource == r && q.agv != agv && q.interval.contains(TimePoint::new(t)))
    }

    fn free_span(&self, r: ResourceId, agv: AgvId, from: u64, len: u64) -> bool {
        (from..from + len).all(|t| self.free(r, agv, t))
    }

    fn free_forever(&self, r: ResourceId, agv: AgvId, from: u64) -> bool {
        !self.reservations.iter().any(|q| q.resource == r && q.agv != agv && q.interval.end > TimePoint::new(from))
    }
}

/// Earliest arrival by exhaustive tick-level search over (node, tick, stage)
/// states up to `horizon`. Waiting a tick on a node needs that tick free;
/// crossing an edge needs every tick of the crossing free and the head free on
/// arrival; stopping needs every tick of the stop free.
pub fn oracle_arrival(inst: &Instance, horizon: u64) -> Option<(u64, AgvId)> {
    let g = &inst.graph;
    let last = inst.route.stages.len() - 1;
    // Ordered by (tick, agv) so the first goal found is the answer.
    let mut open: BTreeSet<(u64, AgvId, NodeId, usize)> = BTreeSet::new();
    let mut seen: HashSet<(u64, AgvId, NodeId, usize)> = HashSet::new();
    for src in &inst.sources {
        let t0 = src.earliest.ticks().unwrap();
        let start = match src.position {
            Position::Node { node } => inst.free(g.node_resource(node), src.agv, t0).then_some((node, t0)),
            Position::Edge { edge, toward, .. } => {
                let m = src.position.remaining(g).unwrap().unwrap();
                (inst.free_span(g.edge_resource(edge), src.agv, t0, m)
                    && inst.free(g.node_resource(toward), src.agv, t0 + m))
                .then_some((toward, t0 + m))
            }
        };
        if let Some((node, t)) = start {
            open.insert((t, src.agv, node, 0));
        }
    }
    while let Some(state) = open.pop_first() {
        if !seen.insert(state) {
            continue;
        }
        let (t, agv, v, k) = state;
        if t > horizon {
            break;
        }
        let vr = g.node_resource(v);
        let stage: &Stage = &inst.route.stages[k];
        if stage.targets.contains(&v) {
            match stage.min_stop.ticks() {
                None if inst.free_forever(vr, agv, t) => return Some((t, agv)),
                Some(stop) if inst.free_span(vr, agv, t, stop) => {
                    if k == last {
                        return Some((t, agv));
                    }
                    open.insert((t + stop, agv, v, k + 1));
                }
                _ => {}
            }
        }
        if inst.free(vr, agv, t) {
            open.insert((t + 1, agv, v, k));
        }
        for &(e, b) in g.outgoing(v) {
            let w = g.edge(e).weight;
            if inst.free_span(g.edge_resource(e), agv, t, w) && inst.free(g.node_resource(b), agv, t + w) {
                open.insert((t + w, agv, b, k));
            }
        }
    }
    None
}

/// Random instance with at most six resources and reservations inside the
/// first 20 ticks (plus occasional indefinite ones).
pub fn random_instance(rng: &mut impl Rng) -> Instance {
    let plain = Node { pos: None, anchor: false, subdivision: false };
    let (nodes, edge_pairs): (usize, Vec<(u32, u32)>) = match rng.gen_range(0..4) {
        0 => (2, vec![(0, 1)]),
        1 => (3, vec![(0, 1), (1, 2)]),
        2 => (3, vec![(0, 1), (1, 2), (2, 0)]),
        _ => (4, vec![(0, 1), (0, 2)]),
    };
    let edges: Vec<Edge> = edge_pairs
        .iter()
        .map(|&(a, b)| {
            let (a, b) = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
            Edge { a: NodeId(a), b: NodeId(b), weight: rng.gen_range(1..=3), directed: rng.gen_bool(0.15) }
        })
        .collect();
    let graph = ResourceGraph::new(vec![plain; nodes], edges).unwrap();
    let resources = graph.resource_count() as u32;

    let mut reservations = Vec::new();
    for _ in 0..rng.gen_range(0..6) {
        let r = ResourceId(rng.gen_range(0..resources));
        let agv = AgvId(rng.gen_range(0..4));
        let s = rng.gen_range(0..19);
        let end = if rng.gen_bool(0.1) { TimePoint::INFINITY } else { TimePoint::new(rng.gen_range(s + 1..20)) };
        let ivl = Interval::new(s, end);
        // Same-AGV reservations never overlap.
        if !reservations.iter().any(|q: &Reservation| q.resource == r && q.agv == agv && q.interval.overlaps(&ivl)) {
            reservations.push(Reservation::new(r, agv, ivl));
        }
    }

    let mut sources = Vec::new();
    for _ in 0..rng.gen_range(1..=2) {
        let agv = if rng.gen_bool(0.7) { ME } else { AgvId(rng.gen_range(1..3)) };
        let earliest = rng.gen_range(0..6);
        let edge = EdgeId(rng.gen_range(0..graph.edge_count() as u32));
        let e = graph.edge(edge);
        if e.weight > 1 && rng.gen_bool(0.3) {
            let elapsed = rng.gen_range(1..e.weight);
            let toward = if e.directed || rng.gen_bool(0.5) { e.b } else { e.a };
            sources.push(SourceSpec::on_edge(agv, edge, elapsed, toward, earliest));
        } else {
            sources.push(SourceSpec::at_node(agv, NodeId(rng.gen_range(0..nodes as u32)), earliest));
        }
    }

    let stages = rng.gen_range(1..=3);
    let route = Route::new(
        (0..stages)
            .map(|k| {
                let mut targets = vec![NodeId(rng.gen_range(0..nodes as u32))];
                if rng.gen_bool(0.3) {
                    let extra = NodeId(rng.gen_range(0..nodes as u32));
                    if !targets.contains(&extra) {
                        targets.push(extra);
                    }
                }
                if k + 1 == stages && rng.gen_bool(0.5) {
                    Stage::park(targets)
                } else {
                    Stage::new(targets, rng.gen_range(0..=3))
                }
            })
            .collect(),
    );
    Instance { graph, reservations, sources, route }
}

/// Re-validates a returned path against the time graph it was planned on.
pub fn check_path(inst: &Instance, tg: &TimeGraph, path: &TimePath) -> Result<(), String> {
    if !path.is_contiguous() {
        return Err("path is not contiguous".into());
    }
    for s in path.steps.iter().filter(|s| !s.occupation.is_empty()) {
        let gaps = tg.tree(s.resource).gap_query(path.agv, s.occupation);
        if gaps != [s.occupation] {
            return Err(format!("step {:?} is not inside a gap: {gaps:?}", s));
        }
    }
    let first = path.steps[0];
    if !inst.sources.iter().any(|s| {
        s.agv == path.agv && s.position.resource(&inst.graph) == first.resource && s.earliest == first.occupation.start
    }) {
        return Err("path does not start at a source".into());
    }
    let final_stop = inst.route.stages.last().unwrap().min_stop;
    if final_stop.is_infinite() != path.end().unwrap().is_infinite() {
        return Err("final step does not match the final stop".into());
    }
    if path.stage_arrivals.len() != inst.route.stages.len() || path.stage_arrivals.last() != Some(&path.arrival) {
        return Err("stage arrivals do not match the route".into());
    }
    Ok(())
}
