//! Moving every AGV from an arbitrary start to an anchor it can hold forever.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::geo::{BoundaryReserver, GeoError};
use crate::graph::{GeoLinks, Guide, NodeId, ResourceGraph, ResourceId};
use crate::pathing::{PlanError, Position, Route, Search, SourceSpec, Stage, TimePath};
use crate::time::{AgvId, Interval, TimePoint};
use crate::time_graph::{Reservation, TimeGraph, TimeGraphError};

/// Start position of every AGV; AGV `i` starts at `positions[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Placement {
    pub positions: Vec<Position>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnchorError {
    #[error("invalid placement: {0}")]
    InvalidPlacement(String),
    #[error("anchorisation stalled with {} AGVs unanchored", .unanchored.len())]
    Stalled { unanchored: Vec<AgvId> },
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    TimeGraph(#[from] TimeGraphError),
}

impl Placement {
    pub fn new(positions: Vec<Position>) -> Self {
        Placement { positions }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn agvs(&self) -> impl Iterator<Item = AgvId> {
        (0..self.positions.len() as u32).map(AgvId)
    }

    pub fn resource(&self, g: &ResourceGraph, agv: AgvId) -> ResourceId {
        self.positions[agv.index()].resource(g)
    }

    /// Checks that every position exists and no two AGVs share a resource.
    pub fn validate(&self, g: &ResourceGraph) -> Result<(), AnchorError> {
        let mut seen = vec![false; g.resource_count()];
        for (i, p) in self.positions.iter().enumerate() {
            if let Position::Node { node } = p {
                if node.index() >= g.node_count() {
                    return Err(AnchorError::InvalidPlacement(format!("AGV {i} is on unknown node {}", node.0)));
                }
            }
            p.remaining(g).map_err(|e| AnchorError::InvalidPlacement(format!("AGV {i}: {e}")))?;
            let r = p.resource(g);
            if std::mem::replace(&mut seen[r.index()], true) {
                return Err(AnchorError::InvalidPlacement(format!("resource {r} holds more than one AGV")));
            }
        }
        Ok(())
    }

    /// Search sources for `agv` at time zero. An AGV on an undirected edge
    /// may leave through either end.
    pub fn sources(&self, g: &ResourceGraph, agv: AgvId) -> Vec<SourceSpec> {
        match self.positions[agv.index()] {
            Position::Node { node } => vec![SourceSpec::at_node(agv, node, 0)],
            Position::Edge { edge, elapsed, toward } => {
                let e = g.edge(edge);
                let mut out = vec![SourceSpec::on_edge(agv, edge, elapsed, toward, 0)];
                if !e.directed {
                    out.push(SourceSpec::on_edge(agv, edge, elapsed, e.other(toward), 0));
                }
                out
            }
        }
    }

    /// The indefinite reservations held by `agv` before it is anchored.
    pub fn initial_reservations(&self, g: &ResourceGraph, links: &GeoLinks, agv: AgvId) -> Vec<Reservation> {
        links.footprint(self.resource(g, agv)).map(|r| Reservation::new(r, agv, Interval::starting_at(0))).collect()
    }
}

/// Reserves `[0, inf)` on every AGV's start footprint.
pub fn initialise_reservations(
    tg: &mut TimeGraph,
    g: &ResourceGraph,
    links: &GeoLinks,
    placement: &Placement,
) -> Result<(), AnchorError> {
    placement.validate(g)?;
    for agv in placement.agvs() {
        tg.reserve_all(&placement.initial_reservations(g, links, agv))?;
    }
    Ok(())
}

/// Anchors that no AGV outside `allowed` holds indefinitely.
pub fn free_anchors(tg: &TimeGraph, g: &ResourceGraph, allowed: impl Fn(AgvId) -> bool) -> Vec<NodeId> {
    g.anchors()
        .filter(|&a| match tg.tree(g.node_resource(a)).iter().last() {
            Some((ivl, holders)) if ivl.end.is_infinite() => holders.iter().all(&allowed),
            _ => true,
        })
        .collect()
}

/// Result of a successful anchorisation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Anchored {
    /// Anchoring path of AGV `i` at index `i`.
    pub paths: Vec<TimePath>,
    /// Geographic reservations committed for each path.
    pub reservations: Vec<Vec<Reservation>>,
    /// AGVs in the order they were anchored.
    pub order: Vec<AgvId>,
    /// Time-path searches run.
    pub attempts: u64,
}

struct Progress<'a> {
    g: &'a ResourceGraph,
    links: &'a GeoLinks,
    placement: &'a Placement,
    paths: Vec<Option<TimePath>>,
    reservations: Vec<Vec<Reservation>>,
    order: Vec<AgvId>,
    attempts: u64,
    reserver: BoundaryReserver,
}

impl<'a> Progress<'a> {
    fn new(g: &'a ResourceGraph, links: &'a GeoLinks, placement: &'a Placement) -> Result<Self, AnchorError> {
        placement.validate(g)?;
        let n = placement.len();
        Ok(Progress {
            g,
            links,
            placement,
            paths: vec![None; n],
            reservations: vec![Vec::new(); n],
            order: Vec::with_capacity(n),
            attempts: 0,
            reserver: BoundaryReserver::new(),
        })
    }

    fn unanchored(&self) -> Vec<AgvId> {
        self.placement.agvs().filter(|a| self.paths[a.index()].is_none()).collect()
    }

    /// Swaps the AGV's initial hold for the reservations of its path.
    fn commit(&mut self, tg: &mut TimeGraph, path: TimePath) -> Result<(), AnchorError> {
        let agv = path.agv;
        let rs = self.reserver.reserve(&path, self.links)?;
        tg.remove_all(&self.placement.initial_reservations(self.g, self.links, agv))?;
        tg.reserve_all(&rs)?;
        self.reservations[agv.index()] = rs;
        self.paths[agv.index()] = Some(path);
        self.order.push(agv);
        Ok(())
    }

    fn finish(self) -> Anchored {
        Anchored {
            paths: self.paths.into_iter().map(|p| p.expect("every AGV anchored")).collect(),
            reservations: self.reservations,
            order: self.order,
            attempts: self.attempts,
        }
    }
}

/// Anchors AGVs one at a time in seeded random order, repeating passes over
/// the remaining AGVs until all are anchored or a pass makes no progress.
///
/// Expects [`initialise_reservations`] to have been applied to `tg`.
pub fn naive_anchorise(
    tg: &mut TimeGraph,
    g: &ResourceGraph,
    links: &GeoLinks,
    placement: &Placement,
    guide: Guide<'_>,
    rng: &mut impl Rng,
) -> Result<Anchored, AnchorError> {
    let mut progress = Progress::new(g, links, placement)?;
    loop {
        let mut pending = progress.unanchored();
        if pending.is_empty() {
            return Ok(progress.finish());
        }
        pending.shuffle(rng);
        let mut anchored_any = false;
        for agv in pending {
            progress.attempts += 1;
            let targets = free_anchors(tg, g, |a| a == agv);
            if targets.is_empty() {
                continue;
            }
            let route = Route::new(vec![Stage::park(targets)]);
            let found = Search::new(tg, g, guide).run(&placement.sources(g, agv), &route)?;
            if let Some(path) = found {
                progress.commit(tg, path)?;
                anchored_any = true;
            }
        }
        if !anchored_any {
            return Err(AnchorError::Stalled { unanchored: progress.unanchored() });
        }
    }
}

/// Anchors one AGV per round using a single search seeded from every
/// unanchored AGV; the earliest arrival wins, ties going to the lower id.
///
/// Expects [`initialise_reservations`] to have been applied to `tg`.
pub fn greedy_anchorise(
    tg: &mut TimeGraph,
    g: &ResourceGraph,
    links: &GeoLinks,
    placement: &Placement,
    guide: Guide<'_>,
) -> Result<Anchored, AnchorError> {
    let mut progress = Progress::new(g, links, placement)?;
    loop {
        let pending = progress.unanchored();
        if pending.is_empty() {
            return Ok(progress.finish());
        }
        progress.attempts += 1;
        let mut is_pending = vec![false; placement.len()];
        pending.iter().for_each(|a| is_pending[a.index()] = true);
        let targets = free_anchors(tg, g, |a| is_pending.get(a.index()).copied().unwrap_or(false));
        let sources: Vec<SourceSpec> = pending.iter().flat_map(|&a| placement.sources(g, a)).collect();
        let found = if targets.is_empty() {
            None
        } else {
            Search::new(tg, g, guide).run(&sources, &Route::new(vec![Stage::park(targets)]))?
        };
        match found {
            Some(path) => progress.commit(tg, path)?,
            None => return Err(AnchorError::Stalled { unanchored: pending }),
        }
    }
}

/// Checks that every path ends parked on an anchor and no two share one.
pub fn check_anchored<'a>(g: &ResourceGraph, paths: impl IntoIterator<Item = &'a TimePath>) -> Result<(), String> {
    let mut taken = vec![false; g.node_count()];
    for p in paths {
        let last = p.steps.last().ok_or_else(|| format!("AGV {} has an empty path", p.agv))?;
        let node = match g.kind(last.resource) {
            crate::graph::ResourceKind::Node(n) if g.is_anchor(n) => n,
            _ => return Err(format!("AGV {} does not end on an anchor", p.agv)),
        };
        if last.occupation.end != TimePoint::INFINITY {
            return Err(format!("AGV {} does not park indefinitely", p.agv));
        }
        if std::mem::replace(&mut taken[node.index()], true) {
            return Err(format!("anchor {} is shared", node.0));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_adjacency_links, build_grid, Edge, EdgeId, Node};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(g: &ResourceGraph, links: &GeoLinks, placement: &Placement) -> TimeGraph {
        let mut tg = TimeGraph::new(g.resource_count());
        initialise_reservations(&mut tg, g, links, placement).unwrap();
        tg
    }

    fn at(node: NodeId) -> Position {
        Position::Node { node }
    }

    #[test]
    fn initial_hold_blocks_others_only() {
        let g = build_grid(4, 5000).unwrap();
        let links = build_adjacency_links(&g, 1);
        let v = g.node_at(1, 1).unwrap();
        let tg = setup(&g, &links, &Placement::new(vec![at(v)]));
        let tree = tg.tree(g.node_resource(v));
        assert!(tree.gap_query(AgvId(1), Interval::starting_at(0)).is_empty());
        assert_eq!(tree.gap_query(AgvId(0), Interval::starting_at(0)), vec![Interval::starting_at(0)]);
    }

    #[test]
    fn already_on_anchor_stays() {
        let g = build_grid(4, 5000).unwrap();
        let links = build_adjacency_links(&g, 1);
        let anchor = g.anchors().next().unwrap();
        let placement = Placement::new(vec![at(anchor)]);
        let mut tg = setup(&g, &links, &placement);
        let out =
            naive_anchorise(&mut tg, &g, &links, &placement, Guide::Zero, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let p = &out.paths[0];
        assert_eq!(p.arrival, TimePoint::ZERO);
        assert_eq!(p.steps.len(), 1);
        assert_eq!(p.steps[0].occupation, Interval::starting_at(0));
    }

    #[test]
    fn interior_agv_takes_one_edge() {
        let g = build_grid(4, 5000).unwrap();
        let links = build_adjacency_links(&g, 1);
        let placement = Placement::new(vec![at(g.node_at(1, 1).unwrap())]);
        let mut tg = setup(&g, &links, &placement);
        let out =
            naive_anchorise(&mut tg, &g, &links, &placement, Guide::Zero, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(out.attempts, 1);
        assert_eq!(out.paths[0].arrival, TimePoint::new(5000));
        assert_eq!(out.paths[0].distance(&g), 5000);
        check_anchored(&g, &out.paths).unwrap();
        tg.audit_safety(&out.paths).unwrap();

        let mut tg2 = setup(&g, &links, &placement);
        let greedy = greedy_anchorise(&mut tg2, &g, &links, &placement, Guide::Zero).unwrap();
        assert_eq!(greedy.paths, out.paths);
        assert_eq!(tg2, tg);
    }

    #[test]
    fn nearest_agv_anchors_first_in_greedy() {
        // anchor(0) -10- 1 -10- 2 -10- 3 -3- anchor(4); AGV 1 starts on node 3.
        let node = |anchor| Node { pos: None, anchor, subdivision: false };
        let nodes = vec![node(true), node(false), node(false), node(false), node(true)];
        let w = [10, 10, 10, 3];
        let edges =
            (0..4).map(|i| Edge { a: NodeId(i), b: NodeId(i + 1), weight: w[i as usize], directed: false }).collect();
        let g = ResourceGraph::new(nodes, edges).unwrap();
        let links = GeoLinks::none(g.resource_count());
        let placement = Placement::new(vec![at(NodeId(1)), at(NodeId(3))]);
        let mut tg = setup(&g, &links, &placement);
        let out = greedy_anchorise(&mut tg, &g, &links, &placement, Guide::Zero).unwrap();
        assert_eq!(out.order, vec![AgvId(1), AgvId(0)]);
        assert_eq!(out.paths[1].arrival, TimePoint::new(3));
        assert_eq!(out.attempts, 2);
    }

    #[test]
    fn edge_placement_may_reverse() {
        // anchor(0) -e0(10)- 1 -e1(10)- 2(anchor); AGV 2 ticks along e0 toward 1.
        let node = |anchor| Node { pos: None, anchor, subdivision: false };
        let edges = vec![
            Edge { a: NodeId(0), b: NodeId(1), weight: 10, directed: false },
            Edge { a: NodeId(1), b: NodeId(2), weight: 10, directed: false },
        ];
        let g = ResourceGraph::new(vec![node(true), node(false), node(true)], edges).unwrap();
        let links = GeoLinks::none(g.resource_count());
        let placement = Placement::new(vec![Position::Edge { edge: EdgeId(0), elapsed: 2, toward: NodeId(1) }]);
        let mut tg = setup(&g, &links, &placement);
        let out = greedy_anchorise(&mut tg, &g, &links, &placement, Guide::Zero).unwrap();
        assert_eq!(out.paths[0].arrival, TimePoint::new(2));
        assert_eq!(out.paths[0].steps.last().unwrap().resource, g.node_resource(NodeId(0)));
    }

    #[test]
    fn placement_validation() {
        let g = build_grid(4, 5000).unwrap();
        let v = g.node_at(1, 1).unwrap();
        assert!(Placement::new(vec![at(v), at(v)]).validate(&g).is_err());
        assert!(Placement::new(vec![at(NodeId(999))]).validate(&g).is_err());
        let bad_edge = Position::Edge { edge: EdgeId(0), elapsed: 5000, toward: g.edge(EdgeId(0)).b };
        assert!(Placement::new(vec![bad_edge]).validate(&g).is_err());
    }

    #[test]
    fn too_few_anchors_stalls() {
        // One anchor, two AGVs: the second can never park.
        let node = |anchor| Node { pos: None, anchor, subdivision: false };
        let edges = vec![
            Edge { a: NodeId(0), b: NodeId(1), weight: 1, directed: false },
            Edge { a: NodeId(1), b: NodeId(2), weight: 1, directed: false },
        ];
        let g = ResourceGraph::new(vec![node(true), node(false), node(false)], edges).unwrap();
        let links = GeoLinks::none(g.resource_count());
        let placement = Placement::new(vec![at(NodeId(1)), at(NodeId(2))]);
        let mut tg = setup(&g, &links, &placement);
        let err = naive_anchorise(&mut tg, &g, &links, &placement, Guide::Zero, &mut ChaCha8Rng::seed_from_u64(3));
        assert!(matches!(err, Err(AnchorError::Stalled { .. })));
        let mut tg = setup(&g, &links, &placement);
        let err = greedy_anchorise(&mut tg, &g, &links, &placement, Guide::Zero);
        assert!(matches!(err, Err(AnchorError::Stalled { .. })));
    }
}
