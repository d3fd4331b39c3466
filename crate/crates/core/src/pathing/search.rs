use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rustc_hash::FxHashMap;

use crate::graph::{EdgeId, Guide, NodeId, ResourceGraph};
use crate::time::{AgvId, Interval, TimePoint};
use crate::time_graph::TimeGraph;

use super::{PlanError, Position, ResourceMask, Route, RouteBound, SourceSpec, Step, TimePath};

/// Counters from one search.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub labels_created: u64,
    pub labels_expanded: u64,
    pub labels_pruned: u64,
}

#[derive(Clone, Copy, Debug)]
enum Via {
    Source,
    /// Finished the remainder of a source edge that started at `start`.
    EdgeStart {
        edge: EdgeId,
        start: TimePoint,
    },
    Edge {
        edge: EdgeId,
        depart: TimePoint,
    },
    /// Completed the previous stage's stop at this node.
    Stage,
}

#[derive(Clone, Copy, Debug)]
struct Label {
    node: NodeId,
    gap: Interval,
    entry: TimePoint,
    stage: u32,
    agv: AgvId,
    parent: Option<u32>,
    via: Via,
}

type Key = (NodeId, TimePoint, u32, AgvId);
/// (priority, entry, higher stage first, node resource, agv, label index).
type QueueItem = Reverse<(TimePoint, TimePoint, Reverse<u32>, u32, AgvId, u32)>;

#[derive(Clone, Copy)]
struct Best {
    entry: TimePoint,
    closed: bool,
}

/// Configurable time-path search.
///
/// ```
/// use anchorpath::graph::{build_grid, Guide};
/// use anchorpath::pathing::{Route, Search, SourceSpec, Stage};
/// use anchorpath::time_graph::TimeGraph;
/// use anchorpath::AgvId;
///
/// let g = build_grid(4, 5000).unwrap();
/// let tg = TimeGraph::new(g.resource_count());
/// let (from, to) = (g.node_at(1, 1).unwrap(), g.node_at(2, 2).unwrap());
/// let route = Route::new(vec![Stage::new(vec![to], 0)]);
/// let path = Search::new(&tg, &g, Guide::Manhattan)
///     .run(&[SourceSpec::at_node(AgvId(0), from, 0)], &route)
///     .unwrap()
///     .unwrap();
/// assert_eq!(path.arrival.ticks(), Some(10_000));
/// ```
pub struct Search<'a> {
    tg: &'a TimeGraph,
    g: &'a ResourceGraph,
    guide: Guide<'a>,
    mask: Option<&'a ResourceMask>,
    stats: SearchStats,
}

/// Earliest-arrival time-path from any of `sources` through every stage of
/// `route`; `Ok(None)` when none exists.
pub fn time_path(
    tg: &TimeGraph,
    g: &ResourceGraph,
    sources: &[SourceSpec],
    route: &Route,
    guide: Guide<'_>,
) -> Result<Option<TimePath>, PlanError> {
    Search::new(tg, g, guide).run(sources, route)
}

impl<'a> Search<'a> {
    pub fn new(tg: &'a TimeGraph, g: &'a ResourceGraph, guide: Guide<'a>) -> Self {
        Search { tg, g, guide, mask: None, stats: SearchStats::default() }
    }

    /// Restricts the search to the resources in `mask`.
    pub fn within(mut self, mask: &'a ResourceMask) -> Self {
        self.mask = Some(mask);
        self
    }

    pub fn stats(&self) -> SearchStats {
        self.stats
    }

    fn allowed(&self, r: crate::graph::ResourceId) -> bool {
        self.mask.is_none_or(|m| m.contains(r))
    }

    pub fn run(&mut self, sources: &[SourceSpec], route: &Route) -> Result<Option<TimePath>, PlanError> {
        route.validate(self.g)?;
        if sources.is_empty() {
            return Err(PlanError::BadSource("no sources".into()));
        }
        if self.tg.resource_count() < self.g.resource_count() {
            return Err(PlanError::BadSource("time graph does not cover the resource graph".into()));
        }
        let bound = RouteBound::new(self.g, self.guide, route)?;
        let n = self.g.node_count();
        let last = route.stages.len() - 1;
        let mut is_target = vec![false; route.stages.len() * n];
        for (k, stage) in route.stages.iter().enumerate() {
            for t in &stage.targets {
                is_target[k * n + t.index()] = true;
            }
        }

        let mut labels: Vec<Label> = Vec::new();
        let mut best: FxHashMap<Key, Best> = FxHashMap::default();
        let mut queue: BinaryHeap<QueueItem> = BinaryHeap::new();

        for src in sources {
            if let Some(label) = self.source_label(src)? {
                self.push(label, &bound, &mut labels, &mut best, &mut queue);
            }
        }

        // (arrival, agv, label)
        let mut goal: Option<(TimePoint, AgvId, u32, TimePoint)> = None;
        while let Some(Reverse((priority, _, _, _, _, idx))) = queue.pop() {
            if let Some((_, _, _, goal_priority)) = goal {
                if priority > goal_priority {
                    break;
                }
            }
            let label = labels[idx as usize];
            let key = (label.node, label.gap.start, label.stage, label.agv);
            let slot = best.get_mut(&key).expect("queued labels are recorded");
            if slot.closed || slot.entry < label.entry {
                continue;
            }
            slot.closed = true;
            self.stats.labels_expanded += 1;

            let stage = label.stage as usize;
            let stop = route.stages[stage].min_stop;
            if is_target[stage * n + label.node.index()] {
                if stage == last {
                    let done = if stop.is_infinite() {
                        label.gap.end.is_infinite()
                    } else {
                        label.entry + stop.raw() <= label.gap.end
                    };
                    if done {
                        let better = goal.is_none_or(|(a, agv, _, _)| (label.entry, label.agv) < (a, agv));
                        if better {
                            goal = Some((label.entry, label.agv, idx, priority));
                        }
                        continue;
                    }
                } else {
                    let next_entry = label.entry + stop.raw();
                    if next_entry <= label.gap.end {
                        let child = Label {
                            entry: next_entry,
                            stage: label.stage + 1,
                            parent: Some(idx),
                            via: Via::Stage,
                            ..label
                        };
                        self.push(child, &bound, &mut labels, &mut best, &mut queue);
                    }
                }
            }
            self.expand(idx, &label, &bound, &mut labels, &mut best, &mut queue);
        }

        Ok(goal.map(|(_, _, idx, _)| self.reconstruct(&labels, idx, route)))
    }

    fn source_label(&mut self, src: &SourceSpec) -> Result<Option<Label>, PlanError> {
        let g = self.g;
        if src.earliest.is_infinite() {
            return Err(PlanError::BadSource("earliest departure is infinite".into()));
        }
        let res = match src.position {
            Position::Node { node } if node.index() >= g.node_count() => {
                return Err(PlanError::BadSource(format!("unknown node {}", node.0)))
            }
            p => p.resource(g),
        };
        if !self.allowed(res) {
            return Err(PlanError::BadSource(format!("source resource {res} is outside the search mask")));
        }
        let (node, entry, via) = match src.position {
            Position::Node { node } => (node, src.earliest, Via::Source),
            Position::Edge { edge, toward, .. } => {
                let remaining = src.position.remaining(g)?.expect("edge positions have a remainder");
                let arrive = src.earliest + remaining;
                let occupied = Interval::new(src.earliest, arrive);
                let free = self.tg.tree(res).gap_query(src.agv, occupied);
                if free.first() != Some(&occupied) || !self.allowed(g.node_resource(toward)) {
                    return Ok(None);
                }
                (toward, arrive, Via::EdgeStart { edge, start: src.earliest })
            }
        };
        let gap = self.tg.tree(g.node_resource(node)).gap_containing(src.agv, entry);
        Ok(gap.map(|gap| Label { node, gap, entry, stage: 0, agv: src.agv, parent: None, via }))
    }

    fn push(
        &mut self,
        label: Label,
        bound: &RouteBound<'_>,
        labels: &mut Vec<Label>,
        best: &mut FxHashMap<Key, Best>,
        queue: &mut BinaryHeap<QueueItem>,
    ) {
        let Some(h) = bound.at(label.node, label.stage as usize) else {
            self.stats.labels_pruned += 1;
            return;
        };
        let key = (label.node, label.gap.start, label.stage, label.agv);
        match best.get_mut(&key) {
            Some(b) if b.closed || b.entry <= label.entry => {
                self.stats.labels_pruned += 1;
                return;
            }
            Some(b) => b.entry = label.entry,
            None => {
                best.insert(key, Best { entry: label.entry, closed: false });
            }
        }
        let idx = labels.len() as u32;
        labels.push(label);
        self.stats.labels_created += 1;
        let resource = self.g.node_resource(label.node).0;
        queue.push(Reverse((label.entry + h, label.entry, Reverse(label.stage), resource, label.agv, idx)));
    }

    /// Waits at the label's node, then crosses each outgoing edge to the
    /// earliest reachable entry of every gap of the far node.
    fn expand(
        &mut self,
        idx: u32,
        label: &Label,
        bound: &RouteBound<'_>,
        labels: &mut Vec<Label>,
        best: &mut FxHashMap<Key, Best>,
        queue: &mut BinaryHeap<QueueItem>,
    ) {
        let g = self.g;
        let agv = label.agv;
        for &(edge, head) in g.outgoing(label.node) {
            let (er, hr) = (g.edge_resource(edge), g.node_resource(head));
            if !self.allowed(er) || !self.allowed(hr) {
                continue;
            }
            let w = g.edge(edge).weight;
            let window = Interval::new(label.entry, label.gap.end + w);
            for eg in self.tg.tree(er).gaps_overlapping(agv, window) {
                let lo = label.entry.max(eg.start);
                let hi = label.gap.end.min(eg.end.saturating_sub(w));
                if eg.end.is_finite() && eg.end.raw() < w || lo > hi {
                    continue;
                }
                let arrive_window = Interval::new(lo + w, (hi + w) + 1);
                for ng in self.tg.tree(hr).gaps_overlapping(agv, arrive_window) {
                    let arrive = (lo + w).max(ng.start);
                    if arrive > hi + w || arrive >= ng.end {
                        continue;
                    }
                    let depart = TimePoint::new(arrive.raw() - w);
                    let child = Label {
                        node: head,
                        gap: ng,
                        entry: arrive,
                        stage: label.stage,
                        agv,
                        parent: Some(idx),
                        via: Via::Edge { edge, depart },
                    };
                    self.push(child, bound, labels, best, queue);
                }
            }
        }
    }

    fn reconstruct(&self, labels: &[Label], goal: u32, route: &Route) -> TimePath {
        let g = self.g;
        let mut chain = vec![labels[goal as usize]];
        while let Some(p) = chain.last().unwrap().parent {
            chain.push(labels[p as usize]);
        }
        chain.reverse();

        let mut steps = Vec::new();
        let mut stage_arrivals = Vec::new();
        let first = chain[0];
        if let Via::EdgeStart { edge, start } = first.via {
            steps.push(Step { resource: g.edge_resource(edge), occupation: Interval::new(start, first.entry) });
        }
        let mut node_since = first.entry;
        for pair in chain.windows(2) {
            let (prev, cur) = (pair[0], pair[1]);
            match cur.via {
                Via::Edge { edge, depart } => {
                    steps.push(Step {
                        resource: g.node_resource(prev.node),
                        occupation: Interval::new(node_since, depart),
                    });
                    steps.push(Step { resource: g.edge_resource(edge), occupation: Interval::new(depart, cur.entry) });
                    node_since = cur.entry;
                }
                Via::Stage => stage_arrivals.push(prev.entry),
                Via::Source | Via::EdgeStart { .. } => unreachable!("only the root label is a source"),
            }
        }
        let end = chain.last().unwrap();
        stage_arrivals.push(end.entry);
        let stop = route.stages.last().unwrap().min_stop;
        let until = if stop.is_infinite() { TimePoint::INFINITY } else { end.entry + stop.raw() };
        steps.push(Step { resource: g.node_resource(end.node), occupation: Interval::new(node_since, until) });
        TimePath { agv: end.agv, steps, arrival: end.entry, stage_arrivals }
    }
}
