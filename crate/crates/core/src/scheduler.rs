//! Conservative myopic timetable construction for online demands.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::anchor::{
    free_anchors, greedy_anchorise, initialise_reservations, naive_anchorise, AnchorError, Anchored, Placement,
};
use crate::geo::{BoundaryReserver, GeoError};
use crate::graph::{GeoLinks, Guide, NodeId, ResourceGraph, ResourceKind, Violation};
use crate::pathing::{build_partial_subgraph, PlanError, Route, Search, SourceSpec, Stage, TimePath, Topology};
use crate::time::{AgvId, Interval, TimePoint};
use crate::time_graph::{Reservation, TimeGraph, TimeGraphError};

/// Move an item from `pickup` to `dropoff`, released at `horizon`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demand {
    pub id: u32,
    pub pickup: NodeId,
    pub dropoff: NodeId,
    #[serde(default)]
    pub horizon: TimePoint,
}

/// Search configuration for demand routes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Whole graph, no guidance.
    FullZero,
    /// Whole graph, manhattan guidance.
    FullManhattan,
    /// Chain subgraph from unguided spatial paths.
    PartialDijkstras,
    /// Chain subgraph from manhattan-guided spatial paths.
    PartialManhattan,
}

impl Preset {
    pub const ALL: [Preset; 4] =
        [Preset::FullZero, Preset::FullManhattan, Preset::PartialDijkstras, Preset::PartialManhattan];

    pub fn name(self) -> &'static str {
        match self {
            Preset::FullZero => "full-zero",
            Preset::FullManhattan => "full-manhattan",
            Preset::PartialDijkstras => "partial-dijkstras",
            Preset::PartialManhattan => "partial-manhattan",
        }
    }

    fn guide(self) -> Guide<'static> {
        match self {
            Preset::FullManhattan | Preset::PartialManhattan => Guide::Manhattan,
            Preset::FullZero | Preset::PartialDijkstras => Guide::Zero,
        }
    }
}

/// How the initial placement is anchored.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Anchoriser {
    Naive,
    Greedy,
}

impl Anchoriser {
    pub fn name(self) -> &'static str {
        match self {
            Anchoriser::Naive => "naive",
            Anchoriser::Greedy => "greedy",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown name {0:?}")]
pub struct UnknownName(String);

impl FromStr for Preset {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| UnknownName(s.into()))
    }
}

impl FromStr for Anchoriser {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Anchoriser::Naive, Anchoriser::Greedy].into_iter().find(|a| a.name() == s).ok_or_else(|| UnknownName(s.into()))
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for Anchoriser {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Config {
    pub preset: Preset,
    pub anchoriser: Anchoriser,
    pub stop_pickup: u64,
    pub stop_dropoff: u64,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            preset: Preset::FullManhattan,
            anchoriser: Anchoriser::Greedy,
            stop_pickup: 0,
            stop_dropoff: 0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScheduleError {
    #[error("graph violates assumption {}: {0:?}", .0.assumption())]
    InvalidGraph(Violation),
    #[error("demand {id}: {reason}")]
    InvalidDemand { id: u32, reason: String },
    #[error("no time-path for demand {demand} on AGV {agv}")]
    NoPath { demand: u32, agv: AgvId },
    #[error(transparent)]
    Anchor(#[from] AnchorError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    TimeGraph(#[from] TimeGraphError),
}

/// One planned demand.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Job {
    pub demand: u32,
    pub agv: AgvId,
    pub anchor: NodeId,
    pub depart: TimePoint,
    pub arrival: TimePoint,
}

/// Committed plans for every AGV plus the resulting time graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Timetable {
    /// Paths of AGV `i` at index `i`, in execution order. The first is its
    /// anchoring path; consecutive paths join at a shared instant.
    pub paths: Vec<Vec<TimePath>>,
    pub jobs: Vec<Job>,
    pub anchoring: Anchored,
    pub time_graph: TimeGraph,
    /// Time-path searches run for demands.
    pub searches: u64,
    /// Labels expanded across demand searches.
    pub labels_expanded: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metrics {
    pub makespan: u64,
    pub total_distance: u64,
}

impl Timetable {
    pub fn agv_count(&self) -> usize {
        self.paths.len()
    }

    /// Every committed path.
    pub fn all_paths(&self) -> impl Iterator<Item = &TimePath> {
        self.paths.iter().flatten()
    }

    /// Parked arrival of each AGV's final path.
    pub fn final_arrivals(&self) -> impl Iterator<Item = TimePoint> + '_ {
        self.paths.iter().filter_map(|ps| ps.last()).map(|p| p.arrival)
    }

    /// Checks that every AGV ends parked on a distinct anchor.
    pub fn check_anchored(&self, g: &ResourceGraph) -> Result<(), String> {
        crate::anchor::check_anchored(g, self.paths.iter().filter_map(|ps| ps.last()))
    }

    /// Timetable JSON: `{agvs:[{id, steps:[{resource,start,end}]}], metrics}`.
    pub fn to_json(&self, g: &ResourceGraph) -> String {
        #[derive(Serialize)]
        struct StepOut {
            resource: crate::graph::ResourceId,
            start: TimePoint,
            end: TimePoint,
        }
        #[derive(Serialize)]
        struct AgvOut {
            id: AgvId,
            steps: Vec<StepOut>,
        }
        #[derive(Serialize)]
        struct Out {
            agvs: Vec<AgvOut>,
            metrics: Metrics,
        }
        let agvs = self
            .paths
            .iter()
            .enumerate()
            .map(|(i, ps)| AgvOut {
                id: AgvId(i as u32),
                steps: ps
                    .iter()
                    .flat_map(|p| &p.steps)
                    .map(|s| StepOut { resource: s.resource, start: s.occupation.start, end: s.occupation.end })
                    .collect(),
            })
            .collect();
        serde_json::to_string_pretty(&Out { agvs, metrics: metrics(self, g) }).expect("timetable serialises")
    }
}

/// Makespan is the latest final parking time; distance sums edge traversal.
pub fn metrics(tt: &Timetable, g: &ResourceGraph) -> Metrics {
    Metrics {
        makespan: tt.final_arrivals().filter_map(TimePoint::ticks).max().unwrap_or(0),
        total_distance: tt.all_paths().map(|p| p.distance(g)).sum(),
    }
}

fn check_demand(g: &ResourceGraph, d: &Demand) -> Result<(), ScheduleError> {
    let bad = |reason: String| Err(ScheduleError::InvalidDemand { id: d.id, reason });
    for (what, n) in [("pickup", d.pickup), ("dropoff", d.dropoff)] {
        if n.index() >= g.node_count() {
            return bad(format!("{what} node {} does not exist", n.0));
        }
        if g.is_anchor(n) {
            return bad(format!("{what} node {} is an anchor", n.0));
        }
        if g.node(n).subdivision {
            return bad(format!("{what} node {} is a subdivision node", n.0));
        }
    }
    if d.horizon.is_infinite() {
        return bad("horizon is infinite".into());
    }
    Ok(())
}

struct Builder<'a> {
    g: &'a ResourceGraph,
    links: &'a GeoLinks,
    config: Config,
    tg: TimeGraph,
    paths: Vec<Vec<TimePath>>,
    reserver: BoundaryReserver,
    searches: u64,
    labels_expanded: u64,
}

impl Builder<'_> {
    fn plan(&mut self, demand: &Demand, agv: AgvId, rng: &mut ChaCha8Rng) -> Result<Job, ScheduleError> {
        let g = self.g;
        let prev = self.paths[agv.index()].last().expect("anchored AGVs have a path");
        let here = match g.kind(prev.last_resource().unwrap()) {
            ResourceKind::Node(n) => n,
            ResourceKind::Edge(_) => unreachable!("anchored paths end on a node"),
        };
        let depart = demand.horizon.max(prev.arrival);

        let choices = free_anchors(&self.tg, g, |a| a == agv);
        let anchor = *choices.choose(rng).expect("an AGV's own anchor is always free to it");
        let route = Route::new(vec![
            Stage::new(vec![demand.pickup], self.config.stop_pickup),
            Stage::new(vec![demand.dropoff], self.config.stop_dropoff),
            Stage::park(vec![anchor]),
        ]);

        // Hand back the parked footprint from `depart` onward.
        let release: Vec<Reservation> = self
            .links
            .footprint(g.node_resource(here))
            .map(|r| Reservation::new(r, agv, Interval::starting_at(depart)))
            .collect();
        self.tg.remove_all(&release)?;

        let sources = [SourceSpec::at_node(agv, here, depart)];
        let preset = self.config.preset;
        let mask = match preset {
            Preset::PartialDijkstras | Preset::PartialManhattan => {
                Some(build_partial_subgraph(g, &prev.resources(), here, &route, Topology::Chain, preset.guide())?)
            }
            Preset::FullZero | Preset::FullManhattan => None,
        };
        let mut search = match &mask {
            Some(mask) => Search::new(&self.tg, g, Guide::Zero).within(mask),
            None => Search::new(&self.tg, g, preset.guide()),
        };
        let found = search.run(&sources, &route)?;
        self.searches += 1;
        self.labels_expanded += search.stats().labels_expanded;
        let path = found.ok_or(ScheduleError::NoPath { demand: demand.id, agv })?;

        let rs = self.reserver.reserve(&path, self.links)?;
        self.tg.reserve_all(&rs)?;
        let prev = self.paths[agv.index()].last_mut().unwrap();
        let last = prev.steps.last_mut().unwrap();
        last.occupation = Interval::new(last.occupation.start, depart);
        let job = Job { demand: demand.id, agv, anchor, depart, arrival: path.arrival };
        self.paths[agv.index()].push(path);
        Ok(job)
    }
}

/// Anchors the fleet, then plans demands batch by batch in horizon order.
///
/// Within a batch each demand goes to a uniformly random AGV, demands are
/// planned in a random order, and each route parks on a random anchor that no
/// other AGV holds indefinitely. Earlier commitments are never changed except
/// to end an AGV's parking when it next departs.
pub fn build_timetable(
    g: &ResourceGraph,
    links: &GeoLinks,
    placement: &Placement,
    demands: &[Demand],
    config: &Config,
) -> Result<Timetable, ScheduleError> {
    g.validate(placement.len()).map_err(ScheduleError::InvalidGraph)?;
    for d in demands {
        check_demand(g, d)?;
        if placement.is_empty() {
            return Err(ScheduleError::InvalidDemand { id: d.id, reason: "there are no AGVs".into() });
        }
    }
    let guide = config.preset.guide();
    guide.check(g).map_err(PlanError::from)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut tg = TimeGraph::new(g.resource_count());
    initialise_reservations(&mut tg, g, links, placement)?;
    let anchoring = match config.anchoriser {
        Anchoriser::Naive => naive_anchorise(&mut tg, g, links, placement, guide, &mut rng)?,
        Anchoriser::Greedy => greedy_anchorise(&mut tg, g, links, placement, guide)?,
    };

    let mut builder = Builder {
        g,
        links,
        config: *config,
        tg,
        paths: anchoring.paths.iter().map(|p| vec![p.clone()]).collect(),
        reserver: BoundaryReserver::new(),
        searches: 0,
        labels_expanded: 0,
    };
    let mut jobs = Vec::with_capacity(demands.len());
    let mut pending: Vec<&Demand> = demands.iter().collect();
    pending.sort_by_key(|d| d.horizon);
    let n = placement.len();
    for batch in pending.chunk_by(|a, b| a.horizon == b.horizon) {
        let mut assigned: Vec<(&Demand, AgvId)> =
            batch.iter().map(|&d| (d, AgvId(rng.gen_range(0..n as u32)))).collect();
        assigned.shuffle(&mut rng);
        for (demand, agv) in assigned {
            jobs.push(builder.plan(demand, agv, &mut rng)?);
        }
    }

    Ok(Timetable {
        paths: builder.paths,
        jobs,
        anchoring,
        time_graph: builder.tg,
        searches: builder.searches,
        labels_expanded: builder.labels_expanded,
    })
}
