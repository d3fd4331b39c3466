//! Benchmark cells shared by the command-line harness and the test suites.

use std::fmt;
use std::time::Instant;

use crate::geo::{naive_reservations, normalise, BoundaryReserver};
use crate::graph::{build_adjacency_links, build_grid, GeoLinks, Guide, ResourceGraph};
use crate::pathing::{time_path, Route, SourceSpec, Stage, TimePath};
use crate::scenario::{generate, run, GenParams, ScenarioError};
use crate::scheduler::{Anchoriser, Preset};
use crate::time::AgvId;
use crate::time_graph::TimeGraph;

/// One metrics CSV row.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub suite: &'static str,
    pub param: u64,
    pub algorithm: &'static str,
    pub runtime_ms: f64,
    pub makespan: u64,
    pub total_distance: u64,
}

impl Row {
    /// Every column except `runtime_ms`.
    pub fn stable_key(&self) -> (&'static str, u64, &'static str, u64, u64) {
        (self.suite, self.param, self.algorithm, self.makespan, self.total_distance)
    }
}

impl fmt::Display for Row {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{:.3},{},{}",
            self.suite, self.param, self.algorithm, self.runtime_ms, self.makespan, self.total_distance
        )
    }
}

/// Best of `repeats` runs of a deterministic scenario.
fn best_run(p: &GenParams, repeats: usize) -> Result<(f64, crate::scheduler::Metrics), ScenarioError> {
    let scenario = generate(p)?;
    let mut best = f64::INFINITY;
    let mut metrics = None;
    for _ in 0..repeats.max(1) {
        let out = run(&scenario)?;
        best = best.min(out.runtime_ms);
        metrics = Some(out.metrics);
    }
    Ok((best, metrics.expect("at least one run")))
}

/// Naive and greedy anchorisation of `counts` AGVs on an `n x n` grid.
pub fn anchoriser_rows(n: usize, counts: &[usize], seed: u64, repeats: usize) -> Result<Vec<Row>, ScenarioError> {
    let mut rows = Vec::new();
    for &agvs in counts {
        for anchoriser in [Anchoriser::Naive, Anchoriser::Greedy] {
            let p = GenParams { grid: n, agvs, demands: 0, seed, anchoriser, ..GenParams::default() };
            let (runtime_ms, m) = best_run(&p, repeats)?;
            rows.push(Row {
                suite: "anchorisers",
                param: agvs as u64,
                algorithm: anchoriser.name(),
                runtime_ms,
                makespan: m.makespan,
                total_distance: m.total_distance,
            });
        }
    }
    Ok(rows)
}

/// Every preset on each grid size with the same generated demands.
pub fn preset_rows(
    sizes: &[usize],
    agvs: usize,
    demands: usize,
    seed: u64,
    repeats: usize,
) -> Result<Vec<Row>, ScenarioError> {
    let mut rows = Vec::new();
    for &n in sizes {
        for preset in Preset::ALL {
            let p = GenParams { grid: n, agvs, demands, seed, preset, ..GenParams::default() };
            let (runtime_ms, m) = best_run(&p, repeats)?;
            rows.push(Row {
                suite: "presets",
                param: n as u64,
                algorithm: preset.name(),
                runtime_ms,
                makespan: m.makespan,
                total_distance: m.total_distance,
            });
        }
    }
    Ok(rows)
}

/// Edge weight used by the reservation suite; divisible by 1 through 6.
pub const RESERVER_WEIGHT: u64 = 6000;

/// A fastest path between opposite interior corners of a subdivided grid.
#[derive(Clone, Debug)]
pub struct CornerPath {
    pub graph: ResourceGraph,
    pub links: GeoLinks,
    pub path: TimePath,
}

/// Corner-to-corner path on an `n x n` grid split `s` ways, linked with radius `s`.
pub fn corner_path(n: usize, s: u64) -> Result<CornerPath, ScenarioError> {
    let base = build_grid(n, RESERVER_WEIGHT)?;
    let (from, to) = (base.node_at(1, 1), base.node_at(n as i64 - 2, n as i64 - 2));
    let (Some(from), Some(to)) = (from, to) else {
        return Err(ScenarioError::Invalid(format!("grid {n} has no interior corners")));
    };
    let graph = base.subdivide(s)?;
    let links = build_adjacency_links(&graph, s as u32);
    let tg = TimeGraph::new(graph.resource_count());
    let route = Route::new(vec![Stage::new(vec![to], 0)]);
    let path = time_path(&tg, &graph, &[SourceSpec::at_node(AgvId(0), from, 0)], &route, Guide::Manhattan)
        .map_err(|e| ScenarioError::Invalid(e.to_string()))?
        .ok_or_else(|| ScenarioError::Invalid("no corner-to-corner path".into()))?;
    Ok(CornerPath { graph, links, path })
}

/// Minimum wall time in ms of each algorithm over `repeats` runs, naive
/// first. A run expands the path and inserts the result into a time graph.
pub fn time_reservers(cp: &CornerPath, repeats: usize) -> (f64, f64) {
    let mut tg = TimeGraph::new(cp.graph.resource_count());
    let mut naive = f64::INFINITY;
    let mut boundary = f64::INFINITY;
    let mut reserver = BoundaryReserver::new();
    for _ in 0..repeats.max(1) {
        let t = Instant::now();
        let rs = naive_reservations(&cp.path, &cp.links);
        tg.reserve_all(&rs).expect("path resources exist");
        naive = naive.min(t.elapsed().as_secs_f64() * 1e3);
        tg.remove_all(&rs).expect("path resources exist");

        let t = Instant::now();
        let rs = reserver.reserve(&cp.path, &cp.links).expect("search paths are contiguous");
        tg.reserve_all(&rs).expect("path resources exist");
        boundary = boundary.min(t.elapsed().as_secs_f64() * 1e3);
        tg.remove_all(&rs).expect("path resources exist");
    }
    (naive, boundary)
}

/// Naive and boundary expansion across subdivision levels. Fails if the two
/// disagree after normalisation.
pub fn reserver_rows(n: usize, subdivisions: &[u64], repeats: usize) -> Result<Vec<Row>, ScenarioError> {
    let mut rows = Vec::new();
    for &s in subdivisions {
        let cp = corner_path(n, s)?;
        let naive = normalise(&naive_reservations(&cp.path, &cp.links));
        let boundary = normalise(&BoundaryReserver::new().reserve(&cp.path, &cp.links).expect("contiguous"));
        if naive != boundary {
            return Err(ScenarioError::Invalid(format!("reservation algorithms disagree at s={s}")));
        }
        let (naive_ms, boundary_ms) = time_reservers(&cp, repeats);
        let arrival = cp.path.arrival.ticks().unwrap_or(0);
        let distance = cp.path.distance(&cp.graph);
        for (algorithm, runtime_ms) in [("naive", naive_ms), ("boundary", boundary_ms)] {
            rows.push(Row {
                suite: "reservers",
                param: s,
                algorithm,
                runtime_ms,
                makespan: arrival,
                total_distance: distance,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchoriser_rows_have_one_row_per_cell() {
        let rows = anchoriser_rows(8, &[2, 4], 1, 1).unwrap();
        let keys: Vec<_> = rows.iter().map(|r| (r.param, r.algorithm)).collect();
        assert_eq!(keys, [(2, "naive"), (2, "greedy"), (4, "naive"), (4, "greedy")]);
    }

    #[test]
    fn corner_path_length_scales_with_grid() {
        for s in [1, 2, 3] {
            let cp = corner_path(6, s).unwrap();
            assert_eq!(cp.path.arrival.ticks(), Some(6 * RESERVER_WEIGHT));
            assert_eq!(cp.path.distance(&cp.graph), 6 * RESERVER_WEIGHT);
        }
    }

    #[test]
    fn reserver_rows_agree_at_small_scale() {
        let rows = reserver_rows(6, &[1, 2], 1).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].to_string().split(',').count(), 6);
    }

    #[test]
    fn preset_rows_are_stable() {
        let a = preset_rows(&[8], 2, 6, 5, 1).unwrap();
        let b = preset_rows(&[8], 2, 6, 5, 1).unwrap();
        assert_eq!(
            a.iter().map(Row::stable_key).collect::<Vec<_>>(),
            b.iter().map(Row::stable_key).collect::<Vec<_>>()
        );
    }
}
