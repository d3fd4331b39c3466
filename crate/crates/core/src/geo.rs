//! Expanding a time-path into geographic reservations.
//!
//! [`naive_reservations`] reserves every linked resource for every step.
//! [`BoundaryReserver`] only touches the resources entering or leaving
//! coverage at each step, which is far cheaper when links are wide.

use rustc_hash::FxHashMap;

use crate::graph::{GeoLinks, ResourceId};
use crate::pathing::TimePath;
use crate::time::{Interval, TimePoint};
use crate::time_graph::Reservation;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GeoError {
    #[error("time-path is not contiguous between steps {0} and {}", .0 + 1)]
    NotContiguous(usize),
}

/// Reserves each step's resource and all of its links over the step.
///
/// The output is unmerged; see [`normalise`].
pub fn naive_reservations(path: &TimePath, links: &GeoLinks) -> Vec<Reservation> {
    let mut out = Vec::with_capacity(path.steps.iter().map(|s| 1 + links.linked(s.resource).len()).sum());
    for step in &path.steps {
        for p in links.footprint(step.resource) {
            out.push(Reservation::new(p, path.agv, step.occupation));
        }
    }
    out
}

/// Resources touched by [`naive_reservations`] for `path`.
pub fn naive_work(path: &TimePath, links: &GeoLinks) -> u64 {
    path.steps.iter().map(|s| 1 + links.linked(s.resource).len() as u64).sum()
}

/// Boundary expansion with reusable scratch space.
///
/// Footprints are treated as reflexive: each resource belongs to its own
/// linked and boundary sets, so base resources are reserved too.
#[derive(Debug, Default)]
pub struct BoundaryReserver {
    /// Resources at the coverage boundary of the previous step.
    momentary: Vec<(ResourceId, Interval)>,
    /// Covered resources not on the boundary, with their coverage start.
    swallowed: FxHashMap<ResourceId, TimePoint>,
    work: u64,
}

impl BoundaryReserver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Resources touched since construction.
    pub fn work(&self) -> u64 {
        self.work
    }

    /// Reservations covering the footprint of every step of `path`.
    ///
    /// Per resource the result equals the [`normalise`]d naive expansion,
    /// except that coverage split only by a zero-length step may come out as
    /// two touching intervals; normalise to compare.
    pub fn reserve(&mut self, path: &TimePath, links: &GeoLinks) -> Result<Vec<Reservation>, GeoError> {
        if let Some(i) = path.steps.windows(2).position(|w| w[0].occupation.end != w[1].occupation.start) {
            return Err(GeoError::NotContiguous(i));
        }
        let Some(first) = path.steps.first() else {
            return Ok(Vec::new());
        };
        self.momentary.clear();
        self.swallowed.clear();
        let agv = path.agv;
        let mut out = Vec::new();
        let covers = |r: ResourceId, p: ResourceId| p == r || links.is_linked(r, p);

        self.momentary.extend(links.footprint(first.resource).map(|p| (p, first.occupation)));
        self.work += self.momentary.len() as u64;

        for step in &path.steps[1..] {
            let r = step.resource;
            let Interval { start: s1, end: e1 } = step.occupation;
            self.work += self.momentary.len() as u64;
            for &(p, ivl) in &self.momentary {
                if covers(r, p) {
                    self.swallowed.insert(p, ivl.start);
                } else {
                    push(&mut out, p, agv, ivl);
                }
            }
            self.momentary.clear();

            let boundary = std::iter::once(r).chain(links.boundary(r).iter().copied());
            for b in boundary {
                self.work += 1;
                let start = self.swallowed.remove(&b).unwrap_or(s1);
                self.momentary.push((b, Interval { start, end: e1 }));
            }
        }

        let end = path.steps.last().unwrap().occupation.end;
        let mut rest: Vec<_> = self.swallowed.drain().collect();
        rest.sort_unstable();
        self.work += (rest.len() + self.momentary.len()) as u64;
        for (p, start) in rest {
            push(&mut out, p, agv, Interval { start, end });
        }
        for &(p, ivl) in &self.momentary {
            push(&mut out, p, agv, ivl);
        }
        Ok(out)
    }
}

fn push(out: &mut Vec<Reservation>, p: ResourceId, agv: crate::time::AgvId, ivl: Interval) {
    if !ivl.is_empty() {
        out.push(Reservation::new(p, agv, ivl));
    }
}

/// One-shot [`BoundaryReserver::reserve`].
pub fn boundary_reservations(path: &TimePath, links: &GeoLinks) -> Result<Vec<Reservation>, GeoError> {
    BoundaryReserver::new().reserve(path, links)
}

/// Coalesces touching or overlapping intervals per (resource, AGV), drops
/// empty ones and sorts by (resource, AGV, start).
pub fn normalise(rs: &[Reservation]) -> Vec<Reservation> {
    let mut sorted: Vec<Reservation> = rs.iter().filter(|r| !r.interval.is_empty()).copied().collect();
    sorted.sort_unstable_by_key(|r| (r.resource, r.agv, r.interval.start, r.interval.end));
    let mut out: Vec<Reservation> = Vec::with_capacity(sorted.len());
    for r in sorted {
        match out.last_mut() {
            Some(last) if last.resource == r.resource && last.agv == r.agv && r.interval.start <= last.interval.end => {
                last.interval.end = last.interval.end.max(r.interval.end);
            }
            _ => out.push(r),
        }
    }
    out
}
