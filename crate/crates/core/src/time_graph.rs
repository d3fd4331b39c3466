//! One [`GapTree`] per resource, plus bulk commit/rollback and auditing.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::gap_tree::GapTree;
use crate::graph::ResourceId;
use crate::pathing::TimePath;
use crate::time::{AgvId, Interval};

/// One AGV's hold on one resource.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Reservation {
    pub resource: ResourceId,
    pub agv: AgvId,
    pub interval: Interval,
}

impl Reservation {
    pub fn new(resource: ResourceId, agv: AgvId, interval: Interval) -> Self {
        Reservation { resource, agv, interval }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TimeGraphError {
    #[error("reservation references unknown resource {0}")]
    UnknownResource(ResourceId),
}

/// Another AGV holds a resource during an AGV's base occupation of it.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("AGV {agv} occupies resource {resource} during {occupation} while AGV {other} holds it over {overlap}")]
pub struct SafetyViolation {
    pub agv: AgvId,
    pub other: AgvId,
    pub resource: ResourceId,
    pub occupation: Interval,
    pub overlap: Interval,
}

/// Reservations of every AGV on every resource of one graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimeGraph {
    trees: Vec<GapTree>,
}

impl TimeGraph {
    pub fn new(resource_count: usize) -> Self {
        TimeGraph { trees: vec![GapTree::new(); resource_count] }
    }

    pub fn resource_count(&self) -> usize {
        self.trees.len()
    }

    #[inline]
    pub fn tree(&self, r: ResourceId) -> &GapTree {
        &self.trees[r.index()]
    }

    pub fn trees(&self) -> impl Iterator<Item = (ResourceId, &GapTree)> + '_ {
        self.trees.iter().enumerate().map(|(i, t)| (ResourceId(i as u32), t))
    }

    fn check(&self, rs: &[Reservation]) -> Result<(), TimeGraphError> {
        match rs.iter().find(|r| r.resource.index() >= self.trees.len()) {
            Some(bad) => Err(TimeGraphError::UnknownResource(bad.resource)),
            None => Ok(()),
        }
    }

    /// Inserts every reservation. Either all are applied or, on an unknown
    /// resource, none are.
    pub fn reserve_all(&mut self, rs: &[Reservation]) -> Result<(), TimeGraphError> {
        self.check(rs)?;
        for r in rs {
            self.trees[r.resource.index()].insert(r.agv, r.interval);
        }
        Ok(())
    }

    /// Inverse of [`reserve_all`](Self::reserve_all).
    pub fn remove_all(&mut self, rs: &[Reservation]) -> Result<(), TimeGraphError> {
        self.check(rs)?;
        for r in rs {
            self.trees[r.resource.index()].remove(r.agv, r.interval);
        }
        Ok(())
    }

    /// Checks that no other AGV holds any resource while one of `paths`
    /// physically occupies it. Overlapping footprints are fine; only base
    /// occupations matter.
    pub fn audit_safety<'a>(&self, paths: impl IntoIterator<Item = &'a TimePath>) -> Result<(), SafetyViolation> {
        for path in paths {
            for step in path.steps.iter().filter(|s| !s.occupation.is_empty()) {
                let tree = &self.trees[step.resource.index()];
                if let Some((overlap, holders)) = tree.conflicts(path.agv, step.occupation).into_iter().next() {
                    let other = holders.iter().find(|&a| a != path.agv).expect("conflict has another holder");
                    return Err(SafetyViolation {
                        agv: path.agv,
                        other,
                        resource: step.resource,
                        occupation: step.occupation,
                        overlap,
                    });
                }
            }
        }
        Ok(())
    }

    /// Every stored reservation, merged per (resource, AGV).
    pub fn reservations(&self) -> Vec<Reservation> {
        self.trees()
            .flat_map(|(r, t)| t.reservations().into_iter().map(move |(agv, ivl)| Reservation::new(r, agv, ivl)))
            .collect()
    }

    /// CSV dump with header `resource,agv,start,end`.
    pub fn to_csv(&self) -> String {
        reservations_csv(&self.reservations())
    }

    /// Sum of stored segment counts.
    pub fn segment_count(&self) -> usize {
        self.trees.iter().map(GapTree::len).sum()
    }
}

/// Renders reservations as `resource,agv,start,end` CSV.
pub fn reservations_csv(rs: &[Reservation]) -> String {
    let mut out = String::from("resource,agv,start,end\n");
    for r in rs {
        let _ = writeln!(out, "{},{},{},{}", r.resource, r.agv, r.interval.start, r.interval.end);
    }
    out
}
