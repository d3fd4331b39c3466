use std::cell::RefCell;

use crate::graph::{Guide, NodeId, ResourceGraph};

use super::{PlanError, Route};

const UNSET: u64 = u64::MAX;
const UNREACHABLE: u64 = u64::MAX - 1;

/// Admissible, consistent estimate of the remaining cost of a route.
///
/// For a label at node `v` working on stage `k`:
/// `est(v, T_k) + sum_{j>=k} minpair(T_j, T_j+1) + sum_{j>=k} finite stops`,
/// where `est` and `minpair` come from the guide. The zero guide is 0.
pub struct RouteBound<'a> {
    g: &'a ResourceGraph,
    guide: Guide<'a>,
    targets: Vec<&'a [NodeId]>,
    /// Chain cost plus finite stops from stage `k` onward.
    tail: Vec<Option<u64>>,
    /// Lazily filled `est(v, T_k)` per `k * node_count + v`.
    cache: RefCell<Vec<u64>>,
}

impl<'a> RouteBound<'a> {
    pub fn new(g: &'a ResourceGraph, guide: Guide<'a>, route: &'a Route) -> Result<Self, PlanError> {
        guide.check(g)?;
        let targets: Vec<&[NodeId]> = route.stages.iter().map(|s| s.targets.as_slice()).collect();
        let k = targets.len();
        let mut tail = vec![Some(0u64); k];
        if !matches!(guide, Guide::Zero) {
            for j in (0..k).rev() {
                let stop = route.stages[j].min_stop.ticks().unwrap_or(0);
                let link = if j + 1 < k { min_pair(g, guide, targets[j], targets[j + 1]) } else { Some(0) };
                let next = if j + 1 < k { tail[j + 1] } else { Some(0) };
                tail[j] = match (link, next) {
                    (Some(l), Some(n)) => Some(stop.saturating_add(l).saturating_add(n)),
                    _ => None,
                };
            }
        }
        let cache =
            RefCell::new(if matches!(guide, Guide::Zero) { Vec::new() } else { vec![UNSET; k * g.node_count()] });
        Ok(RouteBound { g, guide, targets, tail, cache })
    }

    /// Lower bound on the remaining route cost from `node` at stage `stage`;
    /// `None` when the guide proves the rest unreachable.
    pub fn at(&self, node: NodeId, stage: usize) -> Option<u64> {
        if matches!(self.guide, Guide::Zero) {
            return Some(0);
        }
        let tail = self.tail[stage]?;
        let slot = stage * self.g.node_count() + node.index();
        let mut cache = self.cache.borrow_mut();
        if cache[slot] == UNSET {
            cache[slot] = self.targets[stage]
                .iter()
                .filter_map(|&t| self.guide.estimate(self.g, node, t))
                .min()
                .unwrap_or(UNREACHABLE);
        }
        match cache[slot] {
            UNREACHABLE => None,
            est => Some(est.saturating_add(tail)),
        }
    }
}

fn min_pair(g: &ResourceGraph, guide: Guide<'_>, from: &[NodeId], to: &[NodeId]) -> Option<u64> {
    from.iter().flat_map(|&u| to.iter().filter_map(move |&v| guide.estimate(g, u, v))).min()
}

/// One-shot lower bound for a label at `node` on `stage` of `route`.
pub fn lower_bound(
    g: &ResourceGraph,
    guide: Guide<'_>,
    node: NodeId,
    stage: usize,
    route: &Route,
) -> Result<Option<u64>, PlanError> {
    Ok(RouteBound::new(g, guide, route)?.at(node, stage))
}
