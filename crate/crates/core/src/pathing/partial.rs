use crate::graph::{spatial_path, Guide, NodeId, ResourceGraph, ResourceId};

use super::{PlanError, Route};

/// A subset of a graph's resources.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResourceMask {
    allowed: Vec<bool>,
    len: usize,
}

impl ResourceMask {
    pub fn empty(resource_count: usize) -> Self {
        ResourceMask { allowed: vec![false; resource_count], len: 0 }
    }

    pub fn full(resource_count: usize) -> Self {
        ResourceMask { allowed: vec![true; resource_count], len: resource_count }
    }

    pub fn insert(&mut self, r: ResourceId) {
        let slot = &mut self.allowed[r.index()];
        if !*slot {
            *slot = true;
            self.len += 1;
        }
    }

    #[inline]
    pub fn contains(&self, r: ResourceId) -> bool {
        self.allowed.get(r.index()).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = ResourceId> + '_ {
        self.allowed.iter().enumerate().filter(|(_, &a)| a).map(|(i, _)| ResourceId(i as u32))
    }
}

/// How spatial legs connect the start to the route's targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Topology {
    /// start to each target independently.
    Star,
    /// start to the first target, then target to target in route order.
    Chain,
}

/// Resources of the previous anchoring path plus spatial legs between the
/// start node and the route's (singleton) stage targets.
///
/// Legs avoid every anchor other than their own endpoints.
pub fn build_partial_subgraph(
    g: &ResourceGraph,
    anchor_path: &[ResourceId],
    start: NodeId,
    route: &Route,
    topology: Topology,
    guide: Guide<'_>,
) -> Result<ResourceMask, PlanError> {
    route.validate(g)?;
    let mut targets = Vec::with_capacity(route.stages.len());
    for (k, stage) in route.stages.iter().enumerate() {
        match stage.targets.as_slice() {
            [t] => targets.push(*t),
            _ => return Err(PlanError::MalformedRoute(format!("stage {k} is not a single target"))),
        }
    }
    let mut mask = ResourceMask::empty(g.resource_count());
    for &r in anchor_path {
        mask.insert(r);
    }
    mask.insert(g.node_resource(start));

    let mut leg = |from: NodeId, to: NodeId| -> Result<(), PlanError> {
        let path =
            spatial_path(g, from, to, |n| g.is_anchor(n), guide)?.ok_or(PlanError::NoSpatialPath { from, to })?;
        path.nodes.iter().for_each(|&n| mask.insert(g.node_resource(n)));
        path.edges.iter().for_each(|&e| mask.insert(g.edge_resource(e)));
        Ok(())
    };
    match topology {
        Topology::Star => {
            for &t in &targets {
                leg(start, t)?;
            }
        }
        Topology::Chain => {
            let mut from = start;
            for &t in &targets {
                leg(from, t)?;
                from = t;
            }
        }
    }
    Ok(mask)
}
