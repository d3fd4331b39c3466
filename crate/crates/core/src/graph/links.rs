use std::collections::VecDeque;

use super::{ResourceGraph, ResourceId};

/// Geographic links of radius `s` in the node/edge incidence graph.
///
/// `linked(r)` holds every resource at incidence distance `1..=s` from `r`,
/// `boundary(r)` the subset at distance exactly `s`. Neither contains `r`
/// itself. Both lists are sorted, so membership tests are binary searches.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeoLinks {
    radius: u32,
    linked: Vec<Vec<ResourceId>>,
    boundary: Vec<Vec<ResourceId>>,
}

impl GeoLinks {
    /// Links of radius zero: every resource stands alone.
    pub fn none(resource_count: usize) -> Self {
        GeoLinks { radius: 0, linked: vec![Vec::new(); resource_count], boundary: vec![Vec::new(); resource_count] }
    }

    /// Builds link tables from explicit lists. Lists are sorted and
    /// de-duplicated; symmetry is the caller's responsibility.
    pub fn from_lists(radius: u32, linked: Vec<Vec<ResourceId>>, boundary: Vec<Vec<ResourceId>>) -> Self {
        let tidy = |mut v: Vec<Vec<ResourceId>>| {
            for l in &mut v {
                l.sort_unstable();
                l.dedup();
            }
            v
        };
        GeoLinks { radius, linked: tidy(linked), boundary: tidy(boundary) }
    }

    #[inline]
    pub fn radius(&self) -> u32 {
        self.radius
    }

    #[inline]
    pub fn resource_count(&self) -> usize {
        self.linked.len()
    }

    #[inline]
    pub fn linked(&self, r: ResourceId) -> &[ResourceId] {
        &self.linked[r.index()]
    }

    #[inline]
    pub fn boundary(&self, r: ResourceId) -> &[ResourceId] {
        &self.boundary[r.index()]
    }

    #[inline]
    pub fn is_linked(&self, r: ResourceId, q: ResourceId) -> bool {
        self.linked[r.index()].binary_search(&q).is_ok()
    }

    /// `r` together with everything linked to it.
    pub fn footprint(&self, r: ResourceId) -> impl Iterator<Item = ResourceId> + '_ {
        std::iter::once(r).chain(self.linked(r).iter().copied())
    }

    /// Full-scan symmetry check; returns the first asymmetric pair.
    pub fn find_asymmetry(&self) -> Option<(ResourceId, ResourceId)> {
        for (i, list) in self.linked.iter().enumerate() {
            let r = ResourceId(i as u32);
            for &q in list {
                if !self.is_linked(q, r) {
                    return Some((r, q));
                }
            }
        }
        None
    }
}

/// Links every resource to all resources within `radius` incidence steps.
pub fn build_adjacency_links(g: &ResourceGraph, radius: u32) -> GeoLinks {
    let count = g.resource_count();
    let mut linked = Vec::with_capacity(count);
    let mut boundary = Vec::with_capacity(count);
    // Reused across sources; reset through `visited`.
    let mut depth = vec![u32::MAX; count];
    let mut visited = Vec::new();
    let mut queue = VecDeque::new();

    for i in 0..count {
        let root = ResourceId(i as u32);
        depth[i] = 0;
        visited.push(root);
        queue.push_back(root);
        let (mut l, mut b) = (Vec::new(), Vec::new());
        while let Some(r) = queue.pop_front() {
            let d = depth[r.index()];
            if d > 0 {
                l.push(r);
                if d == radius {
                    b.push(r);
                }
            }
            if d == radius {
                continue;
            }
            for q in g.resource_neighbours(r) {
                if depth[q.index()] == u32::MAX {
                    depth[q.index()] = d + 1;
                    visited.push(q);
                    queue.push_back(q);
                }
            }
        }
        for r in visited.drain(..) {
            depth[r.index()] = u32::MAX;
        }
        l.sort_unstable();
        b.sort_unstable();
        linked.push(l);
        boundary.push(b);
    }
    GeoLinks { radius, linked, boundary }
}
