use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{EdgeId, GraphError, NodeId, ResourceGraph};

/// Admissible lower-bound source for searches.
#[derive(Clone, Copy, Debug, Default)]
pub enum Guide<'a> {
    /// No guidance: plain Dijkstra.
    #[default]
    Zero,
    /// Manhattan distance on embedded graphs.
    Manhattan,
    /// Precomputed all-pairs travel times.
    Table(&'a DistanceTable),
}

impl Guide<'_> {
    /// Fails for the manhattan guide on a graph without coordinates.
    pub fn check(&self, g: &ResourceGraph) -> Result<(), GraphError> {
        match self {
            Guide::Manhattan if !g.is_embedded() => Err(GraphError::NotEmbedded),
            _ => Ok(()),
        }
    }

    /// Lower bound on travel time from `u` to `v`. `None` when `v` is
    /// unreachable according to the table.
    #[inline]
    pub fn estimate(&self, g: &ResourceGraph, u: NodeId, v: NodeId) -> Option<u64> {
        match self {
            Guide::Zero => Some(0),
            Guide::Manhattan => Some(g.manhattan_bound(u, v).unwrap_or(0)),
            Guide::Table(t) => t.get(u, v),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpatialPath {
    pub nodes: Vec<NodeId>,
    pub edges: Vec<EdgeId>,
    pub cost: u64,
}

/// Minimum-weight path from `from` to `to` that avoids every node for which
/// `forbidden` returns true (the endpoints themselves are always allowed).
/// Returns `None` when no such path exists.
pub fn spatial_path(
    g: &ResourceGraph,
    from: NodeId,
    to: NodeId,
    forbidden: impl Fn(NodeId) -> bool,
    guide: Guide<'_>,
) -> Result<Option<SpatialPath>, GraphError> {
    guide.check(g)?;
    if from == to {
        return Ok(Some(SpatialPath { nodes: vec![from], edges: Vec::new(), cost: 0 }));
    }
    let n = g.node_count();
    let mut dist = vec![u64::MAX; n];
    let mut parent: Vec<Option<(EdgeId, NodeId)>> = vec![None; n];
    let mut closed = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[from.index()] = 0;
    let h0 = guide.estimate(g, from, to).unwrap_or(0);
    heap.push(Reverse((h0, 0u64, from)));

    while let Some(Reverse((_, d, u))) = heap.pop() {
        if closed[u.index()] {
            continue;
        }
        closed[u.index()] = true;
        if u == to {
            break;
        }
        for &(e, v) in g.outgoing(u) {
            if closed[v.index()] || (v != to && forbidden(v)) {
                continue;
            }
            let nd = d + g.edge(e).weight;
            if nd < dist[v.index()] {
                let Some(h) = guide.estimate(g, v, to) else { continue };
                dist[v.index()] = nd;
                parent[v.index()] = Some((e, u));
                heap.push(Reverse((nd + h, nd, v)));
            }
        }
    }

    if dist[to.index()] == u64::MAX {
        return Ok(None);
    }
    let (mut nodes, mut edges) = (vec![to], Vec::new());
    let mut cur = to;
    while let Some((e, p)) = parent[cur.index()] {
        edges.push(e);
        nodes.push(p);
        cur = p;
    }
    nodes.reverse();
    edges.reverse();
    Ok(Some(SpatialPath { nodes, edges, cost: dist[to.index()] }))
}

/// All-pairs shortest travel times.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceTable {
    n: usize,
    dist: Vec<u64>,
}

impl DistanceTable {
    /// Travel time from `u` to `v`, `None` if unreachable.
    #[inline]
    pub fn get(&self, u: NodeId, v: NodeId) -> Option<u64> {
        let d = self.dist[u.index() * self.n + v.index()];
        (d != u64::MAX).then_some(d)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }
}

/// One Dijkstra per source node.
pub fn distance_table(g: &ResourceGraph) -> DistanceTable {
    let n = g.node_count();
    let mut dist = vec![u64::MAX; n * n];
    let mut heap = BinaryHeap::new();
    for s in 0..n {
        let row = &mut dist[s * n..(s + 1) * n];
        row[s] = 0;
        heap.push(Reverse((0u64, NodeId(s as u32))));
        while let Some(Reverse((d, u))) = heap.pop() {
            if d > row[u.index()] {
                continue;
            }
            for &(e, v) in g.outgoing(u) {
                let nd = d + g.edge(e).weight;
                if nd < row[v.index()] {
                    row[v.index()] = nd;
                    heap.push(Reverse((nd, v)));
                }
            }
        }
    }
    DistanceTable { n, dist }
}

#[cfg(test)]
mod tests {
    use super::super::build_grid;
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Exhaustive simple-path enumeration; only usable on tiny graphs.
    fn brute_force_cost(
        g: &ResourceGraph,
        from: NodeId,
        to: NodeId,
        forbidden: &dyn Fn(NodeId) -> bool,
    ) -> Option<u64> {
        fn dfs(
            g: &ResourceGraph,
            u: NodeId,
            to: NodeId,
            cost: u64,
            seen: &mut Vec<bool>,
            forbidden: &dyn Fn(NodeId) -> bool,
            best: &mut Option<u64>,
        ) {
            if u == to {
                *best = Some(best.map_or(cost, |b| b.min(cost)));
                return;
            }
            for &(e, v) in g.outgoing(u) {
                if seen[v.index()] || (v != to && forbidden(v)) {
                    continue;
                }
                seen[v.index()] = true;
                dfs(g, v, to, cost + g.edge(e).weight, seen, forbidden, best);
                seen[v.index()] = false;
            }
        }
        let mut seen = vec![false; g.node_count()];
        seen[from.index()] = true;
        let mut best = None;
        dfs(g, from, to, 0, &mut seen, forbidden, &mut best);
        best
    }

    #[test]
    fn identity_path() {
        let g = build_grid(4, 5000).unwrap();
        let p = spatial_path(&g, NodeId(0), NodeId(0), |_| false, Guide::Zero).unwrap().unwrap();
        assert_eq!(p.cost, 0);
        assert!(p.edges.is_empty());
    }

    #[test]
    fn interior_diagonal_avoiding_anchors() {
        let g = build_grid(4, 5000).unwrap();
        let (a, b) = (g.node_at(1, 1).unwrap(), g.node_at(2, 2).unwrap());
        let forbid = |n: NodeId| g.is_anchor(n);
        let p = spatial_path(&g, a, b, forbid, Guide::Zero).unwrap().unwrap();
        assert_eq!(p.cost, brute_force_cost(&g, a, b, &forbid).unwrap());
        assert_eq!(p.cost, 10000);
        assert_eq!(p.edges.len(), 2);
        assert!(p.nodes.iter().all(|n| !g.is_anchor(*n)));
    }

    #[test]
    fn anchor_to_anchor_must_cross_interior() {
        let g = build_grid(4, 5000).unwrap();
        let (a, b) = (g.node_at(0, 1).unwrap(), g.node_at(3, 2).unwrap());
        let p = spatial_path(&g, a, b, |n| g.is_anchor(n), Guide::Manhattan).unwrap().unwrap();
        assert_eq!(p.cost, 20000);
        assert_eq!(p.nodes.first(), Some(&a));
        assert_eq!(p.nodes.last(), Some(&b));
    }

    #[test]
    fn disconnected_reports_none() {
        let g = build_grid(4, 5000).unwrap();
        let (a, b) = (g.node_at(1, 1).unwrap(), g.node_at(2, 2).unwrap());
        let p = spatial_path(&g, a, b, |n| n != a && n != b, Guide::Zero).unwrap();
        assert_eq!(p, None);
    }

    #[test]
    fn guides_agree_with_dijkstra() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let n = rng.gen_range(4..=10);
            let g = build_grid(n, 5000).unwrap();
            let table = distance_table(&g);
            let from = NodeId(rng.gen_range(0..g.node_count() as u32));
            let to = NodeId(rng.gen_range(0..g.node_count() as u32));
            let forbid = |v: NodeId| g.is_anchor(v);
            let costs: Vec<_> = [Guide::Zero, Guide::Manhattan, Guide::Table(&table)]
                .into_iter()
                .map(|guide| spatial_path(&g, from, to, forbid, guide).unwrap().map(|p| p.cost))
                .collect();
            assert_eq!(costs[0], costs[1]);
            assert_eq!(costs[0], costs[2]);
        }
    }

    #[test]
    fn manhattan_needs_embedding() {
        use super::super::{Edge, Node};
        let node = Node { pos: None, anchor: false, subdivision: false };
        let g = ResourceGraph::new(
            vec![node.clone(), node],
            vec![Edge { a: NodeId(0), b: NodeId(1), weight: 1, directed: false }],
        )
        .unwrap();
        assert_eq!(
            spatial_path(&g, NodeId(0), NodeId(1), |_| false, Guide::Manhattan).unwrap_err(),
            GraphError::NotEmbedded
        );
    }

    #[test]
    fn table_properties() {
        let g = build_grid(6, 5000).unwrap();
        let t = distance_table(&g);
        for (u, nu) in g.nodes() {
            assert_eq!(t.get(u, u), Some(0));
            for (v, nv) in g.nodes() {
                assert_eq!(t.get(u, v), t.get(v, u));
                let (pu, pv) = (nu.pos.unwrap(), nv.pos.unwrap());
                let manhattan = pu.0.abs_diff(pv.0) + pu.1.abs_diff(pv.1);
                assert!(t.get(u, v).unwrap() >= 5000 * manhattan);
            }
        }
    }
}
