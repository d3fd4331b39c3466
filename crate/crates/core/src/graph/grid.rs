use super::{Edge, GraphError, Node, NodeId, ResourceGraph};

/// Square `n x n` grid with corners removed. Remaining perimeter nodes are
/// anchors; edges between two anchors are dropped. All edges are undirected
/// with the given weight.
pub fn build_grid(n: usize, weight: u64) -> Result<ResourceGraph, GraphError> {
    if n < 4 {
        return Err(GraphError::InvalidParameter(format!("grid size {n} is below 4")));
    }
    if weight == 0 {
        return Err(GraphError::InvalidParameter("grid edge weight must be positive".into()));
    }
    let last = n - 1;
    let corner = |x: usize, y: usize| (x == 0 || x == last) && (y == 0 || y == last);
    let perimeter = |x: usize, y: usize| x == 0 || y == 0 || x == last || y == last;

    let mut ids = vec![None; n * n];
    let mut nodes = Vec::with_capacity(n * n - 4);
    for y in 0..n {
        for x in 0..n {
            if corner(x, y) {
                continue;
            }
            ids[y * n + x] = Some(NodeId(nodes.len() as u32));
            nodes.push(Node { pos: Some((x as i64, y as i64)), anchor: perimeter(x, y), subdivision: false });
        }
    }

    let mut edges = Vec::new();
    let mut link = |a: (usize, usize), b: (usize, usize)| {
        let (Some(ia), Some(ib)) = (ids[a.1 * n + a.0], ids[b.1 * n + b.0]) else {
            return;
        };
        if perimeter(a.0, a.1) && perimeter(b.0, b.1) {
            return;
        }
        edges.push(Edge { a: ia, b: ib, weight, directed: false });
    };
    for y in 0..n {
        for x in 0..n {
            if x + 1 < n {
                link((x, y), (x + 1, y));
            }
            if y + 1 < n {
                link((x, y), (x, y + 1));
            }
        }
    }
    ResourceGraph::new(nodes, edges)
}
