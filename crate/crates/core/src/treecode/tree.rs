use crate::error::{Error, Result};
use crate::kernel::{norm2, sub, Vec3};

/// Boxes narrower than this are never split, so coincident sources end up
/// in one leaf regardless of the capacity.
const MIN_EXTENT: f64 = 1e-13;
const MAX_DEPTH: usize = 48;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterNode {
    /// Tight bounding box of the contained sources.
    pub lo: Vec3,
    pub hi: Vec3,
    /// Box midpoint `y_c`.
    pub center: Vec3,
    /// `r_c = max_j |y_c − y_j|` over the contained sources.
    pub radius: f64,
    /// Range of the node's sources in tree order.
    pub start: usize,
    pub end: usize,
    pub children: Vec<usize>,
    pub depth: usize,
}

impl ClusterNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

/// `2^d`-ary spatial tree over a fixed set of sources. Node 0 is the root and
/// every child has a larger index than its parent.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterTree {
    dim: usize,
    leaf_capacity: usize,
    nodes: Vec<ClusterNode>,
    /// `order[pos]` is the original index of the source at tree position `pos`.
    order: Vec<usize>,
    points: Vec<Vec3>,
}

impl ClusterTree {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn leaf_capacity(&self) -> usize {
        self.leaf_capacity
    }

    pub fn nodes(&self) -> &[ClusterNode] {
        &self.nodes
    }

    pub fn root(&self) -> &ClusterNode {
        &self.nodes[0]
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Sources permuted into tree order.
    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn num_sources(&self) -> usize {
        self.points.len()
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    pub fn leaves(&self) -> impl Iterator<Item = &ClusterNode> {
        self.nodes.iter().filter(|n| n.is_leaf())
    }

    /// Reorders per-source values into tree order.
    pub fn permute<T: Copy>(&self, values: &[T]) -> Vec<T> {
        self.order.iter().map(|&j| values[j]).collect()
    }
}

fn make_node(dim: usize, points: &[Vec3], start: usize, end: usize, depth: usize) -> ClusterNode {
    let mut lo = [0.0; 3];
    let mut hi = [0.0; 3];
    for s in 0..dim {
        lo[s] = f64::INFINITY;
        hi[s] = f64::NEG_INFINITY;
        for p in &points[start..end] {
            lo[s] = lo[s].min(p[s]);
            hi[s] = hi[s].max(p[s]);
        }
    }
    let mut center = [0.0; 3];
    for s in 0..dim {
        center[s] = 0.5 * (lo[s] + hi[s]);
    }
    let radius = points[start..end]
        .iter()
        .map(|p| norm2(&sub(p, &center)))
        .fold(0.0, f64::max)
        .sqrt();
    ClusterNode {
        lo,
        hi,
        center,
        radius,
        start,
        end,
        children: Vec::new(),
        depth,
    }
}

/// Builds the tree by repeated bisection of each box at its midpoint.
pub fn build_tree(sources: &[Vec3], dim: usize, leaf_capacity: usize) -> Result<ClusterTree> {
    if sources.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    if dim != 2 && dim != 3 {
        return Err(Error::InvalidParameter(format!("dimension must be 2 or 3, got {dim}")));
    }
    if leaf_capacity == 0 {
        return Err(Error::InvalidParameter("leaf capacity must be at least 1".into()));
    }
    let mut order: Vec<usize> = (0..sources.len()).collect();
    let mut points = sources.to_vec();
    let mut nodes = vec![make_node(dim, &points, 0, points.len(), 0)];
    let mut stack = vec![0usize];
    let nchild = 1usize << dim;
    let mut scratch: Vec<(usize, Vec3)> = Vec::new();
    while let Some(id) = stack.pop() {
        let (start, end, depth, center, extent) = {
            let n = &nodes[id];
            let extent = (0..dim).map(|s| n.hi[s] - n.lo[s]).fold(0.0, f64::max);
            (n.start, n.end, n.depth, n.center, extent)
        };
        if end - start <= leaf_capacity || extent <= MIN_EXTENT || depth >= MAX_DEPTH {
            continue;
        }
        let octant = |p: &Vec3| (0..dim).fold(0usize, |code, s| code | (usize::from(p[s] >= center[s]) << s));
        // stable counting sort of the node's range by octant
        let mut counts = vec![0usize; nchild];
        for p in &points[start..end] {
            counts[octant(p)] += 1;
        }
        let mut offsets = vec![start; nchild + 1];
        for c in 0..nchild {
            offsets[c + 1] = offsets[c] + counts[c];
        }
        scratch.clear();
        scratch.extend((start..end).map(|pos| (order[pos], points[pos])));
        let mut fill = offsets.clone();
        for (j, p) in scratch.drain(..) {
            let c = octant(&p);
            order[fill[c]] = j;
            points[fill[c]] = p;
            fill[c] += 1;
        }
        let mut children = Vec::new();
        for c in 0..nchild {
            if offsets[c + 1] > offsets[c] {
                children.push(nodes.len());
                nodes.push(make_node(dim, &points, offsets[c], offsets[c + 1], depth + 1));
            }
        }
        for &c in children.iter().rev() {
            stack.push(c);
        }
        nodes[id].children = children;
    }
    Ok(ClusterTree {
        dim,
        leaf_capacity,
        nodes,
        order,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn small_sets_are_a_single_leaf() {
        let pts = vec![[0.0; 3], [1.0, 2.0, 3.0]];
        let t = build_tree(&pts, 3, 4).unwrap();
        assert_eq!(t.nodes().len(), 1);
        assert!(t.root().is_leaf());
    }

    #[test]
    fn cube_corners_split_once() {
        let mut pts = Vec::new();
        for c in 0..8usize {
            pts.push([(c & 1) as f64, ((c >> 1) & 1) as f64, ((c >> 2) & 1) as f64]);
        }
        let t = build_tree(&pts, 3, 1).unwrap();
        assert_eq!(t.nodes().len(), 9);
        assert_eq!(t.root().children.len(), 8);
        assert!((t.root().radius - 0.75f64.sqrt()).abs() < 1e-15);
        for &c in &t.root().children {
            assert!(t.nodes()[c].is_leaf());
            assert_eq!(t.nodes()[c].radius, 0.0);
        }
    }

    #[test]
    fn every_source_is_in_exactly_one_leaf() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for dim in [2, 3] {
            let pts: Vec<Vec3> = (0..1000)
                .map(|_| {
                    let mut p = [0.0; 3];
                    for c in p.iter_mut().take(dim) {
                        *c = rng.gen_range(-1.0..1.0);
                    }
                    p
                })
                .collect();
            let t = build_tree(&pts, dim, 10).unwrap();
            let mut seen = vec![0usize; pts.len()];
            for leaf in t.leaves() {
                assert!(leaf.len() <= 10);
                for pos in leaf.start..leaf.end {
                    seen[t.order()[pos]] += 1;
                    assert_eq!(t.points()[pos], pts[t.order()[pos]]);
                }
            }
            assert!(seen.iter().all(|&c| c == 1));
            for n in t.nodes() {
                for pos in n.start..n.end {
                    let d = norm2(&sub(&t.points()[pos], &n.center)).sqrt();
                    assert!(d <= n.radius * (1.0 + 1e-15));
                }
                for &c in &n.children {
                    let child = &t.nodes()[c];
                    assert!(c > 0 && child.start >= n.start && child.end <= n.end);
                }
            }
            assert!(t.depth() <= 12);
        }
    }

    #[test]
    fn coincident_sources_stop_splitting() {
        let pts = vec![[0.5; 3]; 50];
        let t = build_tree(&pts, 3, 4).unwrap();
        assert_eq!(t.nodes().len(), 1);
        assert_eq!(t.root().radius, 0.0);
    }

    #[test]
    fn invalid_inputs() {
        assert!(build_tree(&[], 3, 4).is_err());
        assert!(build_tree(&[[0.0; 3]], 3, 0).is_err());
    }
}
