//! Static 2-d tree over depot locations.
//!
//! Built by median split on alternating axes; nearest-neighbour queries
//! return exactly what a linear scan would, with distance ties broken to
//! the lowest point index.

use crate::{Error, Result};

#[derive(Debug, Clone)]
struct KdNode {
    point: (f64, f64),
    index: usize,
    left: Option<usize>,
    right: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct KdTree {
    nodes: Vec<KdNode>,
    root: usize,
}

impl KdTree {
    pub fn build(points: &[(f64, f64)]) -> Result<KdTree> {
        if points.is_empty() {
            return Err(Error::InvalidInput(
                "cannot build a k-d tree over zero points".into(),
            ));
        }
        let mut items: Vec<(usize, (f64, f64))> =
            points.iter().copied().enumerate().collect();
        let mut tree = KdTree {
            nodes: Vec::with_capacity(points.len()),
            root: 0,
        };
        tree.root = tree.build_rec(&mut items, 0);
        Ok(tree)
    }

    fn build_rec(&mut self, items: &mut [(usize, (f64, f64))], depth: usize) -> usize {
        let axis = depth % 2;
        let mid = items.len() / 2;
        // Ties on the split coordinate break by original index so the
        // layout is independent of the incoming slice order.
        items.select_nth_unstable_by(mid, |a, b| {
            let ka = if axis == 0 { a.1 .0 } else { a.1 .1 };
            let kb = if axis == 0 { b.1 .0 } else { b.1 .1 };
            ka.total_cmp(&kb).then(a.0.cmp(&b.0))
        });
        let (index, point) = items[mid];
        let slot = self.nodes.len();
        self.nodes.push(KdNode {
            point,
            index,
            left: None,
            right: None,
        });
        if mid > 0 {
            let left = {
                let (lo, _) = items.split_at_mut(mid);
                self.build_rec(lo, depth + 1)
            };
            self.nodes[slot].left = Some(left);
        }
        if mid + 1 < items.len() {
            let right = {
                let (_, hi) = items.split_at_mut(mid + 1);
                self.build_rec(hi, depth + 1)
            };
            self.nodes[slot].right = Some(right);
        }
        slot
    }

    /// Index (into the build slice) of the point nearest to `query`.
    pub fn nearest(&self, query: (f64, f64)) -> usize {
        let mut best = (f64::INFINITY, usize::MAX);
        self.nearest_rec(self.root, query, 0, &mut best);
        best.1
    }

    fn nearest_rec(&self, slot: usize, query: (f64, f64), depth: usize, best: &mut (f64, usize)) {
        let node = &self.nodes[slot];
        let d2 = dist2(node.point, query);
        if d2 < best.0 || (d2 == best.0 && node.index < best.1) {
            *best = (d2, node.index);
        }
        let axis = depth % 2;
        let delta = if axis == 0 {
            query.0 - node.point.0
        } else {
            query.1 - node.point.1
        };
        let (near, far) = if delta < 0.0 {
            (node.left, node.right)
        } else {
            (node.right, node.left)
        };
        if let Some(n) = near {
            self.nearest_rec(n, query, depth + 1, best);
        }
        // Descend the far side on exact ties too, so the lowest-index rule
        // holds among equidistant points.
        if let Some(f) = far {
            if delta * delta <= best.0 {
                self.nearest_rec(f, query, depth + 1, best);
            }
        }
    }
}

fn dist2(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)
}

/// Linear-scan reference with the same tie rule; used by tests and tiny
/// point sets.
pub fn nearest_linear(points: &[(f64, f64)], query: (f64, f64)) -> usize {
    let mut best = (f64::INFINITY, usize::MAX);
    for (i, &p) in points.iter().enumerate() {
        let d2 = dist2(p, query);
        if d2 < best.0 {
            best = (d2, i);
        }
    }
    best.1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton_tree_answers_every_query() {
        let tree = KdTree::build(&[(3.0, 4.0)]).unwrap();
        assert_eq!(tree.nearest((0.0, 0.0)), 0);
        assert_eq!(tree.nearest((100.0, -5.0)), 0);
    }

    #[test]
    fn three_point_query_matches_linear_scan() {
        let pts = [(0.0, 0.0), (10.0, 0.0), (0.0, 10.0)];
        let tree = KdTree::build(&pts).unwrap();
        // (2,1) is closest to the origin: 5 < 65 < 85.
        assert_eq!(tree.nearest((2.0, 1.0)), 0);
        assert_eq!(tree.nearest((2.0, 1.0)), nearest_linear(&pts, (2.0, 1.0)));
    }

    #[test]
    fn equidistant_tie_goes_to_lowest_index() {
        let pts = [(0.0, 0.0), (10.0, 0.0)];
        let tree = KdTree::build(&pts).unwrap();
        // (5,0) is exactly 5 from both points.
        assert_eq!(tree.nearest((5.0, 0.0)), 0);
        let reordered = [(10.0, 0.0), (0.0, 0.0)];
        let tree = KdTree::build(&reordered).unwrap();
        assert_eq!(tree.nearest((5.0, 0.0)), 0);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(KdTree::build(&[]).is_err());
    }
}
