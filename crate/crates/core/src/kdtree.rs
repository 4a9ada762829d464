//! Static k-d tree over points in `R^d` for exact nearest-neighbour queries.

use alloc::vec::Vec;

#[allow(unused_imports)] // inherent f64 methods shadow these when std is linked
use num_traits::Float;

#[derive(Clone, Debug)]
pub struct KdTree {
    dim: usize,
    coords: Vec<f64>,
    nodes: Vec<Node>,
    root: Option<usize>,
}

#[derive(Clone, Copy, Debug)]
struct Node {
    point: usize,
    axis: usize,
    left: Option<usize>,
    right: Option<usize>,
}

impl KdTree {
    /// `coords` holds `len * dim` values, point-major.
    pub fn new(dim: usize, coords: Vec<f64>) -> Self {
        assert!(dim > 0 && coords.len() % dim == 0, "coordinate buffer does not match dimension");
        let count = coords.len() / dim;
        let mut idx: Vec<usize> = (0..count).collect();
        let mut tree = KdTree { dim, coords, nodes: Vec::with_capacity(count), root: None };
        tree.root = tree.build(&mut idx);
        tree
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    fn at(&self, i: usize, axis: usize) -> f64 {
        self.coords[i * self.dim + axis]
    }

    fn build(&mut self, idx: &mut [usize]) -> Option<usize> {
        if idx.is_empty() {
            return None;
        }
        let mut axis = 0;
        let mut spread = f64::NEG_INFINITY;
        for a in 0..self.dim {
            let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                let x = self.at(i, a);
                (lo.min(x), hi.max(x))
            });
            if hi - lo > spread {
                spread = hi - lo;
                axis = a;
            }
        }
        let mid = idx.len() / 2;
        idx.select_nth_unstable_by(mid, |&a, &b| self.at(a, axis).total_cmp(&self.at(b, axis)));
        let point = idx[mid];
        let (left, rest) = idx.split_at_mut(mid);
        let left = self.build(left);
        let right = self.build(&mut rest[1..]);
        self.nodes.push(Node { point, axis, left, right });
        Some(self.nodes.len() - 1)
    }

    /// Index and squared distance of the nearest stored point.
    pub fn nearest(&self, q: &[f64]) -> Option<(usize, f64)> {
        self.nearest_until(q, f64::NEG_INFINITY)
    }

    /// As [`KdTree::nearest`], but gives up as soon as some point within
    /// squared distance `stop` is seen; the result is then only that point.
    pub fn nearest_until(&self, q: &[f64], stop: f64) -> Option<(usize, f64)> {
        assert_eq!(q.len(), self.dim, "query has wrong dimension");
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(self.root, q, stop, &mut best);
        self.root.map(|_| best)
    }

    fn search(&self, node: Option<usize>, q: &[f64], stop: f64, best: &mut (usize, f64)) {
        let Some(n) = node else { return };
        let node = self.nodes[n];
        let d2: f64 = (0..self.dim).map(|a| (self.at(node.point, a) - q[a]).powi(2)).sum();
        if d2 < best.1 {
            *best = (node.point, d2);
        }
        if best.1 <= stop {
            return;
        }
        let diff = q[node.axis] - self.at(node.point, node.axis);
        let (near, far) = if diff < 0.0 { (node.left, node.right) } else { (node.right, node.left) };
        self.search(near, q, stop, best);
        if diff * diff < best.1 && best.1 > stop {
            self.search(far, q, stop, best);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_brute_force() {
        let mut state = 12345u64;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let dim = 4;
        let pts: Vec<f64> = (0..500 * dim).map(|_| rnd()).collect();
        let tree = KdTree::new(dim, pts.clone());
        for _ in 0..100 {
            let q: Vec<f64> = (0..dim).map(|_| rnd()).collect();
            let brute = (0..500)
                .map(|i| (0..dim).map(|a| (pts[i * dim + a] - q[a]).powi(2)).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            assert_eq!(tree.nearest(&q).unwrap().1, brute);
        }
    }
}
