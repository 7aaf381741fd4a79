//! Exact kd-tree over a flat row-major coordinate buffer of runtime
//! dimension. The tree stores only indices; coordinates are borrowed from the
//! owning [`SampleSet`](super::SampleSet) at query time.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const LEAF_SIZE: usize = 12;
const NO_CHILD: u32 = u32::MAX;

/// Result of a neighbor query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

impl Neighbor {
    pub(crate) fn order(&self, other: &Self) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then(self.index.cmp(&other.index))
    }
}

#[derive(Debug, Clone)]
struct Node {
    start: u32,
    end: u32,
    split_dim: u32,
    split_value: f64,
    left: u32,
    right: u32,
}

#[derive(Debug, Clone)]
pub(crate) struct KdTree {
    dim: usize,
    indices: Vec<u32>,
    nodes: Vec<Node>,
}

#[inline]
pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

impl KdTree {
    pub(crate) fn build(coords: &[f64], dim: usize) -> Self {
        let n = coords.len() / dim;
        let mut tree = Self {
            dim,
            indices: (0..n as u32).collect(),
            nodes: Vec::with_capacity(2 * n / LEAF_SIZE + 1),
        };
        if n > 0 {
            tree.build_node(coords, 0, n);
        }
        tree
    }

    fn build_node(&mut self, coords: &[f64], start: usize, end: usize) -> u32 {
        let id = self.nodes.len() as u32;
        self.nodes.push(Node {
            start: start as u32,
            end: end as u32,
            split_dim: 0,
            split_value: 0.0,
            left: NO_CHILD,
            right: NO_CHILD,
        });
        if end - start <= LEAF_SIZE {
            return id;
        }
        let dim = self.dim;
        let mut best = (0usize, 0.0f64);
        for k in 0..dim {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &i in &self.indices[start..end] {
                let v = coords[i as usize * dim + k];
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if hi - lo > best.1 {
                best = (k, hi - lo);
            }
        }
        if best.1 <= 0.0 {
            // all points coincide
            return id;
        }
        let split_dim = best.0;
        let mid = (end - start) / 2;
        self.indices[start..end].select_nth_unstable_by(mid, |&a, &b| {
            coords[a as usize * dim + split_dim].total_cmp(&coords[b as usize * dim + split_dim])
        });
        let split_value = coords[self.indices[start + mid] as usize * dim + split_dim];
        let left = self.build_node(coords, start, start + mid);
        let right = self.build_node(coords, start + mid, end);
        let node = &mut self.nodes[id as usize];
        node.split_dim = split_dim as u32;
        node.split_value = split_value;
        node.left = left;
        node.right = right;
        id
    }

    /// All points strictly closer than `radius`, sorted by (distance, index).
    pub(crate) fn within(&self, coords: &[f64], x: &[f64], radius: f64) -> Vec<Neighbor> {
        let mut out = Vec::new();
        if !self.nodes.is_empty() {
            // plane distances are compared with a small slack so that rounding
            // in the point distance can never hide a candidate
            let prune = radius * (1.0 + 1e-12);
            self.within_node(coords, x, radius, prune, 0, &mut out);
        }
        out.sort_unstable_by(Neighbor::order);
        out
    }

    fn within_node(&self, coords: &[f64], x: &[f64], radius: f64, prune: f64, id: u32, out: &mut Vec<Neighbor>) {
        let node = &self.nodes[id as usize];
        if node.left == NO_CHILD {
            for &i in &self.indices[node.start as usize..node.end as usize] {
                let i = i as usize;
                let dist = distance(&coords[i * self.dim..(i + 1) * self.dim], x);
                if dist < radius {
                    out.push(Neighbor { index: i, distance: dist });
                }
            }
            return;
        }
        let diff = x[node.split_dim as usize] - node.split_value;
        let (near, far) = if diff < 0.0 {
            (node.left, node.right)
        } else {
            (node.right, node.left)
        };
        self.within_node(coords, x, radius, prune, near, out);
        if diff.abs() <= prune {
            self.within_node(coords, x, radius, prune, far, out);
        }
    }

    /// The `k` nearest points, sorted by (distance, index).
    pub(crate) fn nearest(&self, coords: &[f64], x: &[f64], k: usize) -> Vec<Neighbor> {
        if k == 0 || self.nodes.is_empty() {
            return Vec::new();
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.nearest_node(coords, x, k, 0, &mut heap);
        let mut out: Vec<Neighbor> = heap.into_iter().map(|h| h.0).collect();
        out.sort_unstable_by(Neighbor::order);
        out
    }

    fn nearest_node(&self, coords: &[f64], x: &[f64], k: usize, id: u32, heap: &mut BinaryHeap<HeapItem>) {
        let node = &self.nodes[id as usize];
        if node.left == NO_CHILD {
            for &i in &self.indices[node.start as usize..node.end as usize] {
                let i = i as usize;
                let cand = Neighbor {
                    index: i,
                    distance: distance(&coords[i * self.dim..(i + 1) * self.dim], x),
                };
                if heap.len() < k {
                    heap.push(HeapItem(cand));
                } else if let Some(worst) = heap.peek() {
                    if cand.order(&worst.0) == Ordering::Less {
                        heap.pop();
                        heap.push(HeapItem(cand));
                    }
                }
            }
            return;
        }
        let diff = x[node.split_dim as usize] - node.split_value;
        let (near, far) = if diff < 0.0 {
            (node.left, node.right)
        } else {
            (node.right, node.left)
        };
        self.nearest_node(coords, x, k, near, heap);
        let visit_far = heap.len() < k
            || heap
                .peek()
                .map_or(true, |worst| diff.abs() <= worst.0.distance * (1.0 + 1e-12));
        if visit_far {
            self.nearest_node(coords, x, k, far, heap);
        }
    }
}

// Max-heap on (distance, index).
#[derive(Debug, Clone, Copy)]
struct HeapItem(Neighbor);

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.0.order(&other.0) == Ordering::Equal
    }
}

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.order(&other.0)
    }
}
