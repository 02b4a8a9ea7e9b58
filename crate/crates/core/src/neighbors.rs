//! Exact radius and k-nearest-neighbor queries over a fixed point set.

use alloc::collections::BinaryHeap;
use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::cloud::Point;
use crate::error::{Error, Result};

const LEAF_SIZE: usize = 12;

#[derive(Clone, Debug)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

/// Immutable kd-tree. Results are exact: radius queries return ascending
/// point indices, kNN queries sort by distance then index.
#[derive(Clone, Debug)]
pub struct NeighborIndex {
    points: Vec<Point>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    dist2: f64,
    index: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist2.total_cmp(&other.dist2).then(self.index.cmp(&other.index))
    }
}

fn dist2(a: &Point, b: &Point) -> f64 {
    let d = a - b;
    d.x * d.x + d.y * d.y + d.z * d.z
}

impl NeighborIndex {
    pub fn new(points: &[Point]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let mut index = Self { points: points.to_vec(), order: (0..points.len()).collect(), nodes: Vec::new() };
        index.build(0, points.len());
        Ok(index)
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let axis = self.widest_axis(start, end);
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a][axis].total_cmp(&points[b][axis]).then(a.cmp(&b))
        });
        let value = self.points[self.order[mid]][axis];
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split { axis, value, left, right };
        id
    }

    fn widest_axis(&self, start: usize, end: usize) -> usize {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in &self.order[start..end] {
            for a in 0..3 {
                lo[a] = lo[a].min(self.points[i][a]);
                hi[a] = hi[a].max(self.points[i][a]);
            }
        }
        (0..3).max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])).then(b.cmp(&a))).unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Indices of all points with `‖p − center‖ ≤ radius`, ascending.
    pub fn radius_query(&self, center: &Point, radius: f64) -> Result<Vec<usize>> {
        if !(radius > 0.0) {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
        }
        let r2 = radius * radius;
        let mut out = Vec::new();
        let mut stack = Vec::with_capacity(64);
        stack.push(0usize);
        while let Some(id) = stack.pop() {
            match self.nodes[id] {
                Node::Leaf { start, end } => {
                    out.extend(self.order[start..end].iter().copied().filter(|&i| dist2(&self.points[i], center) <= r2));
                }
                Node::Split { axis, value, left, right } => {
                    let diff = center[axis] - value;
                    let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                    if diff * diff <= r2 {
                        stack.push(far);
                    }
                    stack.push(near);
                }
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    /// The `k` nearest points, by ascending distance with ties broken by
    /// ascending index.
    pub fn knn_query(&self, center: &Point, k: usize) -> Result<Vec<usize>> {
        Ok(self.knn_with_distances(center, k)?.into_iter().map(|(i, _)| i).collect())
    }

    /// Like [`knn_query`](Self::knn_query) but also returns squared distances.
    pub fn knn_with_distances(&self, center: &Point, k: usize) -> Result<Vec<(usize, f64)>> {
        if k == 0 || k > self.points.len() {
            return Err(Error::InvalidArgument(format!(
                "k must lie in 1..={}, got {k}",
                self.points.len()
            )));
        }
        let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);
        self.knn_visit(0, center, k, &mut heap);
        let mut found = heap.into_vec();
        found.sort_unstable();
        Ok(found.into_iter().map(|c| (c.index, c.dist2)).collect())
    }

    fn knn_visit(&self, id: usize, center: &Point, k: usize, heap: &mut BinaryHeap<Candidate>) {
        match self.nodes[id] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let c = Candidate { dist2: dist2(&self.points[i], center), index: i };
                    if heap.len() < k {
                        heap.push(c);
                    } else if heap.peek().is_some_and(|worst| c < *worst) {
                        heap.pop();
                        heap.push(c);
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = center[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.knn_visit(near, center, k, heap);
                // Equal bound still visited: a tie may carry a smaller index.
                if heap.len() < k || heap.peek().is_some_and(|worst| diff * diff <= worst.dist2) {
                    self.knn_visit(far, center, k, heap);
                }
            }
        }
    }
}
