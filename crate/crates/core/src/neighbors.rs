//! Exact nearest-neighbour and range-count queries.
//!
//! All searches are exact. Ties in distance are broken by the smaller point
//! index, so every downstream estimator is deterministic.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    L1,
    L2,
    Linf,
}

impl Metric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        let diffs = a.iter().zip(b).map(|(p, q)| (p - q).abs());
        match self {
            Metric::L1 => diffs.sum(),
            Metric::L2 => diffs.map(|d| d * d).sum::<f64>().sqrt(),
            Metric::Linf => diffs.fold(0.0, f64::max),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::L1 => "l1",
            Metric::L2 => "l2",
            Metric::Linf => "linf",
        }
    }
}

/// Fixed-dimension points stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    coords: Vec<f64>,
    dim: usize,
}

impl PointSet {
    pub fn new(coords: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || coords.len() % dim != 0 {
            return Err(Error::InvalidParameter(format!(
                "{} coordinates cannot form points of dimension {dim}",
                coords.len()
            )));
        }
        if let Some(i) = coords.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: i / dim });
        }
        Ok(PointSet { coords, dim })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidParameter("rows differ in dimension".into()));
        }
        Self::new(rows.concat(), dim)
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
}

/// A neighbour and its distance from the query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

impl Eq for Neighbor {}

impl Ord for Neighbor {
    fn cmp(&self, other: &Self) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Neighbor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const LEAF_SIZE: usize = 12;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        dim: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// Exact kd-tree over a borrowed [`PointSet`].
#[derive(Debug, Clone)]
pub struct KdTree<'a> {
    set: &'a PointSet,
    metric: Metric,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl<'a> KdTree<'a> {
    pub fn new(set: &'a PointSet, metric: Metric) -> Self {
        let mut tree = KdTree {
            set,
            metric,
            order: (0..set.len()).collect(),
            nodes: Vec::new(),
        };
        if !set.is_empty() {
            tree.build(0, set.len());
        }
        tree
    }

    pub fn set(&self) -> &PointSet {
        self.set
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let d = self.set.dim;
        let mut best = (0, -1.0);
        for k in 0..d {
            let (lo, hi) = self.order[start..end].iter().fold(
                (f64::INFINITY, f64::NEG_INFINITY),
                |(lo, hi), &i| {
                    let v = self.set.coords[i * d + k];
                    (lo.min(v), hi.max(v))
                },
            );
            if hi - lo > best.1 {
                best = (k, hi - lo);
            }
        }
        if best.1 <= 0.0 {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let dim = best.0;
        let mid = start + (end - start) / 2;
        let coords = &self.set.coords;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            coords[a * d + dim].total_cmp(&coords[b * d + dim])
        });
        let value = coords[self.order[mid] * d + dim];
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split {
            dim,
            value,
            left,
            right,
        };
        id
    }

    /// The `k` nearest neighbours of `query`, sorted by (distance, index).
    /// `exclude` removes one point index from consideration.
    pub fn knn_point(
        &self,
        query: &[f64],
        k: usize,
        exclude: Option<usize>,
    ) -> Result<Vec<Neighbor>> {
        let available = self.set.len() - usize::from(exclude.is_some_and(|e| e < self.set.len()));
        if k == 0 || k > available {
            return Err(Error::InsufficientPoints { k, available });
        }
        let mut heap: BinaryHeap<Neighbor> = BinaryHeap::with_capacity(k + 1);
        self.knn_rec(0, query, k, exclude, &mut heap);
        Ok(heap.into_sorted_vec())
    }

    fn knn_rec(
        &self,
        node: usize,
        q: &[f64],
        k: usize,
        exclude: Option<usize>,
        heap: &mut BinaryHeap<Neighbor>,
    ) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    if Some(i) == exclude {
                        continue;
                    }
                    let cand = Neighbor {
                        index: i,
                        distance: self.metric.distance(q, self.set.point(i)),
                    };
                    if heap.len() < k {
                        heap.push(cand);
                    } else if cand < *heap.peek().expect("heap is full") {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = q[dim] - value;
                let (near, far) = if diff < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.knn_rec(near, q, k, exclude, heap);
                // Equal distances must still be visited for the index tie-break.
                if heap.len() < k || diff.abs() <= heap.peek().expect("heap is full").distance {
                    self.knn_rec(far, q, k, exclude, heap);
                }
            }
        }
    }

    pub fn knn(&self, query_index: usize, k: usize, exclude_self: bool) -> Result<Vec<Neighbor>> {
        let q = self.set.point(query_index);
        self.knn_point(q, k, exclude_self.then_some(query_index))
    }

    /// Number of points (other than `exclude`) within `radius` of `query`.
    pub fn count_point(
        &self,
        query: &[f64],
        radius: f64,
        strict: bool,
        exclude: Option<usize>,
    ) -> usize {
        let mut count = 0;
        self.range_rec(0, query, radius, strict, &mut |i| {
            if Some(i) != exclude {
                count += 1;
            }
        });
        count
    }

    pub fn range_point(
        &self,
        query: &[f64],
        radius: f64,
        strict: bool,
        exclude: Option<usize>,
    ) -> Vec<usize> {
        let mut out = Vec::new();
        self.range_rec(0, query, radius, strict, &mut |i| {
            if Some(i) != exclude {
                out.push(i);
            }
        });
        out.sort_unstable();
        out
    }

    fn range_rec(
        &self,
        node: usize,
        q: &[f64],
        radius: f64,
        strict: bool,
        visit: &mut impl FnMut(usize),
    ) {
        let inside = |d: f64| if strict { d < radius } else { d <= radius };
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    if inside(self.metric.distance(q, self.set.point(i))) {
                        visit(i);
                    }
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = q[dim] - value;
                let (near, far) = if diff < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.range_rec(near, q, radius, strict, visit);
                if inside(diff.abs()) {
                    self.range_rec(far, q, radius, strict, visit);
                }
            }
        }
    }

    pub fn count_within(&self, query_index: usize, radius: f64, strict: bool) -> usize {
        self.count_point(
            self.set.point(query_index),
            radius,
            strict,
            Some(query_index),
        )
    }
}

/// `k` nearest neighbours of point `query_index`, ties broken by index.
pub fn knn(
    set: &PointSet,
    query_index: usize,
    k: usize,
    metric: Metric,
    exclude_self: bool,
) -> Result<Vec<Neighbor>> {
    check_index(set, query_index)?;
    KdTree::new(set, metric).knn(query_index, k, exclude_self)
}

/// Number of other points within `radius` (strictly inside when `strict`).
pub fn count_within(
    set: &PointSet,
    query_index: usize,
    radius: f64,
    metric: Metric,
    strict: bool,
) -> Result<usize> {
    check_index(set, query_index)?;
    check_radius(radius)?;
    Ok(KdTree::new(set, metric).count_within(query_index, radius, strict))
}

/// Indices of all other points within `radius` (inclusive), ascending.
pub fn range_query(
    set: &PointSet,
    center_index: usize,
    radius: f64,
    metric: Metric,
) -> Result<Vec<usize>> {
    check_index(set, center_index)?;
    check_radius(radius)?;
    let tree = KdTree::new(set, metric);
    Ok(tree.range_point(set.point(center_index), radius, false, Some(center_index)))
}

fn check_index(set: &PointSet, i: usize) -> Result<()> {
    if i >= set.len() {
        return Err(Error::InvalidParameter(format!(
            "query index {i} out of range for {} points",
            set.len()
        )));
    }
    Ok(())
}

fn check_radius(r: f64) -> Result<()> {
    if !(r >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "radius must be >= 0, got {r}"
        )));
    }
    Ok(())
}

/// O(n) scan used as the reference for [`knn`].
pub fn knn_brute(
    set: &PointSet,
    query_index: usize,
    k: usize,
    metric: Metric,
    exclude_self: bool,
) -> Result<Vec<Neighbor>> {
    let q = set.point(query_index);
    let mut all: Vec<Neighbor> = (0..set.len())
        .filter(|&i| !(exclude_self && i == query_index))
        .map(|i| Neighbor {
            index: i,
            distance: metric.distance(q, set.point(i)),
        })
        .collect();
    if k == 0 || k > all.len() {
        return Err(Error::InsufficientPoints {
            k,
            available: all.len(),
        });
    }
    all.sort();
    all.truncate(k);
    Ok(all)
}

pub fn count_within_brute(
    set: &PointSet,
    query_index: usize,
    radius: f64,
    metric: Metric,
    strict: bool,
) -> usize {
    let q = set.point(query_index);
    (0..set.len())
        .filter(|&i| i != query_index)
        .filter(|&i| {
            let d = metric.distance(q, set.point(i));
            if strict {
                d < radius
            } else {
                d <= radius
            }
        })
        .count()
}

/// True if any value occurs more than once.
pub fn has_ties(values: &[f64]) -> bool {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.windows(2).any(|w| w[0] == w[1])
}

/// Adds seeded uniform noise of half-width `rel_amplitude * std(values)`.
pub fn jitter(values: &mut [f64], rel_amplitude: f64, rng: &mut impl Rng) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    let amp = rel_amplitude * if sd > 0.0 { sd } else { 1.0 };
    for v in values.iter_mut() {
        *v += rng.random_range(-amp..=amp);
    }
}
