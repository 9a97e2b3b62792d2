//! Octree over axis-aligned boxes with exact best-first nearest queries.
//!
//! Items are split by the octant of their box centre; every node keeps the
//! union of its items' boxes, so the box distance is a valid lower bound and
//! pruning never changes a result. Ties resolve to the lowest item index.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::Vec3;

pub const DEFAULT_LEAF_CAPACITY: usize = 16;
const MAX_DEPTH: usize = 24;

#[derive(Debug, Clone)]
struct Node {
    min: Vec3,
    max: Vec3,
    /// Children are `first_child .. first_child + child_count` in `nodes`.
    first_child: u32,
    child_count: u8,
    /// Items are `items[start .. end]` for leaves.
    start: u32,
    end: u32,
}

#[derive(Debug, Clone)]
pub struct Octree {
    nodes: Vec<Node>,
    items: Vec<u32>,
    len: usize,
}

/// Squared distance from `p` to the box `[min, max]`.
fn box_distance_squared(p: &Vec3, min: &Vec3, max: &Vec3) -> f64 {
    let mut d2 = 0.0;
    for k in 0..3 {
        let v = if p[k] < min[k] {
            min[k] - p[k]
        } else if p[k] > max[k] {
            p[k] - max[k]
        } else {
            0.0
        };
        d2 += v * v;
    }
    d2
}

#[derive(PartialEq)]
struct Pending {
    bound: f64,
    node: u32,
}

impl Eq for Pending {}

impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on the lower bound.
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Octree {
    /// Build over item boxes `(min, max)`.
    pub fn build(boxes: &[(Vec3, Vec3)], leaf_capacity: usize) -> Self {
        let leaf_capacity = leaf_capacity.max(1);
        let mut tree = Octree {
            nodes: Vec::new(),
            items: (0..boxes.len() as u32).collect(),
            len: boxes.len(),
        };
        if boxes.is_empty() {
            return tree;
        }
        tree.nodes.push(Node {
            min: Vec3::zeros(),
            max: Vec3::zeros(),
            first_child: 0,
            child_count: 0,
            start: 0,
            end: boxes.len() as u32,
        });
        tree.split(0, boxes, leaf_capacity, 0);
        tree
    }

    fn split(&mut self, node: usize, boxes: &[(Vec3, Vec3)], leaf_capacity: usize, depth: usize) {
        let (start, end) = (self.nodes[node].start as usize, self.nodes[node].end as usize);
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        let mut clo = lo;
        let mut chi = hi;
        for &i in &self.items[start..end] {
            let (bmin, bmax) = boxes[i as usize];
            lo = lo.inf(&bmin);
            hi = hi.sup(&bmax);
            let c = (bmin + bmax) * 0.5;
            clo = clo.inf(&c);
            chi = chi.sup(&c);
        }
        self.nodes[node].min = lo;
        self.nodes[node].max = hi;

        if end - start <= leaf_capacity || depth >= MAX_DEPTH || clo == chi {
            return;
        }
        let mid = (clo + chi) * 0.5;
        let octant = |i: u32| {
            let (bmin, bmax) = boxes[i as usize];
            let c = (bmin + bmax) * 0.5;
            (c.x > mid.x) as usize | ((c.y > mid.y) as usize) << 1 | ((c.z > mid.z) as usize) << 2
        };
        // Stable partition keeps item order deterministic.
        let slice = &mut self.items[start..end];
        slice.sort_by_key(|&i| octant(i));

        let mut ranges = Vec::with_capacity(8);
        let mut s = start;
        while s < end {
            let o = octant(self.items[s]);
            let mut e = s;
            while e < end && octant(self.items[e]) == o {
                e += 1;
            }
            ranges.push((s, e));
            s = e;
        }
        if ranges.len() == 1 {
            return;
        }

        let first_child = self.nodes.len();
        self.nodes[node].first_child = first_child as u32;
        self.nodes[node].child_count = ranges.len() as u8;
        for &(s, e) in &ranges {
            self.nodes.push(Node {
                min: Vec3::zeros(),
                max: Vec3::zeros(),
                first_child: 0,
                child_count: 0,
                start: s as u32,
                end: e as u32,
            });
        }
        for k in 0..ranges.len() {
            self.split(first_child + k, boxes, leaf_capacity, depth + 1);
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Item minimizing `distance(item)`, lowest index on ties.
    ///
    /// `distance` must be bounded below by the distance from `query` to the
    /// item's box.
    pub fn nearest<F>(&self, query: &Vec3, distance: F) -> Option<(usize, f64)>
    where
        F: FnMut(usize) -> f64,
    {
        self.nearest_with_hint(query, None, distance)
    }

    /// As [`Octree::nearest`], seeding the search bound with `hint`'s
    /// distance. The result does not depend on the hint.
    pub fn nearest_with_hint<F>(&self, query: &Vec3, hint: Option<usize>, mut distance: F) -> Option<(usize, f64)>
    where
        F: FnMut(usize) -> f64,
    {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: Option<(usize, f64)> = hint.filter(|&h| h < self.len).map(|h| (h, distance(h)));
        // Slack keeps boxes touching the current best distance in play.
        let too_far = |bound: f64, best: &Option<(usize, f64)>| match best {
            Some((_, bd)) => bound > bd * (1.0 + 1e-12) + 1e-12,
            None => false,
        };
        let mut heap = BinaryHeap::new();
        heap.push(Pending {
            bound: box_distance_squared(query, &self.nodes[0].min, &self.nodes[0].max).sqrt(),
            node: 0,
        });
        while let Some(Pending { bound, node }) = heap.pop() {
            if too_far(bound, &best) {
                break;
            }
            let n = &self.nodes[node as usize];
            if n.child_count == 0 {
                for &i in &self.items[n.start as usize..n.end as usize] {
                    let i = i as usize;
                    let d = distance(i);
                    let better = match best {
                        None => true,
                        Some((bi, bd)) => d < bd || (d == bd && i < bi),
                    };
                    if better {
                        best = Some((i, d));
                    }
                }
            } else {
                for c in n.first_child..n.first_child + n.child_count as u32 {
                    let cn = &self.nodes[c as usize];
                    let bound = box_distance_squared(query, &cn.min, &cn.max).sqrt();
                    if !too_far(bound, &best) {
                        heap.push(Pending { bound, node: c });
                    }
                }
            }
        }
        best
    }
}
