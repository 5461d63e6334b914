//! Exact k-nearest-neighbor search within a point subset.
//!
//! Both search paths rank candidates by `(squared distance, point index)`
//! and compute distances with the same [`dist_sq`], so their outputs are
//! bit-identical.

use rayon::prelude::*;

use super::grid::{GridIndex, BRUTE_FORCE_BELOW};
use crate::cloud::PointCloud;
use crate::error::{RapidError, Result};

/// Anchors per rayon task.
const PAR_CHUNK: usize = 256;

/// Distance used to rank neighbors.
///
/// `Reflective` lifts each point to `(x, y, z, g)` with `g` the mapped
/// reflectivity; `g[i]` belongs to `subset[i]`. The lifted distance never
/// falls below the coordinate distance.
#[derive(Debug, Clone, Copy)]
pub enum Metric<'a> {
    Coordinate,
    Reflective(&'a [f64]),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborList {
    pub anchor: usize,
    /// Cloud indices of the neighbors, nearest first.
    pub neighbors: Vec<usize>,
    pub distances: Vec<f64>,
}

impl NeighborList {
    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }
}

#[inline]
pub(crate) fn dist_sq(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    let d0 = a[0] - b[0];
    let d1 = a[1] - b[1];
    let d2 = a[2] - b[2];
    let d3 = a[3] - b[3];
    d0 * d0 + d1 * d1 + d2 * d2 + d3 * d3
}

/// Bounded candidate set kept sorted by `(squared distance, point id)`.
pub(crate) struct KBest {
    k: usize,
    items: Vec<(f64, usize, u32)>,
}

impl KBest {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            items: Vec::with_capacity(k + 1),
        }
    }

    #[inline]
    pub fn offer(&mut self, sq: f64, id: usize, local: u32) {
        if self.items.len() == self.k {
            let last = self.items[self.k - 1];
            if (sq, id) >= (last.0, last.1) {
                return;
            }
        }
        let pos = self.items.partition_point(|&(s, i, _)| (s, i) < (sq, id));
        self.items.insert(pos, (sq, id, local));
        self.items.truncate(self.k);
    }

    pub fn is_full(&self) -> bool {
        self.items.len() == self.k
    }

    /// Largest kept squared distance, or infinity while not full.
    pub fn worst(&self) -> f64 {
        if self.is_full() && self.k > 0 {
            self.items[self.k - 1].0
        } else {
            f64::INFINITY
        }
    }

    fn into_list(self, anchor: usize) -> NeighborList {
        let (neighbors, distances) = self.items.into_iter().map(|(sq, id, _)| (id, sq.sqrt())).unzip();
        NeighborList {
            anchor,
            neighbors,
            distances,
        }
    }
}

/// Lifts subset points into the 4-D space the metric measures in.
pub(crate) fn lift(subset: &[usize], cloud: &PointCloud, metric: &Metric) -> Result<Vec<[f64; 4]>> {
    if let Metric::Reflective(g) = metric {
        if g.len() != subset.len() {
            return Err(RapidError::contract(format!(
                "{} mapped reflectivities for a subset of {}",
                g.len(),
                subset.len()
            )));
        }
    }
    subset
        .iter()
        .enumerate()
        .map(|(i, &j)| {
            if j >= cloud.len() {
                return Err(RapidError::contract(format!("point index {j} out of range")));
            }
            let p = cloud.point(j);
            let w = match metric {
                Metric::Coordinate => 0.0,
                Metric::Reflective(g) => g[i],
            };
            Ok([p[0], p[1], p[2], w])
        })
        .collect()
}

fn check_size(n: usize, k: usize) -> Result<()> {
    if k == 0 {
        return Err(RapidError::contract("k must be at least 1"));
    }
    if n < k + 1 {
        return Err(RapidError::InsufficientPoints {
            needed: k + 1,
            found: n,
        });
    }
    Ok(())
}

/// Exhaustive search: every anchor against every other subset point.
pub fn knn_brute(subset: &[usize], cloud: &PointCloud, k: usize, metric: &Metric) -> Result<Vec<NeighborList>> {
    check_size(subset.len(), k)?;
    let lifted = lift(subset, cloud, metric)?;
    Ok(brute_lifted(&lifted, subset, k))
}

/// Grid-accelerated search; output equals [`knn_brute`] exactly.
pub fn knn_indexed(subset: &[usize], cloud: &PointCloud, k: usize, metric: &Metric) -> Result<Vec<NeighborList>> {
    check_size(subset.len(), k)?;
    let lifted = lift(subset, cloud, metric)?;
    Ok(indexed_lifted(&lifted, subset, k))
}

pub(crate) fn brute_lifted(points: &[[f64; 4]], ids: &[usize], k: usize) -> Vec<NeighborList> {
    let one = |a: usize| {
        let mut best = KBest::new(k);
        for (l, p) in points.iter().enumerate() {
            if l != a {
                best.offer(dist_sq(&points[a], p), ids[l], l as u32);
            }
        }
        best.into_list(ids[a])
    };
    if points.len() >= 2 * PAR_CHUNK {
        (0..points.len())
            .into_par_iter()
            .with_min_len(PAR_CHUNK)
            .map(one)
            .collect()
    } else {
        (0..points.len()).map(one).collect()
    }
}

pub(crate) fn indexed_lifted(points: &[[f64; 4]], ids: &[usize], k: usize) -> Vec<NeighborList> {
    if points.len() < BRUTE_FORCE_BELOW {
        return brute_lifted(points, ids, k);
    }
    let Some(grid) = GridIndex::build(points, ids, k) else {
        return brute_lifted(points, ids, k);
    };
    let one = |a: usize| grid.k_nearest(&points[a], k, |l| l as usize == a).into_list(ids[a]);
    if points.len() >= 2 * PAR_CHUNK {
        (0..points.len())
            .into_par_iter()
            .with_min_len(PAR_CHUNK)
            .map(one)
            .collect()
    } else {
        (0..points.len()).map(one).collect()
    }
}
