//! Uniform hash grid over lifted 4-D points for exact k-nearest search.
//!
//! Points are bucketed into cubic cells. A query visits cells in Chebyshev
//! shells around its own cell and stops once the k-th best squared distance
//! is strictly below the smallest distance any unvisited cell could hold.
//! When a shell would touch more cells than there are points, the query
//! finishes with a linear scan instead. Either way the result is exactly the
//! brute-force answer, including the ascending-index tie-break.

use rustc_hash::FxHashMap;

use super::knn::{dist_sq, KBest};

/// Subsets below this size are always searched by brute force.
pub const BRUTE_FORCE_BELOW: usize = 64;

const SAMPLE_ANCHORS: usize = 32;

pub(crate) struct GridIndex<'a> {
    points: &'a [[f64; 4]],
    ids: &'a [usize],
    origin: [f64; 4],
    cell: f64,
    inv_cell: f64,
    lo: [i32; 4],
    hi: [i32; 4],
    cells: FxHashMap<[i32; 4], (u32, u32)>,
    order: Vec<u32>,
}

impl<'a> GridIndex<'a> {
    /// Builds a grid whose cell edge is the median k-th neighbor distance
    /// of a deterministic sample of anchors. Returns `None` when all points
    /// coincide, in which case brute force is the only sensible search.
    pub fn build(points: &'a [[f64; 4]], ids: &'a [usize], k: usize) -> Option<Self> {
        let n = points.len();
        debug_assert_eq!(n, ids.len());
        if n == 0 {
            return None;
        }
        let mut origin = points[0];
        let mut upper = points[0];
        for p in points {
            for d in 0..4 {
                origin[d] = origin[d].min(p[d]);
                upper[d] = upper[d].max(p[d]);
            }
        }
        let extent = (0..4).map(|d| upper[d] - origin[d]).fold(0.0, f64::max);
        if extent <= 0.0 {
            return None;
        }

        let mut cell = sampled_neighbor_spacing(points, ids, k.clamp(1, n - 1));
        if !(cell > 0.0) {
            cell = extent / (n as f64).cbrt().max(1.0);
        }
        // Keep cell coordinates comfortably inside i32.
        cell = cell.max(extent / 1.0e6);
        let inv_cell = 1.0 / cell;

        let key_of =
            |p: &[f64; 4]| -> [i32; 4] { std::array::from_fn(|d| ((p[d] - origin[d]) * inv_cell).floor() as i32) };
        let mut keyed: Vec<([i32; 4], u32)> = points.iter().enumerate().map(|(i, p)| (key_of(p), i as u32)).collect();
        keyed.sort_unstable();

        let mut cells = FxHashMap::default();
        cells.reserve(n / 2 + 1);
        let mut lo = [i32::MAX; 4];
        let mut hi = [i32::MIN; 4];
        let mut start = 0usize;
        while start < keyed.len() {
            let key = keyed[start].0;
            let mut end = start + 1;
            while end < keyed.len() && keyed[end].0 == key {
                end += 1;
            }
            cells.insert(key, (start as u32, end as u32));
            for d in 0..4 {
                lo[d] = lo[d].min(key[d]);
                hi[d] = hi[d].max(key[d]);
            }
            start = end;
        }
        let order = keyed.into_iter().map(|(_, i)| i).collect();
        Some(Self {
            points,
            ids,
            origin,
            cell,
            inv_cell,
            lo,
            hi,
            cells,
            order,
        })
    }

    fn cell_of(&self, p: &[f64; 4]) -> [i32; 4] {
        std::array::from_fn(|d| {
            let v = ((p[d] - self.origin[d]) * self.inv_cell).floor();
            v.clamp(i32::MIN as f64 / 2.0, i32::MAX as f64 / 2.0) as i32
        })
    }

    /// Number of grid cells covered by the clamped block of radius `s`.
    fn block_cells(&self, c: &[i32; 4], s: i32) -> f64 {
        (0..4)
            .map(|d| {
                let a = (c[d] - s).max(self.lo[d]);
                let b = (c[d] + s).min(self.hi[d]);
                (b - a + 1).max(0) as f64
            })
            .product()
    }

    fn for_each_shell_cell(&self, c: &[i32; 4], s: i32, mut f: impl FnMut(&[i32; 4])) {
        let range = |d: usize| (c[d] - s).max(self.lo[d])..=(c[d] + s).min(self.hi[d]);
        for x0 in range(0) {
            let e0 = (x0 - c[0]).abs() == s;
            for x1 in range(1) {
                let e1 = e0 || (x1 - c[1]).abs() == s;
                for x2 in range(2) {
                    if e1 || (x2 - c[2]).abs() == s {
                        for x3 in range(3) {
                            f(&[x0, x1, x2, x3]);
                        }
                    } else {
                        for x3 in [c[3] - s, c[3] + s] {
                            if x3 >= self.lo[3] && x3 <= self.hi[3] {
                                f(&[x0, x1, x2, x3]);
                            }
                        }
                    }
                }
            }
        }
    }

    /// Exact k nearest points to `query`, skipping local indices for which
    /// `skip` returns true.
    pub fn k_nearest(&self, query: &[f64; 4], k: usize, skip: impl Fn(u32) -> bool) -> KBest {
        let mut best = KBest::new(k);
        let total = self.order.len();
        let c = self.cell_of(query);
        let margin = self.cell * 1e-6;
        let mut visited = 0usize;
        let mut s = 0i32;
        loop {
            if s > 1 && self.block_cells(&c, s) > 2.0 * total as f64 {
                best = KBest::new(k);
                self.scan_all(query, &skip, &mut best);
                return best;
            }
            self.for_each_shell_cell(&c, s, |key| {
                if let Some(&(a, b)) = self.cells.get(key) {
                    visited += (b - a) as usize;
                    for &local in &self.order[a as usize..b as usize] {
                        if skip(local) {
                            continue;
                        }
                        let l = local as usize;
                        best.offer(dist_sq(query, &self.points[l]), self.ids[l], local);
                    }
                }
            });
            if visited >= total {
                return best;
            }
            if best.is_full() {
                let bound = s as f64 * self.cell - margin;
                if bound > 0.0 && best.worst() < bound * bound {
                    return best;
                }
            }
            s += 1;
        }
    }

    fn scan_all(&self, query: &[f64; 4], skip: &impl Fn(u32) -> bool, best: &mut KBest) {
        for (l, p) in self.points.iter().enumerate() {
            if skip(l as u32) {
                continue;
            }
            best.offer(dist_sq(query, p), self.ids[l], l as u32);
        }
    }
}

/// Median over a fixed sample of anchors of the exact k-th neighbor distance.
fn sampled_neighbor_spacing(points: &[[f64; 4]], ids: &[usize], k: usize) -> f64 {
    let n = points.len();
    let samples = SAMPLE_ANCHORS.min(n);
    let mut kth: Vec<f64> = (0..samples)
        .map(|s| {
            let a = s * n / samples;
            let mut best = KBest::new(k);
            for (l, p) in points.iter().enumerate() {
                if l != a {
                    best.offer(dist_sq(&points[a], p), ids[l], l as u32);
                }
            }
            best.worst()
        })
        .collect();
    kth.sort_unstable_by(f64::total_cmp);
    kth[kth.len() / 2].sqrt()
}
