//! Range-aware pointwise distance distributions for one region of interest.
//!
//! For a region `P` of `u` points and a neighbor count `k` the descriptor is
//! a `u × k` matrix. Entry `(j, l)` is the lifted distance
//!
//! ```text
//! ρ(j, l) = ‖ [p_j − p_{j,l},  g(r_j) − g(r_{j,l})] ‖₂
//! g(r)    = (r − r_min) / (r_max − r_min) · (D_max − D_min) + D_min
//! ```
//!
//! between anchor `j` and its `l`-th nearest neighbor under that same lifted
//! distance, where `[D_min, D_max]` spans the coordinate distances of the
//! region's coordinate k-NN pairs. Each row is sorted ascending, entries
//! above the outlier threshold δ are dropped, the survivors are min-max
//! normalized over the whole matrix, dropped entries become 1.0, and finally
//! rows are sorted lexicographically. Every step only sees pairwise
//! distances, so the result is invariant to rigid motion and to the storage
//! order of the points.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{RapidError, Result};
use crate::geometry::knn::{dist_sq, indexed_lifted, lift};
use crate::geometry::{range_of, Metric, NeighborList};

/// Range bands and their neighbor counts, plus the outlier threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RangeAwareConfig {
    /// Close/mid and mid/far boundaries in meters.
    pub band_edges: [f64; 2],
    /// `[k_close, k_mid, k_far]`.
    pub k: [usize; 3],
    /// Outlier threshold on ρ, same units as coordinates. May be infinite.
    pub delta: f64,
}

impl Default for RangeAwareConfig {
    fn default() -> Self {
        Self::SEMANTIC_KITTI
    }
}

impl RangeAwareConfig {
    /// Best-performing neighbor counts reported for SemanticKITTI.
    pub const SEMANTIC_KITTI: Self = Self {
        band_edges: [20.0, 50.0],
        k: [10, 7, 5],
        delta: 2.0,
    };

    /// Best-performing neighbor counts reported for nuScenes.
    pub const NUSCENES: Self = Self {
        band_edges: [20.0, 50.0],
        k: [8, 6, 3],
        delta: 2.0,
    };

    pub fn k_close(&self) -> usize {
        self.k[0]
    }

    pub fn k_mid(&self) -> usize {
        self.k[1]
    }

    pub fn k_far(&self) -> usize {
        self.k[2]
    }

    pub fn k_max(&self) -> usize {
        self.k.iter().copied().max().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let [near, far] = self.band_edges;
        if !(near > 0.0 && near < far && far.is_finite()) {
            return Err(RapidError::Config(format!(
                "band edges must satisfy 0 < close/mid < mid/far, got {:?}",
                self.band_edges
            )));
        }
        if self.k.contains(&0) {
            return Err(RapidError::Config("every k must be at least 1".into()));
        }
        if !(self.delta > 0.0) {
            return Err(RapidError::Config(format!(
                "delta must be positive, got {}",
                self.delta
            )));
        }
        Ok(())
    }

    /// Band containing `range`; a range exactly on an edge goes to the farther band.
    pub fn band_of_range(&self, range: f64) -> RangeBand {
        if range < self.band_edges[0] {
            RangeBand::Close
        } else if range < self.band_edges[1] {
            RangeBand::Mid
        } else {
            RangeBand::Far
        }
    }

    pub fn k_for(&self, band: RangeBand) -> usize {
        match band {
            RangeBand::Close => self.k[0],
            RangeBand::Mid => self.k[1],
            RangeBand::Far => self.k[2],
            RangeBand::All => self.k_max(),
        }
    }

    /// The band's k followed by every smaller configured k, descending.
    pub fn fallback_chain(&self, band: RangeBand) -> Vec<usize> {
        let top = self.k_for(band);
        let mut chain: Vec<usize> = self.k.iter().copied().filter(|&k| k < top).collect();
        chain.push(top);
        chain.sort_unstable_by(|a, b| b.cmp(a));
        chain.dedup();
        chain
    }
}

/// Neighbor count for a point according to its range band.
pub fn select_k(point: [f64; 3], config: &RangeAwareConfig) -> usize {
    config.k_for(config.band_of_range(range_of(point)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RangeBand {
    Close,
    Mid,
    Far,
    /// No range split was applied.
    All,
}

impl RangeBand {
    pub const SPLIT: [RangeBand; 3] = [RangeBand::Close, RangeBand::Mid, RangeBand::Far];

    fn as_str(self) -> &'static str {
        match self {
            RangeBand::Close => "close",
            RangeBand::Mid => "mid",
            RangeBand::Far => "far",
            RangeBand::All => "all",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoiKind {
    Ring,
    Class,
    Whole,
}

/// Identifies a region of interest: a ring or class, intersected with a range band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RoiId {
    pub kind: RoiKind,
    pub group: u32,
    pub band: RangeBand,
}

impl RoiId {
    pub fn ring(ring: u32, band: RangeBand) -> Self {
        Self {
            kind: RoiKind::Ring,
            group: ring,
            band,
        }
    }

    pub fn class(class: u32, band: RangeBand) -> Self {
        Self {
            kind: RoiKind::Class,
            group: class,
            band,
        }
    }

    pub fn whole() -> Self {
        Self {
            kind: RoiKind::Whole,
            group: 0,
            band: RangeBand::All,
        }
    }
}

impl fmt::Display for RoiId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            RoiKind::Ring => "ring",
            RoiKind::Class => "class",
            RoiKind::Whole => "whole",
        };
        write!(f, "{kind}:{}:{}", self.group, self.band.as_str())
    }
}

impl FromStr for RoiId {
    type Err = RapidError;

    /// Parses `kind:group:band`, e.g. `ring:12:close`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || RapidError::Format(format!("bad RoI id `{s}` (expected kind:group:band)"));
        let mut parts = s.split(':');
        let (Some(kind), Some(group), Some(band), None) = (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(bad());
        };
        let kind = match kind {
            "ring" => RoiKind::Ring,
            "class" => RoiKind::Class,
            "whole" => RoiKind::Whole,
            _ => return Err(bad()),
        };
        let band = match band {
            "close" => RangeBand::Close,
            "mid" => RangeBand::Mid,
            "far" => RangeBand::Far,
            "all" => RangeBand::All,
            _ => return Err(bad()),
        };
        Ok(Self {
            kind,
            group: group.parse().map_err(|_| bad())?,
            band,
        })
    }
}

/// Reflectivity and coordinate-distance extremes of one region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReflectivityScale {
    pub r_min: f64,
    pub r_max: f64,
    pub d_min: f64,
    pub d_max: f64,
}

impl ReflectivityScale {
    pub fn is_degenerate(&self) -> bool {
        self.r_min == self.r_max
    }
}

/// Maps reflectivity onto `[D_min, D_max]`. A constant-reflectivity region
/// maps everything to `D_min`.
pub fn reflectivity_map(r: f64, scale: &ReflectivityScale) -> f64 {
    if scale.is_degenerate() {
        return scale.d_min;
    }
    (r - scale.r_min) / (scale.r_max - scale.r_min) * (scale.d_max - scale.d_min) + scale.d_min
}

/// Lifted distance between two points with reflectivities `r_j`, `r_l`.
pub fn rho(p_j: [f64; 3], p_l: [f64; 3], r_j: f64, r_l: f64, scale: &ReflectivityScale) -> f64 {
    let a = [p_j[0], p_j[1], p_j[2], reflectivity_map(r_j, scale)];
    let b = [p_l[0], p_l[1], p_l[2], reflectivity_map(r_l, scale)];
    dist_sq(&a, &b).sqrt()
}

/// Scale over the given neighbor pairs and the subset's reflectivities.
pub fn compute_scale(
    subset: &[usize],
    cloud: &PointCloud,
    neighbor_lists: &[NeighborList],
) -> Result<ReflectivityScale> {
    let pairs = neighbor_lists
        .iter()
        .flat_map(|list| list.neighbors.iter().map(move |&n| (list.anchor, n)));
    let mut d_min = f64::INFINITY;
    let mut d_max = f64::NEG_INFINITY;
    for (a, b) in pairs {
        let (p, q) = (cloud.point(a), cloud.point(b));
        let d = dist_sq(&[p[0], p[1], p[2], 0.0], &[q[0], q[1], q[2], 0.0]).sqrt();
        d_min = d_min.min(d);
        d_max = d_max.max(d);
    }
    if !d_min.is_finite() || subset.is_empty() {
        return Err(RapidError::InsufficientPoints {
            needed: 2,
            found: subset.len(),
        });
    }
    let r = cloud.remission();
    let (r_min, r_max) = subset
        .iter()
        .map(|&j| r[j])
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    Ok(ReflectivityScale {
        r_min,
        r_max,
        d_min,
        d_max,
    })
}

/// Min-max bounds of the surviving entries and the number of δ-outliers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub min: f64,
    pub max: f64,
    pub outliers: usize,
}

/// A `u × k` descriptor with provenance.
///
/// `values` holds normalized entries and `raw` the un-normalized ρ, both
/// row-major in the same (lexicographically sorted) row order. Row `i`
/// describes cloud point `anchors[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RapidMatrix {
    pub roi: RoiId,
    pub k: usize,
    pub values: Vec<f64>,
    pub raw: Vec<f64>,
    pub anchors: Vec<usize>,
    pub scale: ReflectivityScale,
    pub delta: f64,
    pub normalization: Normalization,
    /// True when the region was too small for any configured k.
    pub padded: bool,
}

impl RapidMatrix {
    /// Pad-only rows for a region too small to describe.
    pub fn padding(roi: RoiId, anchors: Vec<usize>, k: usize, delta: f64) -> Self {
        let n = anchors.len() * k;
        Self {
            roi,
            k,
            values: vec![1.0; n],
            raw: vec![f64::INFINITY; n],
            anchors,
            scale: ReflectivityScale {
                r_min: 0.0,
                r_max: 0.0,
                d_min: 0.0,
                d_max: 0.0,
            },
            delta,
            normalization: Normalization {
                min: 0.0,
                max: 0.0,
                outliers: 0,
            },
            padded: true,
        }
    }

    pub fn rows(&self) -> usize {
        self.anchors.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.k..(i + 1) * self.k]
    }

    pub fn raw_row(&self, i: usize) -> &[f64] {
        &self.raw[i * self.k..(i + 1) * self.k]
    }
}

/// Accumulated wall time of the extraction stages, summed over regions.
#[derive(Debug, Default)]
pub struct StageProfile {
    knn: AtomicU64,
    sort: AtomicU64,
    normalize: AtomicU64,
}

impl StageProfile {
    fn add(slot: &AtomicU64, d: Duration) {
        slot.fetch_add(d.as_nanos() as u64, AtomicOrdering::Relaxed);
    }

    pub fn knn(&self) -> Duration {
        Duration::from_nanos(self.knn.load(AtomicOrdering::Relaxed))
    }

    pub fn sort(&self) -> Duration {
        Duration::from_nanos(self.sort.load(AtomicOrdering::Relaxed))
    }

    pub fn normalize(&self) -> Duration {
        Duration::from_nanos(self.normalize.load(AtomicOrdering::Relaxed))
    }
}

/// Descriptor of `subset` as a single anonymous region.
pub fn rapid(subset: &[usize], cloud: &PointCloud, k: usize, delta: f64) -> Result<RapidMatrix> {
    rapid_roi(RoiId::whole(), subset, cloud, k, delta, None)
}

/// Descriptor of `subset`, tagged with `roi`, optionally timing each stage.
pub fn rapid_roi(
    roi: RoiId,
    subset: &[usize],
    cloud: &PointCloud,
    k: usize,
    delta: f64,
    profile: Option<&StageProfile>,
) -> Result<RapidMatrix> {
    if k == 0 {
        return Err(RapidError::contract("k must be at least 1"));
    }
    if !(delta > 0.0) {
        return Err(RapidError::contract(format!("delta must be positive, got {delta}")));
    }
    if subset.len() < k + 1 {
        return Err(RapidError::InsufficientPoints {
            needed: k + 1,
            found: subset.len(),
        });
    }
    let u = subset.len();

    // Coordinate k-NN fixes the pair set that defines the reflectivity scale;
    // the lifted k-NN then ranks neighbors by ρ itself.
    let clock = Instant::now();
    let mut lifted = lift(subset, cloud, &Metric::Coordinate)?;
    let coordinate_lists = indexed_lifted(&lifted, subset, k);
    let scale = compute_scale(subset, cloud, &coordinate_lists)?;
    drop(coordinate_lists);
    let remission = cloud.remission();
    for (p, &j) in lifted.iter_mut().zip(subset) {
        p[3] = reflectivity_map(remission[j], &scale);
    }
    let lists = indexed_lifted(&lifted, subset, k);
    if let Some(p) = profile {
        StageProfile::add(&p.knn, clock.elapsed());
    }

    let clock = Instant::now();
    let mut raw = Vec::with_capacity(u * k);
    for list in &lists {
        raw.extend_from_slice(&list.distances);
    }
    let anchors: Vec<usize> = lists.iter().map(|l| l.anchor).collect();
    let (values, normalization) = normalize(&raw, delta);
    if let Some(p) = profile {
        StageProfile::add(&p.normalize, clock.elapsed());
    }

    let clock = Instant::now();
    let mut order: Vec<usize> = (0..u).collect();
    let row = |i: usize| i * k..(i + 1) * k;
    order.sort_unstable_by(|&a, &b| {
        lexicographic(&values[row(a)], &values[row(b)])
            .then_with(|| lexicographic(&raw[row(a)], &raw[row(b)]))
            .then_with(|| anchors[a].cmp(&anchors[b]))
    });
    let mut sorted_values = Vec::with_capacity(u * k);
    let mut sorted_raw = Vec::with_capacity(u * k);
    let mut sorted_anchors = Vec::with_capacity(u);
    for &i in &order {
        sorted_values.extend_from_slice(&values[i * k..(i + 1) * k]);
        sorted_raw.extend_from_slice(&raw[i * k..(i + 1) * k]);
        sorted_anchors.push(anchors[i]);
    }
    if let Some(p) = profile {
        StageProfile::add(&p.sort, clock.elapsed());
    }

    Ok(RapidMatrix {
        roi,
        k,
        values: sorted_values,
        raw: sorted_raw,
        anchors: sorted_anchors,
        scale,
        delta,
        normalization,
        padded: false,
    })
}

/// Min-max normalizes entries not exceeding `delta`; the rest become 1.0.
/// If all survivors are equal they normalize to 0.0.
pub(crate) fn normalize(raw: &[f64], delta: f64) -> (Vec<f64>, Normalization) {
    let (mut min, mut max, mut outliers) = (f64::INFINITY, f64::NEG_INFINITY, 0usize);
    for &v in raw {
        if v > delta {
            outliers += 1;
        } else {
            min = min.min(v);
            max = max.max(v);
        }
    }
    let span = max - min;
    let values = raw
        .iter()
        .map(|&v| {
            if v > delta {
                1.0
            } else if span > 0.0 {
                (v - min) / span
            } else {
                0.0
            }
        })
        .collect();
    if outliers == raw.len() {
        (min, max) = (0.0, 0.0);
    }
    (values, Normalization { min, max, outliers })
}

pub(crate) fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}
