#![allow(dead_code)]

use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rapid_core::io::{load_kitti_labels, load_kitti_scan};
use rapid_core::partition::{class_regions, ring_regions};
use rapid_core::synth::{synthesize_scene, SyntheticSceneSpec};
use rapid_core::{PointCloud, RangeAwareConfig, RapidMatrix, RoiId, SensorGeometry};

pub type Regions = Vec<(RoiId, Vec<usize>)>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// 32 beams over ±15° with 720 azimuth steps: a few thousand points per street.
pub fn small_sensor() -> SensorGeometry {
    SensorGeometry::from_fov(32, 15.0, -15.0, 720).unwrap()
}

pub fn small_street(seed: u64) -> PointCloud {
    let spec = SyntheticSceneSpec {
        max_range: 60.0,
        ..SyntheticSceneSpec::street(small_sensor(), seed)
    };
    synthesize_scene(&spec).unwrap()
}

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

/// Real airborne LiDAR tiles with their class labels.
pub fn real_scans() -> Vec<(&'static str, PointCloud)> {
    ["simple", "neighborhood", "suburb"]
        .into_iter()
        .map(|name| {
            let dir = data_dir();
            let cloud = load_kitti_scan(dir.join(format!("{name}.bin"))).unwrap();
            let cloud = load_kitti_labels(dir.join(format!("{name}.label")), cloud).unwrap();
            (name, cloud)
        })
        .collect()
}

/// Ring regions when the cloud has native rings, plus class regions when
/// it has labels.
pub fn regions(cloud: &PointCloud, geometry: &SensorGeometry, config: &RangeAwareConfig) -> Regions {
    let mut jobs = Vec::new();
    if cloud.ring().is_some() {
        jobs.extend(ring_regions(cloud, geometry, config).unwrap());
    }
    if cloud.labels().is_some() {
        jobs.extend(class_regions(cloud, config).unwrap());
    }
    jobs
}

pub fn random_cloud(rng: &mut impl Rng, n: usize, spread: f64) -> PointCloud {
    let points = (0..n)
        .map(|_| std::array::from_fn(|_| rng.random_range(-spread..spread)))
        .collect();
    let remission = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    PointCloud::new(points, remission).unwrap()
}

/// Random cloud on a coarse lattice, so that many distances tie exactly.
pub fn lattice_cloud(rng: &mut impl Rng, n: usize, side: i32) -> PointCloud {
    let points = (0..n)
        .map(|_| std::array::from_fn(|_| rng.random_range(0..side) as f64 * 0.5))
        .collect();
    let remission = (0..n).map(|_| rng.random_range(0..4) as f64 * 0.25).collect();
    PointCloud::new(points, remission).unwrap()
}

pub fn shuffled(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
}

fn gap(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs()
    }
}

/// Whether two consecutive rows of one extraction (`own`) are ordered
/// consistently with the other extraction's values (`other`): the column
/// that decided the order in `own` must not be reversed by more than `tol`
/// in `other`, and every column before it must agree within `tol`.
fn consistent_pair(own: (&[f64], &[f64]), other: (&[f64], &[f64]), tol: f64) -> bool {
    let Some(c) = own.0.iter().zip(own.1).position(|(x, y)| x != y) else {
        return true;
    };
    own.0[c] < own.1[c] && other.0[c] - other.1[c] <= tol && (0..c).all(|e| gap(other.0[e], other.1[e]) <= 2.0 * tol)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Deviation {
    /// Largest per-anchor difference of un-normalized entries.
    pub raw: f64,
    /// Largest raw difference relative to max(1, |entry|).
    pub raw_rel: f64,
    /// Largest per-anchor difference of normalized entries.
    pub values: f64,
    /// Rows compared.
    pub rows: usize,
    /// Number of row positions whose anchor differs between the two orders.
    pub reordered: usize,
    /// False if some adjacent pair is ordered differently by the other's values.
    pub rank_ok: bool,
}

impl Deviation {
    pub fn merge(self, other: Deviation) -> Deviation {
        Deviation {
            raw: self.raw.max(other.raw),
            raw_rel: self.raw_rel.max(other.raw_rel),
            values: self.values.max(other.values),
            rows: self.rows + other.rows,
            reordered: self.reordered + other.reordered,
            rank_ok: self.rank_ok && other.rank_ok,
        }
    }
}

/// Checks every consecutive row pair of `order` against `other`, where
/// `pos[j]` is the row of anchor `j` in `other`.
fn order_consistent(order: &RapidMatrix, other: &RapidMatrix, pos: &[usize], tol: f64) -> bool {
    (1..order.rows()).all(|i| {
        let own = (order.row(i - 1), order.row(i));
        let theirs = (other.row(pos[order.anchors[i - 1]]), other.row(pos[order.anchors[i]]));
        consistent_pair(own, theirs, tol)
    })
}

/// Compares two extractions of the same regions row by row via anchors,
/// where `anchor_map[j]` is the anchor in `b` that corresponds to anchor `j`
/// in `a`. Rank structure holds when the column deciding each adjacent pair
/// in one matrix orders the pair the same way in the other, up to `tol`.
pub fn compare(a: &[RapidMatrix], b: &[RapidMatrix], anchor_map: impl Fn(usize) -> usize, tol: f64) -> Deviation {
    assert_eq!(a.len(), b.len(), "region count");
    let mut total = Deviation {
        rank_ok: true,
        ..Deviation::default()
    };
    let n = a
        .iter()
        .chain(b)
        .flat_map(|m| m.anchors.iter())
        .max()
        .map_or(0, |&m| m + 1);
    for (ma, mb) in a.iter().zip(b) {
        assert_eq!(ma.roi, mb.roi);
        assert_eq!(ma.k, mb.k);
        assert_eq!(ma.rows(), mb.rows());
        assert_eq!(ma.padded, mb.padded);
        let mut pos_a = vec![usize::MAX; n];
        let mut pos_b = vec![usize::MAX; n];
        for (i, &j) in ma.anchors.iter().enumerate() {
            pos_a[j] = i;
        }
        for (i, &j) in mb.anchors.iter().enumerate() {
            pos_b[j] = i;
        }
        let mut d = Deviation {
            rows: ma.rows(),
            rank_ok: true,
            ..Deviation::default()
        };
        for (i, &j) in ma.anchors.iter().enumerate() {
            let ib = pos_b[anchor_map(j)];
            assert_ne!(ib, usize::MAX, "anchor {j} missing from the second extraction");
            for (x, y) in ma.raw_row(i).iter().zip(mb.raw_row(ib)) {
                d.raw = d.raw.max(gap(*x, *y));
                if x.is_finite() {
                    d.raw_rel = d.raw_rel.max(gap(*x, *y) / x.abs().max(1.0));
                }
            }
            for (x, y) in ma.row(i).iter().zip(mb.row(ib)) {
                d.values = d.values.max(gap(*x, *y));
            }
            if ib != i {
                d.reordered += 1;
            }
        }
        // Positions of b's anchors inside a, for checking b's order against a's values.
        let mut a_of_b = vec![usize::MAX; n];
        for &j in &ma.anchors {
            a_of_b[anchor_map(j)] = pos_a[j];
        }
        let mut b_of_a = vec![usize::MAX; n];
        for &j in &ma.anchors {
            b_of_a[j] = pos_b[anchor_map(j)];
        }
        d.rank_ok = order_consistent(mb, ma, &a_of_b, tol) && order_consistent(ma, mb, &b_of_a, tol);
        total = total.merge(d);
    }
    total
}

/// Asserts the two extractions carry bit-identical rows for corresponding anchors.
pub fn bitwise_equal(a: &[RapidMatrix], b: &[RapidMatrix], anchor_map: impl Fn(usize) -> usize) -> bool {
    if a.len() != b.len() {
        return false;
    }
    a.iter().zip(b).all(|(ma, mb)| {
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        ma.roi == mb.roi
            && ma.k == mb.k
            && bits(&ma.values) == bits(&mb.values)
            && bits(&ma.raw) == bits(&mb.raw)
            && ma.anchors.iter().zip(&mb.anchors).enumerate().all(|(i, (&ja, &jb))| {
                // Rows that tie completely may swap anchors; their bytes already match.
                anchor_map(ja) == jb || {
                    let twin = mb.anchors.iter().position(|&x| x == anchor_map(ja)).unwrap();
                    bits(mb.row(twin)) == bits(ma.row(i)) && bits(mb.raw_row(twin)) == bits(ma.raw_row(i))
                }
            })
    })
}
