//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p rapid-core --test acceptance`. The process exits
//! non-zero if any criterion fails.

mod common;

use std::collections::HashSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::*;
use ndarray::{Array1, Array2, Array3, Axis};
use rand::Rng;
use rapid_core::config::RunConfig;
use rapid_core::embed::*;
use rapid_core::fusion::{excite, fuse, FusionGate};
use rapid_core::geometry::{apply_transform, knn_brute, knn_indexed, Metric, RigidTransform};
use rapid_core::io::encode_features;
use rapid_core::metrics::ConfusionMatrix;
use rapid_core::partition::{extract_regions, ring_matrices};
use rapid_core::rapid::RangeBand;
use rapid_core::synth::{synthesize_scene, SyntheticSceneSpec};
use rapid_core::{rapid, PointCloud, RangeAwareConfig, SensorGeometry};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn criterion(id: u32, name: &str, check: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
        let msg = panic
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        outcome(false, format!("panicked: {msg}"))
    });
    println!(
        "{} criterion {id:>2} {name}: {} [{:.1} s]",
        if result.pass { "PASS" } else { "FAIL" },
        result.detail,
        start.elapsed().as_secs_f64()
    );
    result.pass
}

fn sensor16() -> SensorGeometry {
    SensorGeometry::from_fov(16, 15.0, -15.0, 900).unwrap()
}

fn synthetic_scene(i: u64) -> (PointCloud, SensorGeometry) {
    let geometry = if i.is_multiple_of(2) {
        small_sensor()
    } else {
        sensor16()
    };
    let spec = SyntheticSceneSpec {
        max_range: 60.0,
        noise_sigma: if i.is_multiple_of(3) { 0.0 } else { 0.01 },
        ..SyntheticSceneSpec::street(geometry, 1000 + i)
    };
    (synthesize_scene(&spec).unwrap(), geometry)
}

fn isometry() -> Outcome {
    let start = Instant::now();
    let config = RangeAwareConfig::default();
    let mut r = rng(1);
    let mut scans: Vec<(String, PointCloud, Regions, usize)> = (0..20)
        .map(|i| {
            let (cloud, geometry) = synthetic_scene(i);
            let jobs = regions(&cloud, &geometry, &config);
            (format!("synthetic {i}"), cloud, jobs, 5)
        })
        .collect();
    for (name, cloud) in real_scans() {
        let jobs = regions(&cloud, &small_sensor(), &config);
        scans.push((name.to_string(), cloud, jobs, 10));
    }
    let (mut transforms, mut rows) = (0, 0);
    let mut total = Deviation {
        rank_ok: true,
        ..Deviation::default()
    };
    let mut worst = String::new();
    for (name, cloud, jobs, trials) in &scans {
        let base = extract_regions(jobs, cloud, &config, None).unwrap();
        for _ in 0..*trials {
            let t = RigidTransform::random(&mut r, 200.0);
            let moved = extract_regions(jobs, &apply_transform(cloud, &t), &config, None).unwrap();
            let d = compare(&base, &moved, |j| j, 1e-9);
            if d.raw > total.raw {
                worst = name.clone();
            }
            rows += d.rows;
            total = total.merge(d);
            transforms += 1;
        }
    }
    let elapsed = start.elapsed();
    let pass = transforms >= 100 && total.raw <= 1e-9 && total.rank_ok && elapsed <= Duration::from_secs(120);
    outcome(
        pass,
        format!(
            "{transforms} transforms over {} scans (20 synthetic, 3 real), {rows} rows; max raw deviation {:.2e} ({worst}), \
             max normalized deviation {:.2e}, rank structure {}, {} rows moved by exact near-ties",
            scans.len(),
            total.raw,
            total.values,
            if total.rank_ok { "consistent" } else { "INCONSISTENT" },
            total.reordered
        ),
    )
}

fn permutation() -> Outcome {
    let start = Instant::now();
    let config = RangeAwareConfig::default();
    let mut r = rng(2);
    let mut cases: Vec<(PointCloud, SensorGeometry, usize)> = vec![(synthetic_scene(0).0, small_sensor(), 90)];
    for (_, cloud) in real_scans().into_iter().take(2) {
        cases.push((cloud, small_sensor(), 5));
    }
    let (mut shuffles, mut identical) = (0, 0);
    for (cloud, geometry, trials) in &cases {
        let base = extract_regions(&regions(cloud, geometry, &config), cloud, &config, None).unwrap();
        for _ in 0..*trials {
            let order = shuffled(&mut r, cloud.len());
            let mut inverse = vec![0; order.len()];
            for (new, &old) in order.iter().enumerate() {
                inverse[old] = new;
            }
            let permuted = cloud.permuted(&order);
            let moved = extract_regions(&regions(&permuted, geometry, &config), &permuted, &config, None).unwrap();
            shuffles += 1;
            if bitwise_equal(&base, &moved, |j| inverse[j]) {
                identical += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        shuffles >= 100 && identical == shuffles && elapsed <= Duration::from_secs(60),
        format!("{identical}/{shuffles} shuffles byte-identical (ring and class regions, synthetic and real scans)"),
    )
}

fn reflectivity_affine() -> Outcome {
    let config = RangeAwareConfig::default();
    let mut r = rng(3);
    let (street, geometry) = synthetic_scene(4);
    let (_, real) = real_scans().swap_remove(2);
    let cases = [
        (street.clone(), regions(&street, &geometry, &config)),
        (real.clone(), regions(&real, &geometry, &config)),
    ];
    let bases: Vec<_> = cases
        .iter()
        .map(|(cloud, jobs)| extract_regions(jobs, cloud, &config, None).unwrap())
        .collect();
    let (mut worst_raw, mut worst_rel, mut worst_values, mut pairs, mut rank_ok) = (0.0f64, 0.0f64, 0.0f64, 0, true);
    for _ in 0..50 {
        let a = 10f64.powf(r.random_range(-1.0..1.0));
        let b = r.random_range(-10.0..10.0);
        for ((cloud, jobs), base) in cases.iter().zip(&bases) {
            let remapped = cloud
                .with_remission(cloud.remission().iter().map(|x| a * x + b).collect())
                .unwrap();
            let d = compare(
                base,
                &extract_regions(jobs, &remapped, &config, None).unwrap(),
                |j| j,
                1e-12,
            );
            worst_raw = worst_raw.max(d.raw);
            worst_rel = worst_rel.max(d.raw_rel);
            worst_values = worst_values.max(d.values);
            rank_ok &= d.rank_ok;
        }
        pairs += 1;
    }
    // Power-of-two scales round nothing, so the output must not move at all.
    let mut exact = true;
    for scale in [0.125, 0.5, 4.0, 64.0] {
        for ((cloud, jobs), base) in cases.iter().zip(&bases) {
            let remapped = cloud
                .with_remission(cloud.remission().iter().map(|x| scale * x).collect())
                .unwrap();
            exact &= bitwise_equal(base, &extract_regions(jobs, &remapped, &config, None).unwrap(), |j| j);
        }
    }
    outcome(
        worst_values <= 1e-12 && worst_rel <= 1e-12 && rank_ok && exact,
        format!(
            "{pairs} (a, b) pairs, a in [0.1, 10], b in [-10, 10]; max normalized deviation {worst_values:.2e}, \
             max raw deviation {worst_raw:.2e} absolute / {worst_rel:.2e} relative; power-of-two scales bit-identical: {exact}"
        ),
    )
}

/// Full sort of the other subset points by (squared distance, index).
fn knn_oracle(subset: &[usize], cloud: &PointCloud, k: usize) -> Vec<Vec<usize>> {
    subset
        .iter()
        .map(|&a| {
            let p = cloud.point(a);
            let mut cand: Vec<(f64, usize)> = subset
                .iter()
                .filter(|&&l| l != a)
                .map(|&l| {
                    let q = cloud.point(l);
                    let d = [p[0] - q[0], p[1] - q[1], p[2] - q[2]];
                    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2], l)
                })
                .collect();
            cand.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            cand.iter().take(k).map(|c| c.1).collect()
        })
        .collect()
}

fn knn_equivalence() -> Outcome {
    let mut r = rng(4);
    let (mut checked, mut matched, mut oracle_checked) = (0, 0, 0);
    for i in 0..200 {
        let size = (10f64 * 200f64.powf(r.random_range(0.0..=1.0))).round() as usize;
        let k = [3, 5, 7, 10][i % 4];
        let size = size.clamp(k + 1, 2000);
        let cloud = if i % 2 == 0 {
            lattice_cloud(&mut r, size + 20, 10)
        } else {
            random_cloud(&mut r, size + 20, 30.0)
        };
        let mut subset = shuffled(&mut r, cloud.len())[..size].to_vec();
        subset.sort_unstable();
        let g: Vec<f64> = subset.iter().map(|&j| cloud.remission()[j] * 2.0).collect();
        let metric = if i % 3 == 0 {
            Metric::Reflective(&g)
        } else {
            Metric::Coordinate
        };
        let fast = knn_indexed(&subset, &cloud, k, &metric).unwrap();
        let mut ok = fast == knn_brute(&subset, &cloud, k, &metric).unwrap();
        if size <= 600 && matches!(metric, Metric::Coordinate) {
            let expected = knn_oracle(&subset, &cloud, k);
            ok &= fast.iter().zip(&expected).all(|(l, e)| &l.neighbors == e);
            oracle_checked += 1;
        }
        checked += 1;
        matched += usize::from(ok);
    }
    outcome(
        checked >= 200 && matched == checked,
        format!(
            "{matched}/{checked} subsets (sizes 10-2000, k in {{3,5,7,10}}, half on a tie-heavy lattice) identical to brute force, \
             {oracle_checked} also against an independent full-sort oracle"
        ),
    )
}

fn worked_example() -> Outcome {
    let cloud = PointCloud::new(vec![[0.0; 3], [1.0, 0.0, 0.0], [3.0, 0.0, 0.0]], vec![0.4; 3]).unwrap();
    let m = rapid(&[0, 1, 2], &cloud, 2, f64::INFINITY).unwrap();
    let rows: Vec<&[f64]> = (0..3).map(|i| m.row(i)).collect();
    let raw: Vec<&[f64]> = (0..3).map(|i| m.raw_row(i)).collect();
    let expected: [&[f64]; 3] = [&[0.0, 0.5], &[0.0, 1.0], &[0.5, 1.0]];
    let expected_raw: [&[f64]; 3] = [&[1.0, 2.0], &[1.0, 3.0], &[2.0, 3.0]];
    outcome(
        rows == expected && raw == expected_raw,
        format!("rows {rows:?}, raw {raw:?}"),
    )
}

fn scatter_identities() -> Outcome {
    let mut r = rng(6);
    let (mut worst_softmax, mut worst_sum) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let m = r.random_range(1..=500);
        let (l, d) = (r.random_range(1..6), r.random_range(1..8));
        let points: Vec<[f64; 3]> = (0..m)
            .map(|_| std::array::from_fn(|_| r.random_range(0.0..3.0)))
            .collect();
        let groups = voxelize(&points, r.random_range(0.1..1.5)).unwrap();
        let scores = Array2::from_shape_simple_fn((m, l), || r.random_range(-40.0..40.0));
        let a = scatter_softmax(&scores, &groups).unwrap();
        for members in &groups.members {
            for j in 0..l {
                let s: f64 = members.iter().map(|&i| a[[i, j]]).sum();
                worst_softmax = worst_softmax.max((s - 1.0).abs());
            }
        }
        let h = Array3::from_shape_simple_fn((m, l, d), || r.random_range(-5.0..5.0));
        let hv = scatter_sum(&h, &groups).unwrap();
        for (x, y) in h.sum_axis(Axis(0)).iter().zip(&hv.sum_axis(Axis(0))) {
            worst_sum = worst_sum.max((x - y).abs());
        }
    }
    outcome(
        worst_softmax <= 1e-12 && worst_sum <= 1e-9,
        format!("100 instances; max |group sum - 1| {worst_softmax:.2e}, max channel-total gap {worst_sum:.2e}"),
    )
}

fn identity_round_trip() -> Outcome {
    let mut r = rng(7);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let m = r.random_range(1..400);
        let dims = EmbedDims {
            latent: r.random_range(1..6),
            d: 0,
            d_prime: 0,
            stages: r.random_range(1..4),
        };
        let d = r.random_range(1..12);
        let dims = EmbedDims { d, d_prime: d, ..dims };
        let points: Vec<[f64; 3]> = (0..m)
            .map(|_| std::array::from_fn(|_| r.random_range(0.0..4.0)))
            .collect();
        let groups = voxelize(&points, 0.6).unwrap();
        let hv = Array3::from_shape_simple_fn((groups.voxel_count(), dims.latent, d), || r.random_range(-10.0..10.0));
        let out = inner_bottleneck(&hv, &WeightSet::identity(dims).unwrap(), &groups).unwrap();
        for (x, y) in out.h_hat_v.iter().zip(&hv) {
            worst = worst.max((x - y).abs());
        }
    }
    outcome(
        worst <= 1e-9,
        format!("50 instances with d' = d; max |Ĥ^v - H^v| {worst:.2e}"),
    )
}

fn contrastive_oracle(h: &Array2<f64>, points: &[[f64; 3]], labels: &[u32], alpha: f64, sim: Similarity) -> f64 {
    let m = points.len();
    let nearest = |i: usize, keep: &dyn Fn(usize) -> bool| {
        let mut best: Option<(f64, usize)> = None;
        for j in (0..m).filter(|&j| keep(j)) {
            let d: f64 = (0..3).map(|c| (points[i][c] - points[j][c]).powi(2)).sum();
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, j));
            }
        }
        best.map(|b| b.1)
    };
    let mut total = 0.0;
    for i in 0..m {
        if let Some(p) = nearest(i, &|j| j != i && labels[j] == labels[i]) {
            total += (alpha - sim.eval(h.row(i), h.row(p))).max(0.0);
        }
        if let Some(n) = nearest(i, &|j| labels[j] != labels[i]) {
            total += (sim.eval(h.row(i), h.row(n)) - alpha).max(0.0);
        }
    }
    total / m as f64
}

fn loss_oracles() -> Outcome {
    let mut r = rng(8);
    let (mut worst_contr, mut worst_recon, mut instances) = (0.0f64, 0.0f64, 0);
    for i in 0..600 {
        let m = 1 + i % 12;
        let points: Vec<[f64; 3]> = if i % 2 == 0 {
            (0..m)
                .map(|_| std::array::from_fn(|_| r.random_range(0..3) as f64))
                .collect()
        } else {
            (0..m)
                .map(|_| std::array::from_fn(|_| r.random_range(-5.0..5.0)))
                .collect()
        };
        let labels: Vec<u32> = (0..m).map(|_| r.random_range(0..3)).collect();
        let f = r.random_range(1..6);
        let h = Array2::from_shape_simple_fn((m, f), || r.random_range(-2.0..2.0));
        let sim = if i % 3 == 0 {
            Similarity::Dot
        } else {
            Similarity::Cosine
        };
        let alpha = r.random_range(-1.0..1.0);
        let got = contrastive_loss(&h, &points, &labels, alpha, sim).unwrap().value;
        worst_contr = worst_contr.max((got - contrastive_oracle(&h, &points, &labels, alpha, sim)).abs());
        let g = Array2::from_shape_simple_fn((m, f), || r.random_range(-3.0..3.0));
        let direct = g.iter().zip(&h).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (m * f) as f64;
        worst_recon = worst_recon.max((reconstruction_loss(&g, &h).unwrap() - direct).abs());
        instances += 1;
    }
    let two = contrastive_loss(
        &ndarray::array![[1.0, 0.0], [0.0, 1.0]],
        &[[0.0; 3], [1.0, 0.0, 0.0]],
        &[1, 1],
        0.5,
        Similarity::Cosine,
    )
    .unwrap()
    .value;
    outcome(
        worst_contr <= 1e-12 && worst_recon <= 1e-12 && two == 0.5,
        format!(
            "{instances} instances with m <= 12; max contrastive gap {worst_contr:.2e}, max reconstruction gap \
             {worst_recon:.2e}; two-point case {two}"
        ),
    )
}

fn fusion_contracts() -> Outcome {
    let mut r = rng(9);
    let (mut inside, mut shrinks) = (true, true);
    let mut extremes = (1.0f64, 0.0f64);
    for i in 0..1000 {
        let f = r.random_range(1..32);
        let h = (f / 4).max(1);
        let scale = 10f64.powf(r.random_range(-2.0..3.0));
        let gate = FusionGate {
            w1: Array2::from_shape_simple_fn((h, f), || r.random_range(-scale..scale)),
            w2: Array2::from_shape_simple_fn((f, h), || r.random_range(-scale..scale)),
        };
        let z = Array1::from_shape_simple_fn(f, || r.random_range(-50.0..50.0));
        let a = excite(&z, &gate).unwrap();
        for &v in &a {
            inside &= v > 0.0 && v < 1.0;
            extremes = (extremes.0.min(v), extremes.1.max(v));
        }
        if i % 10 == 0 {
            let e = Array3::from_shape_simple_fn((4, 2, f), || r.random_range(-100.0..100.0));
            let out = fuse(&e, &a).unwrap();
            shrinks &= out.iter().zip(&e).all(|(x, y)| x.abs() <= y.abs());
        }
    }
    let zero = excite(&Array1::from_elem(12, 3.0), &FusionGate::zeros(12, 4)).unwrap();
    let half = zero.iter().all(|&v| v == 0.5);
    outcome(
        inside && shrinks && half,
        format!(
            "1000 random gates, a_z range [{:.3e}, 1 - {:.3e}]; |E'| <= |E| {}; zero gate gives 0.5: {half}",
            extremes.0,
            1.0 - extremes.1,
            if shrinks { "holds" } else { "VIOLATED" }
        ),
    )
}

fn metrics() -> Outcome {
    let mut r = rng(10);
    let mut mismatches = 0;
    for _ in 0..500 {
        let n = r.random_range(0..40);
        let classes = r.random_range(1..6);
        let truth: Vec<u32> = (0..n).map(|_| r.random_range(0..classes)).collect();
        let pred: Vec<u32> = (0..n).map(|_| r.random_range(0..classes)).collect();
        let mut cm = ConfusionMatrix::new(classes as usize, &[]);
        cm.accumulate(&truth, &pred).unwrap();
        for c in 0..classes {
            let t: HashSet<usize> = (0..n).filter(|&i| truth[i] == c).collect();
            let p: HashSet<usize> = (0..n).filter(|&i| pred[i] == c).collect();
            let union = t.union(&p).count();
            let expected = (union > 0).then(|| t.intersection(&p).count() as f64 / union as f64);
            mismatches += usize::from(cm.iou(c as usize) != expected);
        }
    }
    let mut truth = vec![0u32; 10];
    truth.extend([1; 2]);
    let mut pred = vec![0u32; 6];
    pred.extend([1; 4]);
    pred.extend([0; 2]);
    let mut cm = ConfusionMatrix::new(2, &[]);
    cm.accumulate(&truth, &pred).unwrap();
    let hand = cm.iou(0);
    let mut perfect = ConfusionMatrix::new(4, &[]);
    perfect.accumulate(&[0, 1, 2, 3, 3, 1], &[0, 1, 2, 3, 3, 1]).unwrap();
    let miou = perfect.miou().unwrap();
    outcome(
        mismatches == 0 && hand == Some(0.5) && cm.tp_fp_fn(0) == (6, 2, 4) && miou == 1.0,
        format!("500 random instances, {mismatches} mismatches vs set oracle; TP6/FP2/FN4 IoU {hand:?}; perfect mIoU {miou}"),
    )
}

fn configurability() -> Outcome {
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs");
    let mut pass = true;
    let mut details = Vec::new();
    for (file, expected) in [("semantickitti.toml", [10, 7, 5]), ("nuscenes.toml", [8, 6, 3])] {
        let config = RunConfig::load(format!("{root}/{file}")).unwrap();
        let geometry = config.sensor.geometry().unwrap();
        let cloud = synthesize_scene(&SyntheticSceneSpec::street(geometry, 11)).unwrap();
        let matrices = ring_matrices(&cloud, &geometry, &config.rapid, None).unwrap();
        let mut widths = Vec::new();
        for band in RangeBand::SPLIT {
            let described: Vec<_> = matrices.iter().filter(|m| m.roi.band == band && !m.padded).collect();
            let full = described.iter().filter(|m| m.k == config.rapid.k_for(band)).count();
            let consistent = described.iter().all(|m| m.values.len() == m.rows() * m.k);
            pass &= full > 0 && full * 10 >= described.len() * 9 && consistent;
            widths.push(format!(
                "{band:?} k={} in {full}/{}",
                config.rapid.k_for(band),
                described.len()
            ));
        }
        let features = rapid_core::partition::r_rapid(&cloud, &geometry, &config.rapid).unwrap();
        pass &= config.rapid.k == expected && features.width() == expected[0] && features.len() == cloud.len();
        details.push(format!("{file} k={:?}: {}", config.rapid.k, widths.join(", ")));
    }
    outcome(pass, details.join("; "))
}

fn performance() -> Outcome {
    let geometry = SensorGeometry::hdl64();
    let cloud = synthesize_scene(&SyntheticSceneSpec::street(geometry, 1)).unwrap();
    let config = RangeAwareConfig::default();
    let run = |workers: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().unwrap();
        let mut times = Vec::new();
        let mut bytes = Vec::new();
        for _ in 0..3 {
            let start = Instant::now();
            let m = pool.install(|| ring_matrices(&cloud, &geometry, &config, None).unwrap());
            times.push(start.elapsed().as_secs_f64());
            bytes = encode_features(&m).unwrap();
        }
        times.sort_by(f64::total_cmp);
        (times[1], bytes)
    };
    let (single, reference) = run(1);
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut identical = true;
    let mut table = Vec::new();
    let mut best_efficiency: Option<f64> = None;
    for workers in [2, 4, 8] {
        let (t, bytes) = run(workers);
        identical &= bytes == reference;
        let speedup = single / t;
        table.push(format!("{workers}w {t:.2}s x{speedup:.2}"));
        if workers <= cores {
            best_efficiency = Some(speedup / workers as f64);
        }
    }
    let scaling = match best_efficiency {
        Some(e) => format!("efficiency at largest measurable worker count {e:.2}"),
        None => format!("worker scaling not measurable: {cores} CPU available"),
    };
    let scaling_ok = best_efficiency.is_none_or(|e| e >= 0.6);
    outcome(
        single <= 2.0 && identical && scaling_ok,
        format!(
            "{} points, {} rings; single worker {single:.2} s (limit 2 s); {}; bytes identical across 1/2/4/8 workers: {identical}; {scaling}",
            cloud.len(),
            geometry.beam_count,
            table.join(", ")
        ),
    )
}

fn main() {
    let results = [
        criterion(1, "isometry invariance", isometry),
        criterion(2, "permutation invariance", permutation),
        criterion(3, "reflectivity affine invariance", reflectivity_affine),
        criterion(4, "KNN oracle equivalence", knn_equivalence),
        criterion(5, "hand-worked RAPiD example", worked_example),
        criterion(6, "scatter softmax/sum identities", scatter_identities),
        criterion(7, "inner bottleneck identity round trip", identity_round_trip),
        criterion(8, "loss oracles", loss_oracles),
        criterion(9, "fusion contracts", fusion_contracts),
        criterion(10, "metrics", metrics),
        criterion(11, "range-aware k configurability", configurability),
        criterion(12, "performance (soft)", performance),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
