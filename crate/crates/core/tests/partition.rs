mod common;

use common::*;
use rapid_core::config::RunConfig;
use rapid_core::io::encode_features;
use rapid_core::partition::*;
use rapid_core::rapid::RangeBand;
use rapid_core::{RangeAwareConfig, RapidError};

fn preset(name: &str) -> RunConfig {
    RunConfig::load(format!("{}/../../configs/{name}.toml", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

#[test]
fn ring_features_cover_every_point_once() {
    let cloud = small_street(8);
    let config = RangeAwareConfig::default();
    let features = r_rapid(&cloud, &small_sensor(), &config).unwrap();
    assert_eq!(features.len(), cloud.len());
    assert_eq!(features.width(), 10);
    let ring = cloud.ring().unwrap();
    for (j, &r) in ring.iter().enumerate() {
        let roi = features.roi(j);
        assert_eq!(roi.group, u32::from(r));
        let w = features.valid_width(j);
        assert!(w <= config.k_for(roi.band));
        assert!(features.row(j)[w..].iter().all(|&v| v == 1.0));
        assert!(features.raw_row(j)[w..].iter().all(|v| v.is_infinite()));
    }
}

#[test]
fn both_presets_drive_extraction_with_their_widths() {
    for (name, widths) in [("semantickitti", [10, 7, 5]), ("nuscenes", [8, 6, 3])] {
        let config = preset(name);
        assert_eq!(config.rapid.k, widths);
        let cloud = rapid_core::synth::synthesize_scene(&rapid_core::synth::SyntheticSceneSpec::street(
            config.sensor.geometry().unwrap(),
            3,
        ))
        .unwrap();
        let geometry = config.sensor.geometry().unwrap();
        let matrices = ring_matrices(&cloud, &geometry, &config.rapid, None).unwrap();
        for band in RangeBand::SPLIT {
            let in_band: Vec<_> = matrices.iter().filter(|m| m.roi.band == band && !m.padded).collect();
            assert!(!in_band.is_empty(), "{name}: no {band:?} regions");
            let full = in_band.iter().filter(|m| m.k == config.rapid.k_for(band)).count();
            assert!(full * 10 >= in_band.len() * 9, "{name}: {band:?} mostly falls back");
            for m in in_band {
                assert_eq!(m.values.len(), m.rows() * m.k);
            }
        }
        let features = r_rapid(&cloud, &geometry, &config.rapid).unwrap();
        assert_eq!(features.width(), widths[0]);
    }
}

#[test]
fn class_regions_ignore_other_classes() {
    let cloud = small_street(6);
    let config = RangeAwareConfig::default();
    let base = class_matrices(&cloud, &config, None).unwrap();
    let labels = cloud.labels().unwrap();
    let moved: Vec<[f64; 3]> = cloud
        .points()
        .iter()
        .zip(labels)
        .map(|(p, &y)| {
            if y == 13 {
                [p[0] * 0.5, p[1] * 2.0, p[2] + 3.0]
            } else {
                *p
            }
        })
        .collect();
    let other = class_matrices(&cloud.with_points(moved).unwrap(), &config, None).unwrap();
    let untouched = |ms: &[rapid_core::RapidMatrix]| -> Vec<rapid_core::RapidMatrix> {
        ms.iter().filter(|m| m.roi.group != 13).cloned().collect()
    };
    assert!(bitwise_equal(&untouched(&base), &untouched(&other), |j| j));
}

#[test]
fn class_features_need_labels() {
    let cloud = small_street(6).without_labels();
    assert!(matches!(
        c_rapid(&cloud, &RangeAwareConfig::default()),
        Err(RapidError::LabelsRequired)
    ));
}

#[test]
fn class_features_cover_real_scans() {
    let config = RangeAwareConfig::default();
    for (name, cloud) in real_scans() {
        let features = c_rapid(&cloud, &config).unwrap();
        assert_eq!(features.len(), cloud.len(), "{name}");
        let labels = cloud.labels().unwrap();
        assert!((0..cloud.len()).all(|j| features.roi(j).group == labels[j]));
    }
}

#[test]
fn band_edges_belong_to_the_farther_band() {
    let config = RangeAwareConfig::default();
    assert_eq!(config.band_of_range(19.999), RangeBand::Close);
    assert_eq!(config.band_of_range(20.0), RangeBand::Mid);
    assert_eq!(config.band_of_range(50.0), RangeBand::Far);
}

#[test]
fn small_regions_fall_back_then_pad() {
    let mut points: Vec<[f64; 3]> = (0..6).map(|i| [1.0 + 0.1 * i as f64, 0.0, 0.0]).collect();
    points.push([30.0, 0.0, 0.0]);
    let cloud = rapid_core::PointCloud::new(points, vec![0.5; 7])
        .unwrap()
        .with_labels(vec![4; 7])
        .unwrap();
    let features = c_rapid(&cloud, &RangeAwareConfig::default()).unwrap();
    assert!((0..6).all(|j| features.valid_width(j) == 5));
    assert_eq!(features.valid_width(6), 0);
    assert!(features.row(6).iter().all(|&v| v == 1.0));
    assert!((features.padding_rate() - 1.0 / 7.0).abs() < 1e-15);
}

#[test]
fn output_bytes_do_not_depend_on_worker_count() {
    let cloud = small_street(9);
    let config = RangeAwareConfig::default();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| encode_features(&ring_matrices(&cloud, &small_sensor(), &config, None).unwrap()).unwrap())
    };
    let one = run(1);
    assert_eq!(run(4), one);
    assert_eq!(run(3), one);
}
