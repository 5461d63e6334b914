//! Regions of interest and scan-level feature assembly.
//!
//! A scan is split by ring (beam) or by semantic class, each region is
//! further split into close/mid/far range bands, and every resulting
//! sub-region gets its own descriptor computed with the band's k. Rows are
//! scattered back so that row `j` of a [`PointwiseFeatureSet`] always
//! describes point `j` of the scan.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::cloud::{PointCloud, SensorGeometry};
use crate::error::{RapidError, Result};
use crate::geometry::range_of;
use crate::rapid::{rapid_roi, RangeAwareConfig, RangeBand, RapidMatrix, RoiId, StageProfile};

/// Azimuth and elevation bin of a point: `floor(atan2(y, x) / Δθ)` and
/// `floor(asin(z / ‖p‖) / Δφ)`.
///
/// Elevation is evaluated as `atan2(z, ‖(x, y)‖)`, the same angle with
/// better rounding near bin edges such as exactly 45°.
pub fn cylindrical_bin(point: [f64; 3], geometry: &SensorGeometry) -> Result<(i64, i64)> {
    let norm = range_of(point);
    if norm == 0.0 {
        return Err(RapidError::UndefinedAngle);
    }
    let theta = point[1].atan2(point[0]);
    let phi = elevation(point);
    Ok((
        (theta / geometry.delta_theta).floor() as i64,
        (phi / geometry.delta_phi).floor() as i64,
    ))
}

fn elevation(p: [f64; 3]) -> f64 {
    p[2].atan2(p[0].hypot(p[1]))
}

/// Ring of a point by elevation, measured from the sensor's lowest bin edge
/// and clipped to `[0, B)`. Points at the origin fall in ring 0.
pub fn ring_of(point: [f64; 3], geometry: &SensorGeometry) -> u32 {
    let norm = range_of(point);
    if norm == 0.0 {
        return 0;
    }
    let phi = elevation(point);
    let bin = ((phi - geometry.elevation_min) / geometry.delta_phi).floor();
    bin.clamp(0.0, (geometry.beam_count - 1) as f64) as u32
}

#[derive(Debug, Clone, PartialEq)]
pub struct RingPartition {
    /// Ring id of every point.
    pub ring: Vec<u32>,
    /// Point indices per ring, ascending; `members.len() == B`.
    pub members: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassPartition {
    /// Point indices per class id, ascending.
    pub members: BTreeMap<u32, Vec<usize>>,
}

/// Groups points by ring, preferring the cloud's native ring channel.
pub fn partition_rings(cloud: &PointCloud, geometry: &SensorGeometry) -> Result<RingPartition> {
    let b = geometry.beam_count;
    let ring: Vec<u32> = match cloud.ring() {
        Some(native) => {
            if let Some((i, &r)) = native.iter().enumerate().find(|(_, &r)| r as u32 >= b) {
                return Err(RapidError::contract(format!(
                    "point {i} has ring {r} but the sensor has {b} beams"
                )));
            }
            native.iter().map(|&r| r as u32).collect()
        }
        None => cloud.points().iter().map(|&p| ring_of(p, geometry)).collect(),
    };
    let mut members = vec![Vec::new(); b as usize];
    for (j, &r) in ring.iter().enumerate() {
        members[r as usize].push(j);
    }
    Ok(RingPartition { ring, members })
}

pub fn partition_classes(cloud: &PointCloud) -> Result<ClassPartition> {
    let labels = cloud.labels().ok_or(RapidError::LabelsRequired)?;
    let mut members: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (j, &y) in labels.iter().enumerate() {
        members.entry(y).or_default().push(j);
    }
    Ok(ClassPartition { members })
}

/// Splits a region into its close, mid and far parts.
pub fn split_bands(indices: &[usize], cloud: &PointCloud, config: &RangeAwareConfig) -> [Vec<usize>; 3] {
    let mut bands: [Vec<usize>; 3] = Default::default();
    for &j in indices {
        let slot = match config.band_of_range(range_of(cloud.point(j))) {
            RangeBand::Close => 0,
            RangeBand::Mid => 1,
            _ => 2,
        };
        bands[slot].push(j);
    }
    bands
}

fn band_jobs(
    groups: impl Iterator<Item = (u32, Vec<usize>)>,
    make_id: fn(u32, RangeBand) -> RoiId,
    cloud: &PointCloud,
    config: &RangeAwareConfig,
) -> Vec<(RoiId, Vec<usize>)> {
    let mut jobs = Vec::new();
    for (group, indices) in groups {
        for (band, subset) in RangeBand::SPLIT.into_iter().zip(split_bands(&indices, cloud, config)) {
            if !subset.is_empty() {
                jobs.push((make_id(group, band), subset));
            }
        }
    }
    jobs
}

/// Non-empty ring sub-regions in ascending RoI order.
pub fn ring_regions(
    cloud: &PointCloud,
    geometry: &SensorGeometry,
    config: &RangeAwareConfig,
) -> Result<Vec<(RoiId, Vec<usize>)>> {
    let rings = partition_rings(cloud, geometry)?;
    let groups = rings.members.into_iter().enumerate().map(|(b, m)| (b as u32, m));
    Ok(band_jobs(groups, RoiId::ring, cloud, config))
}

/// Non-empty class sub-regions in ascending RoI order.
pub fn class_regions(cloud: &PointCloud, config: &RangeAwareConfig) -> Result<Vec<(RoiId, Vec<usize>)>> {
    let classes = partition_classes(cloud)?;
    Ok(band_jobs(classes.members.into_iter(), RoiId::class, cloud, config))
}

/// Computes one matrix per region, walking the k fallback chain and padding
/// regions too small for every configured k. Output order follows `jobs`.
pub fn extract_regions(
    jobs: &[(RoiId, Vec<usize>)],
    cloud: &PointCloud,
    config: &RangeAwareConfig,
    profile: Option<&StageProfile>,
) -> Result<Vec<RapidMatrix>> {
    config.validate()?;
    jobs.par_iter()
        .map(|(roi, subset)| {
            let chain = config.fallback_chain(roi.band);
            match chain.iter().find(|&&k| subset.len() > k) {
                Some(&k) => rapid_roi(*roi, subset, cloud, k, config.delta, profile),
                None => Ok(RapidMatrix::padding(
                    *roi,
                    subset.clone(),
                    config.k_for(roi.band),
                    config.delta,
                )),
            }
        })
        .collect()
}

/// Per-ring, per-band matrices in ascending RoI order.
pub fn ring_matrices(
    cloud: &PointCloud,
    geometry: &SensorGeometry,
    config: &RangeAwareConfig,
    profile: Option<&StageProfile>,
) -> Result<Vec<RapidMatrix>> {
    let jobs = ring_regions(cloud, geometry, config)?;
    extract_regions(&jobs, cloud, config, profile)
}

/// Per-class, per-band matrices in ascending RoI order.
pub fn class_matrices(
    cloud: &PointCloud,
    config: &RangeAwareConfig,
    profile: Option<&StageProfile>,
) -> Result<Vec<RapidMatrix>> {
    let jobs = class_regions(cloud, config)?;
    extract_regions(&jobs, cloud, config, profile)
}

/// Ring-restricted features for every point; needs no labels.
pub fn r_rapid(
    cloud: &PointCloud,
    geometry: &SensorGeometry,
    config: &RangeAwareConfig,
) -> Result<PointwiseFeatureSet> {
    let matrices = ring_matrices(cloud, geometry, config, None)?;
    PointwiseFeatureSet::from_matrices(cloud.len(), config.k_max(), &matrices)
}

/// Class-restricted features for every point; labels must be present.
pub fn c_rapid(cloud: &PointCloud, config: &RangeAwareConfig) -> Result<PointwiseFeatureSet> {
    let matrices = class_matrices(cloud, config, None)?;
    PointwiseFeatureSet::from_matrices(cloud.len(), config.k_max(), &matrices)
}

/// Scan-level features, one fixed-width row per point.
///
/// Columns past a row's valid width hold 1.0 (normalized) and +inf (raw).
#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseFeatureSet {
    width: usize,
    values: Vec<f64>,
    raw: Vec<f64>,
    roi: Vec<RoiId>,
    valid_width: Vec<usize>,
}

impl PointwiseFeatureSet {
    /// Scatters matrix rows back to their anchor points. The matrices must
    /// cover each of the `n` points exactly once.
    pub fn from_matrices(n: usize, width: usize, matrices: &[RapidMatrix]) -> Result<Self> {
        let mut values = vec![1.0; n * width];
        let mut raw = vec![f64::INFINITY; n * width];
        let mut roi: Vec<Option<RoiId>> = vec![None; n];
        let mut valid_width = vec![0; n];
        for m in matrices {
            if m.k > width {
                return Err(RapidError::contract(format!(
                    "matrix {} has k = {} above row width {width}",
                    m.roi, m.k
                )));
            }
            for (i, &j) in m.anchors.iter().enumerate() {
                if j >= n {
                    return Err(RapidError::contract(format!("anchor {j} out of range")));
                }
                if roi[j].replace(m.roi).is_some() {
                    return Err(RapidError::contract(format!("point {j} covered twice")));
                }
                if !m.padded {
                    values[j * width..j * width + m.k].copy_from_slice(m.row(i));
                    raw[j * width..j * width + m.k].copy_from_slice(m.raw_row(i));
                    valid_width[j] = m.k;
                }
            }
        }
        let roi = roi
            .into_iter()
            .enumerate()
            .map(|(j, r)| r.ok_or_else(|| RapidError::contract(format!("point {j} not covered"))))
            .collect::<Result<_>>()?;
        Ok(Self {
            width,
            values,
            raw,
            roi,
            valid_width,
        })
    }

    pub fn len(&self) -> usize {
        self.roi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roi.is_empty()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.width..(j + 1) * self.width]
    }

    pub fn raw_row(&self, j: usize) -> &[f64] {
        &self.raw[j * self.width..(j + 1) * self.width]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn roi(&self, j: usize) -> RoiId {
        self.roi[j]
    }

    pub fn valid_width(&self, j: usize) -> usize {
        self.valid_width[j]
    }

    /// Fraction of points whose row is entirely padding.
    pub fn padding_rate(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.valid_width.iter().filter(|&&w| w == 0).count() as f64 / self.len() as f64
    }
}
