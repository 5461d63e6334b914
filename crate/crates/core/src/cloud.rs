//! Columnar point cloud storage and sensor geometry.

use serde::{Deserialize, Serialize};

use crate::error::{RapidError, Result};

/// A LiDAR scan stored column-wise.
///
/// Coordinates are meters in the sensor frame. Remission doubles as the
/// reflectivity channel. Ring and label columns are optional and, when
/// present, always have one entry per point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<[f64; 3]>,
    remission: Vec<f64>,
    ring: Option<Vec<u16>>,
    label: Option<Vec<u32>>,
}

impl PointCloud {
    /// Builds a cloud, rejecting any non-finite coordinate or remission.
    pub fn new(points: Vec<[f64; 3]>, remission: Vec<f64>) -> Result<Self> {
        if points.len() != remission.len() {
            return Err(RapidError::contract(format!(
                "{} points but {} remission values",
                points.len(),
                remission.len()
            )));
        }
        for (index, (p, r)) in points.iter().zip(&remission).enumerate() {
            if !(p.iter().all(|v| v.is_finite()) && r.is_finite()) {
                return Err(RapidError::NonFinite { index });
            }
        }
        Ok(Self {
            points,
            remission,
            ring: None,
            label: None,
        })
    }

    pub fn empty() -> Self {
        Self {
            points: Vec::new(),
            remission: Vec::new(),
            ring: None,
            label: None,
        }
    }

    pub fn with_ring(mut self, ring: Vec<u16>) -> Result<Self> {
        if ring.len() != self.len() {
            return Err(RapidError::contract(format!(
                "{} ring indices for {} points",
                ring.len(),
                self.len()
            )));
        }
        self.ring = Some(ring);
        Ok(self)
    }

    pub fn with_labels(mut self, label: Vec<u32>) -> Result<Self> {
        if label.len() != self.len() {
            return Err(RapidError::LabelMismatch {
                expected: self.len(),
                found: label.len(),
            });
        }
        self.label = Some(label);
        Ok(self)
    }

    pub fn without_labels(mut self) -> Self {
        self.label = None;
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn point(&self, i: usize) -> [f64; 3] {
        self.points[i]
    }

    pub fn remission(&self) -> &[f64] {
        &self.remission
    }

    pub fn ring(&self) -> Option<&[u16]> {
        self.ring.as_deref()
    }

    pub fn labels(&self) -> Option<&[u32]> {
        self.label.as_deref()
    }

    /// Returns a copy with coordinates replaced; all other columns are kept.
    pub fn with_points(&self, points: Vec<[f64; 3]>) -> Result<Self> {
        let mut out = PointCloud::new(points, self.remission.clone())?;
        out.ring = self.ring.clone();
        out.label = self.label.clone();
        Ok(out)
    }

    /// Returns a copy with remission replaced.
    pub fn with_remission(&self, remission: Vec<f64>) -> Result<Self> {
        let mut out = PointCloud::new(self.points.clone(), remission)?;
        out.ring = self.ring.clone();
        out.label = self.label.clone();
        Ok(out)
    }

    /// Reorders every column so that output point `i` is input point `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        assert_eq!(order.len(), self.len(), "permutation length");
        Self {
            points: order.iter().map(|&i| self.points[i]).collect(),
            remission: order.iter().map(|&i| self.remission[i]).collect(),
            ring: self.ring.as_ref().map(|r| order.iter().map(|&i| r[i]).collect()),
            label: self.label.as_ref().map(|l| order.iter().map(|&i| l[i]).collect()),
        }
    }
}

/// Beam layout of a spinning LiDAR.
///
/// `elevation_min` is the elevation of the lowest beam's lower bin edge. Ring
/// assignment measures elevation from there so that downward-looking beams
/// land in `[0, B)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorGeometry {
    pub beam_count: u32,
    pub delta_theta: f64,
    pub delta_phi: f64,
    pub measurements_per_cycle: u32,
    #[serde(default)]
    pub elevation_min: f64,
}

impl SensorGeometry {
    pub fn new(beam_count: u32, delta_theta: f64, delta_phi: f64, measurements_per_cycle: u32) -> Result<Self> {
        Self {
            beam_count,
            delta_theta,
            delta_phi,
            measurements_per_cycle,
            elevation_min: 0.0,
        }
        .validated()
    }

    /// Derives angular resolutions from the beam count, the vertical field of
    /// view in degrees, and the number of azimuth steps per revolution.
    pub fn from_fov(beam_count: u32, fov_up_deg: f64, fov_down_deg: f64, measurements_per_cycle: u32) -> Result<Self> {
        if fov_up_deg <= fov_down_deg {
            return Err(RapidError::Config(format!(
                "vertical field of view [{fov_down_deg}, {fov_up_deg}] is empty"
            )));
        }
        if beam_count == 0 || measurements_per_cycle == 0 {
            return Err(RapidError::Config(
                "beam count and measurements per cycle must be positive".into(),
            ));
        }
        Self {
            beam_count,
            delta_theta: std::f64::consts::TAU / measurements_per_cycle as f64,
            delta_phi: (fov_up_deg - fov_down_deg).to_radians() / beam_count as f64,
            measurements_per_cycle,
            elevation_min: fov_down_deg.to_radians(),
        }
        .validated()
    }

    /// Velodyne HDL-64E layout used by SemanticKITTI.
    pub fn hdl64() -> Self {
        Self::from_fov(64, 2.0, -24.9, 2048).expect("valid preset")
    }

    pub fn validated(self) -> Result<Self> {
        let ok = self.beam_count > 0
            && self.delta_theta > 0.0
            && self.delta_phi > 0.0
            && self.delta_theta.is_finite()
            && self.delta_phi.is_finite()
            && self.elevation_min.is_finite();
        if ok {
            Ok(self)
        } else {
            Err(RapidError::Config(format!("invalid sensor geometry {self:?}")))
        }
    }

    /// Elevation of the center of beam `b`.
    pub fn beam_elevation(&self, b: u32) -> f64 {
        self.elevation_min + (b as f64 + 0.5) * self.delta_phi
    }
}
