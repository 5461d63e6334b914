//! Synthetic scans from a simulated spinning LiDAR.
//!
//! Every beam/azimuth pair casts one ray from the sensor against a list of
//! primitives; the closest hit within range becomes a point carrying that
//! primitive's class and reflectivity. Noise perturbs the measured range
//! only, so elevation and hence ring membership stay exact. Points are
//! emitted in the sensor frame.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::cloud::{PointCloud, SensorGeometry};
use crate::error::{RapidError, Result};
use crate::geometry::RigidTransform;
use crate::partition::ring_of;

/// Closest range a ray may register a hit at.
const MIN_RANGE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    /// Infinite plane `normal · p = offset`; `normal` need not be unit length.
    Plane { normal: [f64; 3], offset: f64 },
    /// Box rotated by `yaw` about the vertical axis.
    Box {
        center: [f64; 3],
        half_extents: [f64; 3],
        yaw: f64,
    },
    /// Vertical open cylinder.
    Cylinder {
        axis_xy: [f64; 2],
        radius: f64,
        z_min: f64,
        z_max: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Primitive {
    pub shape: Shape,
    pub class: u32,
    pub reflectivity: f64,
}

impl Primitive {
    pub fn plane(normal: [f64; 3], offset: f64, class: u32, reflectivity: f64) -> Self {
        Self {
            shape: Shape::Plane { normal, offset },
            class,
            reflectivity,
        }
    }

    pub fn cuboid(center: [f64; 3], half_extents: [f64; 3], yaw: f64, class: u32, reflectivity: f64) -> Self {
        Self {
            shape: Shape::Box {
                center,
                half_extents,
                yaw,
            },
            class,
            reflectivity,
        }
    }

    pub fn cylinder(axis_xy: [f64; 2], radius: f64, z: [f64; 2], class: u32, reflectivity: f64) -> Self {
        Self {
            shape: Shape::Cylinder {
                axis_xy,
                radius,
                z_min: z[0],
                z_max: z[1],
            },
            class,
            reflectivity,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSceneSpec {
    pub primitives: Vec<Primitive>,
    pub geometry: SensorGeometry,
    /// Sensor-to-world pose.
    pub pose: RigidTransform,
    /// Standard deviation of the range noise in meters.
    pub noise_sigma: f64,
    pub max_range: f64,
    pub seed: u64,
}

impl SyntheticSceneSpec {
    pub fn new(primitives: Vec<Primitive>, geometry: SensorGeometry, seed: u64) -> Self {
        Self {
            primitives,
            geometry,
            pose: RigidTransform::identity(),
            noise_sigma: 0.0,
            max_range: 80.0,
            seed,
        }
    }

    /// A straight street: road surface, building facades on both sides, and
    /// a seeded scatter of parked cars, poles and tree trunks.
    ///
    /// Class ids follow SemanticKITTI: car 1, road 9, building 13, trunk 16,
    /// pole 18.
    pub fn street(geometry: SensorGeometry, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_57EE7);
        let ground = -1.73;
        let mut primitives = vec![
            Primitive::plane([0.0, 0.0, 1.0], ground, 9, 0.18),
            Primitive::plane([0.0, 1.0, 0.0], 14.0, 13, 0.42),
            Primitive::plane([0.0, 1.0, 0.0], -16.0, 13, 0.37),
        ];
        for _ in 0..14 {
            let side = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let x = rng.random_range(-60.0..60.0);
            let y = side * rng.random_range(4.0..7.5);
            let yaw = rng.random_range(-0.15..0.15);
            let r = rng.random_range(0.25..0.9);
            primitives.push(Primitive::cuboid([x, y, ground + 0.75], [2.2, 0.9, 0.75], yaw, 1, r));
        }
        for _ in 0..10 {
            let x = rng.random_range(-70.0..70.0);
            let y = if rng.random::<bool>() { 9.5 } else { -10.5 };
            if rng.random::<bool>() {
                primitives.push(Primitive::cylinder([x, y], 0.12, [ground, 5.0], 18, 0.55));
            } else {
                let r = rng.random_range(0.25..0.45);
                primitives.push(Primitive::cylinder([x, y], r, [ground, 3.0], 16, 0.3));
            }
        }
        Self {
            noise_sigma: 0.01,
            ..Self::new(primitives, geometry, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.primitives.is_empty() {
            return Err(RapidError::EmptyScene);
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(RapidError::Config(format!(
                "noise sigma must be finite and non-negative, got {}",
                self.noise_sigma
            )));
        }
        if !(self.max_range > MIN_RANGE && self.max_range.is_finite()) {
            return Err(RapidError::Config(format!("bad max range {}", self.max_range)));
        }
        self.geometry.validated()?;
        for p in &self.primitives {
            if !(p.reflectivity.is_finite()) {
                return Err(RapidError::Config("reflectivity must be finite".into()));
            }
            let ok = match p.shape {
                Shape::Plane { normal, .. } => Vector3::from(normal).norm() > 0.0,
                Shape::Box { half_extents, .. } => half_extents.iter().all(|&h| h > 0.0),
                Shape::Cylinder {
                    radius, z_min, z_max, ..
                } => radius > 0.0 && z_min < z_max,
            };
            if !ok {
                return Err(RapidError::Config(format!("degenerate primitive {p:?}")));
            }
        }
        Ok(())
    }
}

/// Ray parameter of the first hit beyond `t_min`, if any.
fn intersect(shape: &Shape, o: &Vector3<f64>, d: &Vector3<f64>, t_min: f64) -> Option<f64> {
    match *shape {
        Shape::Plane { normal, offset } => {
            let n = Vector3::from(normal);
            let denom = n.dot(d);
            if denom == 0.0 {
                return None;
            }
            let t = (offset - n.dot(o)) / denom;
            (t > t_min).then_some(t)
        }
        Shape::Box {
            center,
            half_extents,
            yaw,
        } => {
            let (s, c) = yaw.sin_cos();
            let rel = o - Vector3::from(center);
            let local = |v: &Vector3<f64>| Vector3::new(c * v.x + s * v.y, -s * v.x + c * v.y, v.z);
            let (lo, ld) = (local(&rel), local(d));
            let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
            for a in 0..3 {
                if ld[a] == 0.0 {
                    if lo[a].abs() > half_extents[a] {
                        return None;
                    }
                    continue;
                }
                let inv = 1.0 / ld[a];
                let (mut near, mut far) = ((-half_extents[a] - lo[a]) * inv, (half_extents[a] - lo[a]) * inv);
                if near > far {
                    std::mem::swap(&mut near, &mut far);
                }
                t0 = t0.max(near);
                t1 = t1.min(far);
            }
            if t0 > t1 {
                None
            } else if t0 > t_min {
                Some(t0)
            } else if t1 > t_min {
                Some(t1)
            } else {
                None
            }
        }
        Shape::Cylinder {
            axis_xy,
            radius,
            z_min,
            z_max,
        } => {
            let (px, py) = (o.x - axis_xy[0], o.y - axis_xy[1]);
            let a = d.x * d.x + d.y * d.y;
            if a == 0.0 {
                return None;
            }
            let b = px * d.x + py * d.y;
            let c = px * px + py * py - radius * radius;
            let disc = b * b - a * c;
            if disc < 0.0 {
                return None;
            }
            let root = disc.sqrt();
            [(-b - root) / a, (-b + root) / a].into_iter().find(|&t| {
                let z = o.z + t * d.z;
                t > t_min && z >= z_min && z <= z_max
            })
        }
    }
}

/// Simulates one revolution of the sensor. Deterministic in `spec.seed`.
pub fn synthesize_scene(spec: &SyntheticSceneSpec) -> Result<PointCloud> {
    spec.validate()?;
    let geometry = &spec.geometry;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise =
        Normal::new(0.0, spec.noise_sigma).map_err(|e| RapidError::Config(format!("noise distribution: {e}")))?;
    let rotation = spec.pose.rotation();
    let origin = *spec.pose.translation_vector();

    let mut points = Vec::new();
    let mut remission = Vec::new();
    let mut labels = Vec::new();
    let mut rings = Vec::new();
    for beam in 0..geometry.beam_count {
        let elevation = geometry.beam_elevation(beam);
        let (sin_e, cos_e) = elevation.sin_cos();
        for step in 0..geometry.measurements_per_cycle {
            let azimuth = -std::f64::consts::PI + (step as f64 + 0.5) * geometry.delta_theta;
            let (sin_a, cos_a) = azimuth.sin_cos();
            let local = Vector3::new(cos_e * cos_a, cos_e * sin_a, sin_e);
            let dir = rotation * local;
            let hit = spec
                .primitives
                .iter()
                .filter_map(|p| intersect(&p.shape, &origin, &dir, MIN_RANGE).map(|t| (t, p)))
                .min_by(|a, b| a.0.total_cmp(&b.0));
            // Draw noise for every ray so the stream does not depend on hits.
            let jitter = if spec.noise_sigma > 0.0 {
                noise.sample(&mut rng)
            } else {
                0.0
            };
            let Some((t, primitive)) = hit else { continue };
            if t > spec.max_range {
                continue;
            }
            let measured = (t + jitter).max(MIN_RANGE);
            let mut p = [measured * local.x, measured * local.y, measured * local.z];
            if spec.noise_sigma == 0.0 {
                if let Shape::Plane { normal, offset } = primitive.shape {
                    p = snap_to_plane(p, &spec.pose, normal, offset);
                }
            }
            points.push(p);
            remission.push(primitive.reflectivity);
            labels.push(primitive.class);
            rings.push(beam);
        }
    }
    let cloud = PointCloud::new(points, remission)?.with_labels(labels)?;
    let ring = cloud
        .points()
        .iter()
        .zip(&rings)
        .map(|(&p, &beam)| {
            let r = ring_of(p, geometry);
            debug_assert_eq!(r, beam);
            r as u16
        })
        .collect();
    cloud.with_ring(ring)
}

/// Removes rounding drift off a plane hit, expressed in the sensor frame.
fn snap_to_plane(p: [f64; 3], pose: &RigidTransform, normal: [f64; 3], offset: f64) -> [f64; 3] {
    let n_world = Vector3::from(normal);
    let n = pose.rotation().transpose() * n_world;
    let off = offset - n_world.dot(pose.translation_vector());
    let scale = n.norm_squared();
    let mut v = Vector3::from(p);
    let axis = (0..3).find(|&a| n[a] != 0.0 && (0..3).all(|b| b == a || n[b] == 0.0));
    match axis {
        Some(a) => v[a] = off / n[a],
        None => v -= n * ((n.dot(&v) - off) / scale),
    }
    [v.x, v.y, v.z]
}
