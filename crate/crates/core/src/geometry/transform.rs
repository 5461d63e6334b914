use nalgebra::{Matrix3, Rotation3, Unit, UnitQuaternion, Vector3};
use rand::Rng;

use crate::cloud::PointCloud;
use crate::error::{RapidError, Result};

/// A proper rigid motion `p -> R p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl RigidTransform {
    const TOLERANCE: f64 = 1e-12;

    /// Validates `RᵀR = I` and `det R = +1` to within 1e-12.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let ortho = (rotation.transpose() * rotation - Matrix3::identity()).abs().max();
        let det = rotation.determinant();
        if ortho > Self::TOLERANCE || (det - 1.0).abs() > Self::TOLERANCE {
            return Err(RapidError::contract(format!(
                "rotation is not proper orthonormal (|RᵀR-I|={ortho:e}, det={det})"
            )));
        }
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(RapidError::contract("translation must be finite"));
        }
        Ok(Self { rotation, translation })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn translation(t: [f64; 3]) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::from(t),
        }
    }

    pub fn from_axis_angle(axis: [f64; 3], angle: f64, t: [f64; 3]) -> Self {
        let axis = Unit::new_normalize(Vector3::from(axis));
        Self {
            rotation: Rotation3::from_axis_angle(&axis, angle).into_inner(),
            translation: Vector3::from(t),
        }
    }

    /// Uniformly random rotation with a translation drawn from `[-spread, spread]³`.
    pub fn random(rng: &mut impl Rng, spread: f64) -> Self {
        // Shoemake's method: a uniform unit quaternion from three uniforms.
        let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
        let tau = std::f64::consts::TAU;
        let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
        let q = nalgebra::Quaternion::new(
            b * (tau * u3).cos(),
            a * (tau * u2).sin(),
            a * (tau * u2).cos(),
            b * (tau * u3).sin(),
        );
        let rotation = UnitQuaternion::from_quaternion(q).to_rotation_matrix().into_inner();
        let translation = Vector3::from_fn(|_, _| rng.random_range(-spread..=spread));
        Self { rotation, translation }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation_vector(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn apply_point(&self, p: [f64; 3]) -> [f64; 3] {
        let q = self.rotation * Vector3::from(p) + self.translation;
        [q.x, q.y, q.z]
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }
}

/// Maps every coordinate through `transform`; remission, ring and labels are untouched.
pub fn apply_transform(cloud: &PointCloud, transform: &RigidTransform) -> PointCloud {
    let points = cloud.points().iter().map(|&p| transform.apply_point(p)).collect();
    cloud
        .with_points(points)
        .expect("rigid image of finite points is finite")
}

/// Euclidean norm of a point: its range from the sensor origin.
pub fn range_of(p: [f64; 3]) -> f64 {
    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
}
