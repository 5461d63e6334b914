//! Channel-attention fusion of voxel-wise embeddings.
//!
//! The coordinate, intensity and RAPiD embeddings (each `c × l × f_i`) are
//! concatenated along the channel axis, squeezed to one descriptor per
//! channel by global average pooling, passed through a two-layer gate
//! `a_z = σ(W₂ ReLU(W₁ z))`, and used to rescale each channel.

use ndarray::{concatenate, Array1, Array2, Array3, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{RapidError, Result};

/// Gate weights: `W₁` is `hidden × f*`, `W₂` is `f* × hidden`.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionGate {
    pub w1: Array2<f64>,
    pub w2: Array2<f64>,
}

impl FusionGate {
    fn hidden(width: usize, ratio: usize) -> usize {
        (width / ratio.max(1)).max(1)
    }

    pub fn zeros(width: usize, ratio: usize) -> Self {
        let h = Self::hidden(width, ratio);
        Self {
            w1: Array2::zeros((h, width)),
            w2: Array2::zeros((width, h)),
        }
    }

    /// Uniform in `±1/√fan_in`.
    pub fn seeded(width: usize, ratio: usize, seed: u64) -> Self {
        let h = Self::hidden(width, ratio);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b1 = 1.0 / (width as f64).sqrt();
        let b2 = 1.0 / (h as f64).sqrt();
        Self {
            w1: Array2::from_shape_simple_fn((h, width), || rng.random_range(-b1..=b1)),
            w2: Array2::from_shape_simple_fn((width, h), || rng.random_range(-b2..=b2)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusedTensor {
    /// Concatenated embedding, `c × l × f*`.
    pub e: Array3<f64>,
    /// Channel offsets of each part in `e`, plus the total width.
    pub offsets: Vec<usize>,
    pub z: Array1<f64>,
    pub a_z: Array1<f64>,
    pub e_prime: Array3<f64>,
}

/// Concatenates parts along the channel axis; returns the tensor and the
/// starting channel of each part followed by `f*`.
pub fn concat_embeddings(parts: &[Array3<f64>]) -> Result<(Array3<f64>, Vec<usize>)> {
    let Some(first) = parts.first() else {
        return Err(RapidError::contract("nothing to concatenate"));
    };
    let (c, l, _) = first.dim();
    let mut offsets = vec![0];
    for p in parts {
        let (pc, pl, f) = p.dim();
        if (pc, pl) != (c, l) {
            return Err(RapidError::contract(format!(
                "part is {pc}x{pl}, expected {c}x{l} voxels x latents"
            )));
        }
        offsets.push(offsets.last().unwrap() + f);
    }
    let views: Vec<_> = parts.iter().map(|p| p.view()).collect();
    let e = concatenate(Axis(2), &views).map_err(|e| RapidError::contract(e.to_string()))?;
    Ok((e, offsets))
}

/// Mean of every channel over voxels and latents, summed in index order.
pub fn squeeze(e: &Array3<f64>) -> Result<Array1<f64>> {
    let (c, l, f) = e.dim();
    if c * l == 0 {
        return Err(RapidError::contract("squeeze of an empty tensor"));
    }
    let mut z = Array1::zeros(f);
    for lane in e.lanes(Axis(2)) {
        z += &lane;
    }
    Ok(z / (c * l) as f64)
}

/// Logistic function kept strictly inside (0, 1).
fn sigmoid(x: f64) -> f64 {
    let s = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    s.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

pub fn excite(z: &Array1<f64>, gate: &FusionGate) -> Result<Array1<f64>> {
    let f = z.len();
    let h = gate.w1.nrows();
    if gate.w1.ncols() != f || gate.w2.dim() != (f, h) {
        return Err(RapidError::contract(format!(
            "gate shapes {:?} / {:?} do not fit {f} channels",
            gate.w1.dim(),
            gate.w2.dim()
        )));
    }
    let hidden = gate.w1.dot(z).mapv(|v| v.max(0.0));
    Ok(gate.w2.dot(&hidden).mapv(sigmoid))
}

pub fn fuse(e: &Array3<f64>, a_z: &Array1<f64>) -> Result<Array3<f64>> {
    if e.dim().2 != a_z.len() {
        return Err(RapidError::contract(format!(
            "{} attention weights for {} channels",
            a_z.len(),
            e.dim().2
        )));
    }
    Ok(e * a_z)
}

/// Concatenate, squeeze, excite and rescale in one call.
pub fn fuse_attention(parts: &[Array3<f64>], gate: &FusionGate) -> Result<FusedTensor> {
    let (e, offsets) = concat_embeddings(parts)?;
    let z = squeeze(&e)?;
    let a_z = excite(&z, gate)?;
    let e_prime = fuse(&e, &a_z)?;
    Ok(FusedTensor {
        e,
        offsets,
        z,
        a_z,
        e_prime,
    })
}
