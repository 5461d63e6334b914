use ndarray::{Array1, Array2, Array3, Axis};
use rustc_hash::FxHashMap;

use super::weights::{Stage, WeightSet, NEIGHBORHOOD};
use super::VoxelGroups;
use crate::error::{RapidError, Result};

/// Intermediate and final tensors of the inner autoencoder.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerOutput {
    /// Compressed embedding ħ, `c × l × d′`.
    pub hbar: Array3<f64>,
    /// After the convolutional feed-forward block, `c × l × d′`.
    pub hbar_hat: Array3<f64>,
    /// Reconstruction Ĥ^v, `c × l × d`.
    pub h_hat_v: Array3<f64>,
}

fn run_stages(x: &Array3<f64>, stages: &[Stage]) -> Result<Array3<f64>> {
    let (c, l, w) = x.dim();
    let mut flat = x
        .to_shape((c * l, w))
        .map_err(|e| RapidError::contract(e.to_string()))?
        .to_owned();
    for s in stages {
        flat = s.apply(flat.view())?;
    }
    let out = flat.ncols();
    Ok(flat.into_shape_with_order((c, l, out)).expect("row count preserved"))
}

/// Submanifold depthwise 3×3×3 convolution over occupied voxels: each
/// voxel gathers channel-wise weighted sums from occupied neighbors only.
pub fn depthwise_conv(
    x: &Array3<f64>,
    coords: &[[i64; 3]],
    kernel: &Array2<f64>,
    bias: &Array1<f64>,
) -> Result<Array3<f64>> {
    let (c, l, w) = x.dim();
    if coords.len() != c {
        return Err(RapidError::contract(format!(
            "{} voxel coordinates for {c} voxels",
            coords.len()
        )));
    }
    if kernel.dim() != (NEIGHBORHOOD, w) || bias.len() != w {
        return Err(RapidError::contract("depthwise kernel does not match channel width"));
    }
    let index: FxHashMap<[i64; 3], usize> = coords.iter().enumerate().map(|(v, &k)| (k, v)).collect();
    let mut out = Array3::zeros((c, l, w));
    for (v, &[x0, y0, z0]) in coords.iter().enumerate() {
        let mut acc = out.index_axis_mut(Axis(0), v);
        for (tap, offset) in offsets().enumerate() {
            let Some(&u) = index.get(&[x0 + offset[0], y0 + offset[1], z0 + offset[2]]) else {
                continue;
            };
            let weights = kernel.row(tap);
            for (mut row, src) in acc.rows_mut().into_iter().zip(x.index_axis(Axis(0), u).rows()) {
                for ((o, &s), &k) in row.iter_mut().zip(src).zip(weights) {
                    *o += k * s;
                }
            }
        }
        for mut row in acc.rows_mut() {
            row += bias;
        }
    }
    Ok(out)
}

fn offsets() -> impl Iterator<Item = [i64; 3]> {
    (-1..=1).flat_map(|dx| (-1..=1).flat_map(move |dy| (-1..=1).map(move |dz| [dx, dy, dz])))
}

/// Inner encoder, convolutional feed-forward block and inner decoder.
pub fn inner_bottleneck(h_v: &Array3<f64>, weights: &WeightSet, groups: &VoxelGroups) -> Result<InnerOutput> {
    weights.validate()?;
    let (c, l, d) = h_v.dim();
    if c != groups.voxel_count() || l != weights.dims.latent || d != weights.dims.d {
        return Err(RapidError::contract(format!(
            "H^v is {c}x{l}x{d}, expected {}x{}x{}",
            groups.voxel_count(),
            weights.dims.latent,
            weights.dims.d
        )));
    }
    let hbar = run_stages(h_v, &weights.down)?;
    let first = depthwise_conv(&hbar, &groups.coords, &weights.dw_kernels[0], &weights.dw_bias[0])?;
    let activated = first.mapv(|v| weights.activation.apply(v));
    let hbar_hat = depthwise_conv(&activated, &groups.coords, &weights.dw_kernels[1], &weights.dw_bias[1])?;
    let h_hat_v = run_stages(&hbar_hat, &weights.up)?;
    Ok(InnerOutput {
        hbar,
        hbar_hat,
        h_hat_v,
    })
}
