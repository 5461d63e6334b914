use ndarray::{Array1, Array2, Array3, ArrayView2, Axis};

use super::inner::{inner_bottleneck, InnerOutput};
use super::weights::{Linear, WeightSet};
use super::{scatter_softmax, scatter_sum, VoxelGroups};
use crate::error::{RapidError, Result};

/// Outputs of the voxel encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoded {
    /// Keys `K`, `m × d`.
    pub k: Array2<f64>,
    /// Values `V`, `m × d`.
    pub v: Array2<f64>,
    /// Raw scores `K Lᵀ`, `m × l`.
    pub scores: Array2<f64>,
    /// Scatter-softmaxed attention Ã, `m × l`.
    pub attention: Array2<f64>,
    /// Pointwise `H[i, j, :] = Ã[i, j] · V[i, :]`, `m × l × d`.
    pub h: Array3<f64>,
    /// Voxel-wise scatter sum of `H`, `c × l × d`.
    pub h_v: Array3<f64>,
}

/// Every tensor of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTensors {
    pub g: Array2<f64>,
    pub encoded: Encoded,
    pub inner: InnerOutput,
    /// Reconstruction Ĝ, `m × d`.
    pub g_hat: Array2<f64>,
}

fn check_width(what: &str, x: ArrayView2<f64>, d: usize) -> Result<()> {
    if x.ncols() != d {
        return Err(RapidError::contract(format!(
            "{what} has width {}, weights expect {d}",
            x.ncols()
        )));
    }
    Ok(())
}

/// Voxel encoder: keys and values from `G`, cross-attention against the
/// latent queries `L` normalized within each voxel, then scatter-summed.
pub fn vsa_encode(g: &Array2<f64>, latent: &Array2<f64>, weights: &WeightSet, groups: &VoxelGroups) -> Result<Encoded> {
    let d = weights.dims.d;
    check_width("G", g.view(), d)?;
    check_width("L", latent.view(), d)?;
    if g.nrows() != groups.point_count() {
        return Err(RapidError::contract(format!(
            "G has {} rows for {} grouped points",
            g.nrows(),
            groups.point_count()
        )));
    }
    let k = weights.encode_key.apply(g.view())?;
    let v = weights.encode_value.apply(g.view())?;
    let scores = k.dot(&latent.t());
    let attention = scatter_softmax(&scores, groups)?;
    let (m, l) = attention.dim();
    let h = Array3::from_shape_fn((m, l, d), |(i, j, c)| attention[[i, j]] * v[[i, c]]);
    let h_v = scatter_sum(&h, groups)?;
    Ok(Encoded {
        k,
        v,
        scores,
        attention,
        h,
        h_v,
    })
}

fn project_slices(x: &Array3<f64>, lin: &Linear) -> Result<Array3<f64>> {
    let (c, l, d) = x.dim();
    let flat = x
        .to_shape((c * l, d))
        .map_err(|e| RapidError::contract(e.to_string()))?;
    let out = lin.apply(flat.view())?;
    let w = out.ncols();
    Ok(out.into_shape_with_order((c, l, w)).expect("row count preserved"))
}

/// Point decoder: broadcasts `Ĥ^v` to points, attends with per-point
/// queries projected from `G`, and returns `Ĝ` (`m × d`).
pub fn vsa_decode(
    h_hat_v: &Array3<f64>,
    g: &Array2<f64>,
    weights: &WeightSet,
    groups: &VoxelGroups,
) -> Result<Array2<f64>> {
    let d = weights.dims.d;
    check_width("G", g.view(), d)?;
    let (c, _, width) = h_hat_v.dim();
    if c != groups.voxel_count() || width != d || g.nrows() != groups.point_count() {
        return Err(RapidError::contract("decoder inputs disagree with the voxel grouping"));
    }
    let q = weights.decode_query.apply(g.view())?;
    let keys = project_slices(h_hat_v, &weights.decode_key)?;
    let values = project_slices(h_hat_v, &weights.decode_value)?;
    let mut g_hat = Array2::zeros((g.nrows(), d));
    for (i, mut out) in g_hat.rows_mut().into_iter().enumerate() {
        let voxel = groups.point_voxel[i];
        let k_i = keys.index_axis(Axis(0), voxel);
        let v_i = values.index_axis(Axis(0), voxel);
        let logits: Array1<f64> = k_i.dot(&q.row(i));
        let max = logits.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let e = logits.mapv(|x| (x - max).exp());
        let weights = &e / e.sum();
        out.assign(&weights.dot(&v_i));
    }
    Ok(g_hat)
}

/// Full encode, inner bottleneck and decode pass using `weights.latent`.
pub fn forward(g: &Array2<f64>, weights: &WeightSet, groups: &VoxelGroups) -> Result<EmbeddingTensors> {
    let encoded = vsa_encode(g, &weights.latent, weights, groups)?;
    let inner = inner_bottleneck(&encoded.h_v, weights, groups)?;
    let g_hat = vsa_decode(&inner.h_hat_v, g, weights, groups)?;
    Ok(EmbeddingTensors {
        g: g.clone(),
        encoded,
        inner,
        g_hat,
    })
}
