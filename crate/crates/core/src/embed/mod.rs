//! Forward evaluation of the nested voxel set-attention autoencoder and
//! its training objectives. There is no backward pass here; weights come
//! from a container file or a seeded initializer.

mod inner;
mod loss;
mod vsa;
mod weights;

use std::collections::BTreeMap;

use ndarray::{Array2, Array3};

use crate::error::{RapidError, Result};

pub use inner::{depthwise_conv, inner_bottleneck, InnerOutput};
pub use loss::{contrastive_loss, reconstruction_loss, total_loss, ContrastiveLoss, Similarity};
pub use vsa::{forward, vsa_decode, vsa_encode, EmbeddingTensors, Encoded};
pub use weights::{Activation, BatchNorm, EmbedDims, Linear, Stage, WeightSet};

/// Point-to-voxel assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGroups {
    /// Voxel index of every point.
    pub point_voxel: Vec<usize>,
    /// Integer voxel coordinates, ascending lexicographically.
    pub coords: Vec<[i64; 3]>,
    /// Member points of every voxel, ascending.
    pub members: Vec<Vec<usize>>,
}

impl VoxelGroups {
    pub fn voxel_count(&self) -> usize {
        self.coords.len()
    }

    pub fn point_count(&self) -> usize {
        self.point_voxel.len()
    }
}

/// Buckets points by `floor(p / voxel_size)`.
pub fn voxelize(points: &[[f64; 3]], voxel_size: f64) -> Result<VoxelGroups> {
    if !(voxel_size > 0.0 && voxel_size.is_finite()) {
        return Err(RapidError::Config(format!(
            "voxel size must be positive, got {voxel_size}"
        )));
    }
    let mut buckets: BTreeMap<[i64; 3], Vec<usize>> = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        let key = p.map(|v| (v / voxel_size).floor() as i64);
        buckets.entry(key).or_default().push(i);
    }
    let mut point_voxel = vec![0; points.len()];
    let mut coords = Vec::with_capacity(buckets.len());
    let mut members = Vec::with_capacity(buckets.len());
    for (v, (key, pts)) in buckets.into_iter().enumerate() {
        for &i in &pts {
            point_voxel[i] = v;
        }
        coords.push(key);
        members.push(pts);
    }
    Ok(VoxelGroups {
        point_voxel,
        coords,
        members,
    })
}

/// Softmax over the points of each voxel, independently per column.
pub fn scatter_softmax(scores: &Array2<f64>, groups: &VoxelGroups) -> Result<Array2<f64>> {
    if scores.nrows() != groups.point_count() {
        return Err(RapidError::contract(format!(
            "{} score rows for {} points",
            scores.nrows(),
            groups.point_count()
        )));
    }
    let mut out = Array2::zeros(scores.raw_dim());
    for members in &groups.members {
        for col in 0..scores.ncols() {
            let max = members
                .iter()
                .map(|&i| scores[[i, col]])
                .fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for &i in members {
                let e = (scores[[i, col]] - max).exp();
                out[[i, col]] = e;
                sum += e;
            }
            for &i in members {
                out[[i, col]] /= sum;
            }
        }
    }
    Ok(out)
}

/// Sums per-point slices into their voxels, in ascending point order.
pub fn scatter_sum(h: &Array3<f64>, groups: &VoxelGroups) -> Result<Array3<f64>> {
    let (m, l, d) = h.dim();
    if m != groups.point_count() {
        return Err(RapidError::contract(format!(
            "{m} pointwise slices for {} points",
            groups.point_count()
        )));
    }
    let mut out = Array3::zeros((groups.voxel_count(), l, d));
    for (v, members) in groups.members.iter().enumerate() {
        let mut acc = out.index_axis_mut(ndarray::Axis(0), v);
        for &i in members {
            acc += &h.index_axis(ndarray::Axis(0), i);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn voxelize_examples() {
        let g = voxelize(&[[0.01, 0.01, 0.01], [0.06, 0.01, 0.01]], 0.2).unwrap();
        assert_eq!(g.voxel_count(), 1);
        let g = voxelize(&[[0.0, 0.0, 0.0], [5.0, 0.0, 0.0]], 0.2).unwrap();
        assert_eq!(g.voxel_count(), 2);
        assert_eq!(g.coords, vec![[0, 0, 0], [25, 0, 0]]);
        assert!(voxelize(&[], 0.0).is_err());
    }

    #[test]
    fn voxel_order_is_lexicographic() {
        let g = voxelize(&[[1.5, 0.0, 0.0], [-0.5, 3.0, 0.0], [-0.5, -1.0, 0.0]], 1.0).unwrap();
        assert_eq!(g.coords, vec![[-1, -1, 0], [-1, 3, 0], [1, 0, 0]]);
        assert_eq!(g.point_voxel, vec![2, 1, 0]);
    }

    #[test]
    fn softmax_single_and_pair() {
        let g = voxelize(&[[0.0; 3], [0.1, 0.0, 0.0], [9.0, 0.0, 0.0]], 1.0).unwrap();
        let s = array![[2.0, -1.0], [2.0, 3.0], [40.0, 0.0]];
        let a = scatter_softmax(&s, &g).unwrap();
        assert_eq!(a[[0, 0]], 0.5);
        assert_eq!(a[[1, 0]], 0.5);
        assert_eq!(a[[2, 0]], 1.0);
        assert_eq!(a[[2, 1]], 1.0);
        assert!((a[[0, 1]] + a[[1, 1]] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn scatter_sum_of_singletons_is_identity() {
        let g = voxelize(&[[0.0; 3], [5.0, 0.0, 0.0]], 1.0).unwrap();
        let h = Array3::from_shape_fn((2, 2, 3), |(i, j, k)| (i * 6 + j * 3 + k) as f64);
        assert_eq!(scatter_sum(&h, &g).unwrap(), h);
    }
}
