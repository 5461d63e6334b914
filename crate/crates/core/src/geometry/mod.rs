//! Rigid transforms, ranges, and exact k-nearest-neighbor search.

mod grid;
pub(crate) mod knn;
mod transform;

pub use grid::BRUTE_FORCE_BELOW;
pub use knn::{knn_brute, knn_indexed, Metric, NeighborList};
pub use transform::{apply_transform, range_of, RigidTransform};
