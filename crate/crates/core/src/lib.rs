//! Range-aware pointwise distance distribution (RAPiD) features for LiDAR
//! point clouds, with the forward math of the downstream embedding, fusion
//! and evaluation stages.

pub mod cloud;
pub mod config;
pub mod embed;
pub mod error;
pub mod fusion;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod partition;
pub mod rapid;
pub mod synth;

pub use cloud::{PointCloud, SensorGeometry};
pub use error::{RapidError, Result};
pub use rapid::{rapid, RangeAwareConfig, RapidMatrix, RoiId};
