//! SemanticKITTI on-disk conventions.
//!
//! ```text
//! scan  (.bin):   [x:f32 | y:f32 | z:f32 | remission:f32] * n   little-endian
//! label (.label): [semantic:u16 | instance:u16] * n             as one u32 LE
//! ```

use std::fs;
use std::path::Path;

use crate::cloud::PointCloud;
use crate::error::{RapidError, Result};

const POINT_STRIDE: usize = 16;

pub fn load_kitti_scan(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| RapidError::file(path, e))?;
    decode_scan(&bytes)
}

/// Decodes packed `(x, y, z, remission)` float quadruples.
pub fn decode_scan(bytes: &[u8]) -> Result<PointCloud> {
    if !bytes.len().is_multiple_of(POINT_STRIDE) {
        return Err(RapidError::MalformedScan {
            len: bytes.len() as u64,
        });
    }
    let n = bytes.len() / POINT_STRIDE;
    let mut points = Vec::with_capacity(n);
    let mut remission = Vec::with_capacity(n);
    for (index, chunk) in bytes.chunks_exact(POINT_STRIDE).enumerate() {
        let f = |o: usize| f32::from_le_bytes(chunk[o..o + 4].try_into().unwrap());
        let (x, y, z, r) = (f(0), f(4), f(8), f(12));
        if !(x.is_finite() && y.is_finite() && z.is_finite() && r.is_finite()) {
            return Err(RapidError::NonFinite { index });
        }
        points.push([x as f64, y as f64, z as f64]);
        remission.push(r as f64);
    }
    PointCloud::new(points, remission)
}

/// Encodes a cloud as a packed scan; coordinates are narrowed to `f32`.
pub fn encode_scan(cloud: &PointCloud) -> Vec<u8> {
    let mut out = Vec::with_capacity(cloud.len() * POINT_STRIDE);
    for (p, r) in cloud.points().iter().zip(cloud.remission()) {
        for v in [p[0], p[1], p[2], *r] {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

pub fn save_kitti_scan(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_scan(cloud)).map_err(|e| RapidError::file(path, e))
}

/// Attaches semantic labels read from a `.label` file to `cloud`.
pub fn load_kitti_labels(path: impl AsRef<Path>, cloud: PointCloud) -> Result<PointCloud> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| RapidError::file(path, e))?;
    let labels = decode_labels(&bytes)?;
    cloud.with_labels(labels)
}

pub fn decode_labels(bytes: &[u8]) -> Result<Vec<u32>> {
    if !bytes.len().is_multiple_of(4) {
        return Err(RapidError::Format(format!(
            "label file of {} bytes is not a multiple of 4",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()) & 0xFFFF)
        .collect())
}

pub fn load_label_file(path: impl AsRef<Path>) -> Result<Vec<u32>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| RapidError::file(path, e))?;
    decode_labels(&bytes)
}

pub fn encode_labels(labels: &[u32]) -> Vec<u8> {
    labels.iter().flat_map(|l| l.to_le_bytes()).collect()
}

pub fn save_kitti_labels(labels: &[u32], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_labels(labels)).map_err(|e| RapidError::file(path, e))
}
