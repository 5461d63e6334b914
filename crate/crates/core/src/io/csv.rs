//! CSV import for clouds exported from other datasets (e.g. nuScenes).
//!
//! Required header columns: `x`, `y`, `z` and one of `intensity` /
//! `remission`. Optional columns: `ring`, `label`. Intensity is divided by
//! `intensity_scale` so that nuScenes' 0..255 range maps onto [0, 1].

use std::path::Path;

use crate::cloud::PointCloud;
use crate::error::{RapidError, Result};

pub fn load_csv_scan(path: impl AsRef<Path>, intensity_scale: f64) -> Result<PointCloud> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| RapidError::file(path, e))?;
    read_csv_scan(file, intensity_scale)
}

pub fn read_csv_scan(reader: impl std::io::Read, intensity_scale: f64) -> Result<PointCloud> {
    if !(intensity_scale > 0.0) {
        return Err(RapidError::Config("intensity scale must be positive".into()));
    }
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| RapidError::Format(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let need = |name: &str| col(name).ok_or_else(|| RapidError::Format(format!("missing CSV column `{name}`")));
    let (cx, cy, cz) = (need("x")?, need("y")?, need("z")?);
    let ci = col("intensity")
        .or_else(|| col("remission"))
        .ok_or_else(|| RapidError::Format("missing CSV column `intensity`".into()))?;
    let (cring, clabel) = (col("ring"), col("label"));

    let mut points = Vec::new();
    let mut remission = Vec::new();
    let mut ring = Vec::new();
    let mut label = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| RapidError::Format(e.to_string()))?;
        let float = |c: usize| -> Result<f64> {
            record
                .get(c)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| RapidError::Format(format!("row {row}: bad number in column {c}")))
        };
        let int = |c: usize| -> Result<u64> {
            record
                .get(c)
                .and_then(|s| s.parse::<u64>().ok())
                .ok_or_else(|| RapidError::Format(format!("row {row}: bad integer in column {c}")))
        };
        points.push([float(cx)?, float(cy)?, float(cz)?]);
        remission.push(float(ci)? / intensity_scale);
        if let Some(c) = cring {
            ring.push(
                u16::try_from(int(c)?)
                    .map_err(|_| RapidError::Format(format!("row {row}: ring index out of range")))?,
            );
        }
        if let Some(c) = clabel {
            label.push((int(c)? & 0xFFFF) as u32);
        }
    }
    let mut cloud = PointCloud::new(points, remission)?;
    if cring.is_some() {
        cloud = cloud.with_ring(ring)?;
    }
    if clabel.is_some() {
        cloud = cloud.with_labels(label)?;
    }
    Ok(cloud)
}
