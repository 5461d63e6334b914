//! Versioned binary container for feature matrices and weight tensors.
//!
//! ```text
//! "RAPD" | version: u32 LE | header_len: u32 LE | header: UTF-8 JSON | payload
//! ```
//!
//! Feature payload, per record in header order: `rows` anchor indices as
//! u32, then `rows * k` normalized values as f32, then `rows * k` raw
//! distances as f32. Weight payload: each tensor's elements as f32,
//! row-major, in header order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{RapidError, Result};
use crate::rapid::{Normalization, RapidMatrix, ReflectivityScale, RoiId};

pub const MAGIC: [u8; 4] = *b"RAPD";
pub const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Header {
    Features {
        payload_bytes: u64,
        records: Vec<FeatureRecord>,
    },
    Weights {
        payload_bytes: u64,
        records: Vec<TensorRecord>,
    },
}

#[derive(Serialize, Deserialize)]
struct FeatureRecord {
    roi: String,
    k: usize,
    rows: usize,
    /// `None` encodes an infinite threshold.
    delta: Option<f64>,
    scale: ReflectivityScale,
    normalization: Normalization,
    padded: bool,
}

#[derive(Serialize, Deserialize)]
struct TensorRecord {
    name: String,
    shape: Vec<usize>,
}

/// A named dense tensor, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let name = name.into();
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(RapidError::contract(format!(
                "tensor `{name}` has shape {shape:?} but {} elements",
                data.len()
            )));
        }
        Ok(Self { name, shape, data })
    }
}

fn frame(header: &Header, payload: Vec<u8>) -> Vec<u8> {
    let text = serde_json::to_vec(header).expect("header serializes");
    let mut out = Vec::with_capacity(12 + text.len() + payload.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(text.len() as u32).to_le_bytes());
    out.extend_from_slice(&text);
    out.extend_from_slice(&payload);
    out
}

fn unframe(bytes: &[u8]) -> Result<(Header, &[u8])> {
    if bytes.len() < 12 {
        return Err(RapidError::Format("truncated container preamble".into()));
    }
    if bytes[..4] != MAGIC {
        return Err(RapidError::Format("bad magic bytes, not a RAPD container".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(RapidError::Format(format!(
            "container version {version}, this build reads version {VERSION}"
        )));
    }
    let header_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let rest = &bytes[12..];
    if rest.len() < header_len {
        return Err(RapidError::Format("truncated container header".into()));
    }
    let header: Header = serde_json::from_slice(&rest[..header_len])
        .map_err(|e| RapidError::Format(format!("bad container header: {e}")))?;
    let payload = &rest[header_len..];
    let declared = match &header {
        Header::Features { payload_bytes, .. } | Header::Weights { payload_bytes, .. } => *payload_bytes,
    };
    if payload.len() as u64 != declared {
        return Err(RapidError::Format(format!(
            "payload is {} bytes, header declares {declared}",
            payload.len()
        )));
    }
    Ok((header, payload))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .at
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| RapidError::Format("truncated container payload".into()))?;
        let out = &self.bytes[self.at..end];
        self.at = end;
        Ok(out)
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(4).ok_or_else(overflow)?)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect())
    }

    fn u32s(&mut self, n: usize) -> Result<Vec<usize>> {
        let bytes = self.take(n.checked_mul(4).ok_or_else(overflow)?)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()) as usize)
            .collect())
    }
}

fn overflow() -> RapidError {
    RapidError::Format("record size overflows".into())
}

fn push_f32s(out: &mut Vec<u8>, values: &[f64]) {
    for &v in values {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
}

pub fn encode_features(matrices: &[RapidMatrix]) -> Result<Vec<u8>> {
    let mut payload = Vec::new();
    let mut records = Vec::with_capacity(matrices.len());
    for m in matrices {
        if m.values.len() != m.rows() * m.k || m.raw.len() != m.values.len() {
            return Err(RapidError::contract(format!(
                "matrix {} is not {} x {}",
                m.roi,
                m.rows(),
                m.k
            )));
        }
        for &a in &m.anchors {
            let a = u32::try_from(a).map_err(|_| RapidError::contract(format!("anchor {a} exceeds u32")))?;
            payload.extend_from_slice(&a.to_le_bytes());
        }
        push_f32s(&mut payload, &m.values);
        push_f32s(&mut payload, &m.raw);
        records.push(FeatureRecord {
            roi: m.roi.to_string(),
            k: m.k,
            rows: m.rows(),
            delta: m.delta.is_finite().then_some(m.delta),
            scale: m.scale,
            normalization: m.normalization,
            padded: m.padded,
        });
    }
    let header = Header::Features {
        payload_bytes: payload.len() as u64,
        records,
    };
    Ok(frame(&header, payload))
}

pub fn decode_features(bytes: &[u8]) -> Result<Vec<RapidMatrix>> {
    let (header, payload) = unframe(bytes)?;
    let Header::Features { records, .. } = header else {
        return Err(RapidError::Format("expected a feature container, found weights".into()));
    };
    let mut cursor = Cursor { bytes: payload, at: 0 };
    records
        .into_iter()
        .map(|r| {
            let cells = r.rows.checked_mul(r.k).ok_or_else(overflow)?;
            Ok(RapidMatrix {
                roi: r.roi.parse::<RoiId>()?,
                k: r.k,
                anchors: cursor.u32s(r.rows)?,
                values: cursor.f32s(cells)?,
                raw: cursor.f32s(cells)?,
                scale: r.scale,
                delta: r.delta.unwrap_or(f64::INFINITY),
                normalization: r.normalization,
                padded: r.padded,
            })
        })
        .collect()
}

pub fn save_features(matrices: &[RapidMatrix], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_features(matrices)?).map_err(|e| RapidError::file(path, e))
}

pub fn load_features(path: impl AsRef<Path>) -> Result<Vec<RapidMatrix>> {
    let path = path.as_ref();
    decode_features(&fs::read(path).map_err(|e| RapidError::file(path, e))?)
}

pub fn encode_weights(tensors: &[Tensor]) -> Vec<u8> {
    let mut payload = Vec::new();
    let mut records = Vec::with_capacity(tensors.len());
    for t in tensors {
        push_f32s(&mut payload, &t.data);
        records.push(TensorRecord {
            name: t.name.clone(),
            shape: t.shape.clone(),
        });
    }
    let header = Header::Weights {
        payload_bytes: payload.len() as u64,
        records,
    };
    frame(&header, payload)
}

pub fn decode_weights(bytes: &[u8]) -> Result<Vec<Tensor>> {
    let (header, payload) = unframe(bytes)?;
    let Header::Weights { records, .. } = header else {
        return Err(RapidError::Format("expected a weight container, found features".into()));
    };
    let mut cursor = Cursor { bytes: payload, at: 0 };
    records
        .into_iter()
        .map(|r| {
            let n = r
                .shape
                .iter()
                .try_fold(1usize, |acc, &d| acc.checked_mul(d))
                .ok_or_else(overflow)?;
            Ok(Tensor {
                data: cursor.f32s(n)?,
                name: r.name,
                shape: r.shape,
            })
        })
        .collect()
}

pub fn save_weights(tensors: &[Tensor], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_weights(tensors)).map_err(|e| RapidError::file(path, e))
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<Vec<Tensor>> {
    let path = path.as_ref();
    decode_weights(&fs::read(path).map_err(|e| RapidError::file(path, e))?)
}
