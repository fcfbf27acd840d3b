//! Weight file format.
//!
//! ```text
//! "OCNN"  u8 version (1)
//! u32 layer count
//! per layer: u32 rank, rank x u32 dims      conv: out,in,3,3   dense: out,in
//! per layer: f32 weights, then f32 biases (length dims[0])
//! u32 CRC-32 (IEEE) of the f32 payload
//! ```
//! All integers and floats are little-endian.

use super::{CnnSpec, ConvWeights, DenseWeights, Provenance, WeightSet};

pub const WEIGHTS_MAGIC: &[u8; 4] = b"OCNN";
pub const WEIGHTS_VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WeightsErrorKind {
    #[error("bad magic")]
    BadMagic,
    #[error("unsupported version {0}")]
    Version(u8),
    #[error("shape table disagrees with the network: {0}")]
    ShapeTable(String),
    #[error("truncated payload")]
    Truncated,
    #[error("checksum mismatch (stored {stored:08x}, computed {computed:08x})")]
    Checksum { stored: u32, computed: u32 },
    #[error("non-finite value in payload")]
    NonFinite,
    #[error("{0} trailing bytes after checksum")]
    TrailingBytes(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("weight file error at byte {offset}: {kind}")]
pub struct WeightsError {
    pub kind: WeightsErrorKind,
    pub offset: usize,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], WeightsError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or(WeightsError {
            kind: WeightsErrorKind::Truncated,
            offset: self.bytes.len(),
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, WeightsError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>, WeightsError> {
        let start = self.pos;
        let len = n.checked_mul(4).ok_or(WeightsError {
            kind: WeightsErrorKind::Truncated,
            offset: start,
        })?;
        let raw = self.take(len)?;
        let vals: Vec<f32> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        if let Some(i) = vals.iter().position(|v| !v.is_finite()) {
            return Err(WeightsError {
                kind: WeightsErrorKind::NonFinite,
                offset: start + 4 * i,
            });
        }
        Ok(vals)
    }
}

fn expected_table(spec: &CnnSpec) -> Vec<Vec<u32>> {
    let (conv, dense) = spec.layer_dims();
    conv.iter()
        .map(|&(o, i)| vec![o as u32, i as u32, 3, 3])
        .chain(dense.iter().map(|&(o, i)| vec![o as u32, i as u32]))
        .collect()
}

pub fn save_weights(ws: &WeightSet) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(WEIGHTS_MAGIC);
    out.push(WEIGHTS_VERSION);
    out.extend_from_slice(&((ws.conv.len() + ws.dense.len()) as u32).to_le_bytes());
    for c in &ws.conv {
        for d in [4, c.out_channels, c.in_channels, 3, 3] {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
    }
    for d in &ws.dense {
        for v in [2, d.out_features, d.in_features] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
    }
    let payload_start = out.len();
    let tensors = ws
        .conv
        .iter()
        .flat_map(|c| [&c.kernels, &c.biases])
        .chain(ws.dense.iter().flat_map(|d| [&d.weights, &d.biases]));
    for t in tensors {
        for v in t {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out[payload_start..]);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

/// Parses a weight file and checks its shape table against `spec`.
pub fn load_weights(bytes: &[u8], spec: &CnnSpec) -> Result<WeightSet, WeightsError> {
    let mut r = Reader { bytes, pos: 0 };
    let magic = r.take(4).map_err(|_| WeightsError {
        kind: WeightsErrorKind::BadMagic,
        offset: 0,
    })?;
    if magic != WEIGHTS_MAGIC {
        return Err(WeightsError {
            kind: WeightsErrorKind::BadMagic,
            offset: 0,
        });
    }
    let version = r.take(1)?[0];
    if version != WEIGHTS_VERSION {
        return Err(WeightsError {
            kind: WeightsErrorKind::Version(version),
            offset: 4,
        });
    }

    let expected = expected_table(spec);
    let count_offset = r.pos;
    let count = r.u32()? as usize;
    if count != expected.len() {
        return Err(WeightsError {
            kind: WeightsErrorKind::ShapeTable(format!("{count} layers, expected {}", expected.len())),
            offset: count_offset,
        });
    }
    for (layer, want) in expected.iter().enumerate() {
        let rank_offset = r.pos;
        let rank = r.u32()? as usize;
        if rank != want.len() {
            return Err(WeightsError {
                kind: WeightsErrorKind::ShapeTable(format!(
                    "layer {} has rank {rank}, expected {}",
                    layer + 1,
                    want.len()
                )),
                offset: rank_offset,
            });
        }
        for (axis, &w) in want.iter().enumerate() {
            let off = r.pos;
            let got = r.u32()?;
            if got != w {
                return Err(WeightsError {
                    kind: WeightsErrorKind::ShapeTable(format!(
                        "layer {} dim {axis} is {got}, expected {w}",
                        layer + 1
                    )),
                    offset: off,
                });
            }
        }
    }

    let payload_start = r.pos;
    let (conv_dims, dense_dims) = spec.layer_dims();
    let mut conv = Vec::with_capacity(conv_dims.len());
    for &(out, inp) in &conv_dims {
        let kernels = r.f32s(out * inp * 9)?;
        let biases = r.f32s(out)?;
        conv.push(ConvWeights {
            out_channels: out,
            in_channels: inp,
            kernels,
            biases,
        });
    }
    let mut dense = Vec::with_capacity(dense_dims.len());
    for &(out, inp) in &dense_dims {
        let weights = r.f32s(out * inp)?;
        let biases = r.f32s(out)?;
        dense.push(DenseWeights {
            out_features: out,
            in_features: inp,
            weights,
            biases,
        });
    }
    let payload_end = r.pos;
    let stored = r.u32()?;
    let computed = crc32fast::hash(&bytes[payload_start..payload_end]);
    if stored != computed {
        return Err(WeightsError {
            kind: WeightsErrorKind::Checksum { stored, computed },
            offset: payload_end,
        });
    }
    if r.pos != bytes.len() {
        return Err(WeightsError {
            kind: WeightsErrorKind::TrailingBytes(bytes.len() - r.pos),
            offset: r.pos,
        });
    }
    Ok(WeightSet {
        conv,
        dense,
        provenance: Provenance::External,
    })
}
