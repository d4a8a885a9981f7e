//! Binary model container.
//!
//! ```text
//! magic    8 bytes  "MRINNET\0"
//! version  u32 LE   MODEL_SCHEMA_VERSION
//! hlen     u64 LE   length of the JSON header
//! header   hlen bytes of UTF-8 JSON: {config, meta, layout}
//! values   layout.total little-endian f64
//! ```
//!
//! `layout` is the flat-index map; loading recomputes it from `config` and
//! refuses files where the two disagree.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::params::{NetworkParams, ParamLayout};
use super::{NetError, NetworkConfig};

pub const MODEL_MAGIC: &[u8; 8] = b"MRINNET\0";
pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// Provenance stored beside the weights.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelMeta {
    /// Training-run fingerprint shared with the attribution file.
    pub fingerprint: String,
    pub epochs: usize,
    pub instances: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub params: NetworkParams,
    pub meta: ModelMeta,
}

#[derive(Serialize, Deserialize)]
struct Header {
    config: NetworkConfig,
    meta: ModelMeta,
    layout: ParamLayout,
}

pub fn save_model(model: &SavedModel, path: &Path) -> Result<(), NetError> {
    let header = Header {
        config: model.params.config().clone(),
        meta: model.meta.clone(),
        layout: model.params.layout().clone(),
    };
    let header = serde_json::to_vec(&header).map_err(|e| NetError::Corrupt(e.to_string()))?;
    let values = model.params.values();
    let mut buf = Vec::with_capacity(20 + header.len() + values.len() * 8);
    buf.extend_from_slice(MODEL_MAGIC);
    buf.extend_from_slice(&MODEL_SCHEMA_VERSION.to_le_bytes());
    buf.extend_from_slice(&(header.len() as u64).to_le_bytes());
    buf.extend_from_slice(&header);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&buf)?;
    f.sync_all()?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<SavedModel, NetError> {
    let bytes = fs::read(path)?;
    decode(&bytes)
}

fn decode(bytes: &[u8]) -> Result<SavedModel, NetError> {
    let corrupt = |m: &str| NetError::Corrupt(m.to_string());
    if bytes.len() < 20 || &bytes[..8] != MODEL_MAGIC {
        return Err(corrupt("bad magic"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != MODEL_SCHEMA_VERSION {
        return Err(NetError::VersionMismatch {
            found: version,
            expected: MODEL_SCHEMA_VERSION,
        });
    }
    let hlen = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    let header_end = 20usize
        .checked_add(hlen)
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| corrupt("truncated header"))?;
    let header: Header = serde_json::from_slice(&bytes[20..header_end])
        .map_err(|e| NetError::Corrupt(e.to_string()))?;
    header.config.validate()?;
    if ParamLayout::for_config(&header.config) != header.layout {
        return Err(corrupt("stored parameter layout does not match config"));
    }
    let body = &bytes[header_end..];
    if body.len() != header.layout.total * 8 {
        return Err(corrupt("weight payload has the wrong length"));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(SavedModel {
        params: NetworkParams::from_parts(header.config, values)?,
        meta: header.meta,
    })
}
