//! `LNDF1` weight files.
//!
//! Layout: `b"LNDF"`, `u32` version (1), `u64` metadata length, UTF-8 JSON
//! metadata, then little-endian `f64` parameters: per layer `W` (row-major),
//! `b`, `q`; then head `w` and head `b`. All integers are little-endian.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::head::AffineHead;
use super::layer::SllLayer;
use super::net::{LipNet, ModelMeta};
use crate::error::{Error, Result};
use crate::geometry::{FieldMode, NormalizeTransform};

pub const MAGIC: &[u8; 4] = b"LNDF";
pub const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Metadata {
    input_dim: usize,
    k: usize,
    depth: usize,
    mode: FieldMode,
    margin: f64,
    lambda: f64,
    norm: NormalizeTransform,
    /// Where the input coordinates sit inside the padded channel vector.
    padding: String,
}

const PADDING: &str = "input occupies channels 0..input_dim, remaining channels zero";

pub fn to_bytes(net: &LipNet) -> Result<Vec<u8>> {
    let meta = Metadata {
        input_dim: net.input_dim(),
        k: net.width(),
        depth: net.depth(),
        mode: net.meta.mode,
        margin: net.meta.margin,
        lambda: net.meta.lambda,
        norm: net.normalization().clone(),
        padding: PADDING.to_string(),
    };
    let json = serde_json::to_vec(&meta)?;
    let mut out = Vec::with_capacity(16 + json.len() + 8 * net.param_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for v in net.flat_params() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn from_bytes(bytes: &[u8]) -> Result<LipNet> {
    let fail = |m: &str| Error::WeightFormat(m.to_string());
    if bytes.len() < 16 {
        return Err(fail("file shorter than header"));
    }
    if &bytes[..4] != MAGIC {
        return Err(fail("bad magic, expected LNDF"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(Error::WeightFormat(format!("unsupported version {version}")));
    }
    let json_len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let json_end = 16usize
        .checked_add(json_len)
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| fail("truncated metadata"))?;
    let meta: Metadata = serde_json::from_slice(&bytes[16..json_end])?;
    let k = meta.k;
    if k == 0 {
        return Err(fail("k must be positive"));
    }
    let expected = meta
        .depth
        .checked_mul(k * k + 2 * k)
        .and_then(|n| n.checked_add(k + 1))
        .ok_or_else(|| fail("metadata sizes overflow"))?;
    let payload = &bytes[json_end..];
    if payload.len() != expected * 8 {
        return Err(Error::WeightFormat(format!(
            "payload has {} bytes but metadata (k={k}, depth={}) needs {}",
            payload.len(),
            meta.depth,
            expected * 8
        )));
    }
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let mut at = 0;
    let mut take = |n: usize| {
        let s = values[at..at + n].to_vec();
        at += n;
        s
    };
    let mut layers = Vec::with_capacity(meta.depth);
    for _ in 0..meta.depth {
        let w = take(k * k);
        let b = take(k);
        let q = take(k);
        layers.push(SllLayer::new(k, w, b, q)?);
    }
    let hw = take(k);
    let hb = take(1)[0];
    let norm = NormalizeTransform::new(meta.norm.center, meta.norm.scale)?;
    LipNet::new(
        meta.input_dim,
        layers,
        AffineHead::new(hw, hb)?,
        norm,
        ModelMeta {
            mode: meta.mode,
            margin: meta.margin,
            lambda: meta.lambda,
        },
    )
}

impl LipNet {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let bytes = to_bytes(self)?;
        let mut f = fs::File::create(path)?;
        f.write_all(&bytes)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        from_bytes(&fs::read(path)?)
    }
}
