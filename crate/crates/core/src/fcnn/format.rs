//! FCN1 model files.
//!
//! ```text
//! "FCN1" | version: u32 | M: u32 | r: u32 | eq_kind: u8
//! M × ( 5 f64 stencil taps [c, n, s, e, w] | r+1 f64 coefficients a₀…a_r )
//! ```
//!
//! All integers and floats are little-endian.

use std::io::{Read, Write};
use std::path::Path;

use super::{DeepFcnn, StencilLayer, StencilWeights};
use crate::error::{Error, Result};
use crate::fdm::EquationKind;
use crate::io::write_atomic;

pub const FCN1_MAGIC: &[u8; 4] = b"FCN1";
pub const FCN1_VERSION: u32 = 1;

const HEADER_LEN: usize = 17;

pub fn write_model<W: Write>(model: &DeepFcnn, mut w: W) -> Result<()> {
    let depth = u32::try_from(model.depth()).map_err(|_| Error::Format("too many layers".into()))?;
    let order = u32::try_from(model.order()).map_err(|_| Error::Format("polynomial order too large".into()))?;
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * model.num_params());
    buf.extend_from_slice(FCN1_MAGIC);
    buf.extend_from_slice(&FCN1_VERSION.to_le_bytes());
    buf.extend_from_slice(&depth.to_le_bytes());
    buf.extend_from_slice(&order.to_le_bytes());
    buf.push(model.kind().code());
    for v in model.params() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_model<R: Read>(mut r: R) -> Result<DeepFcnn> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!("FCN1 header truncated ({} bytes)", bytes.len())));
    }
    if &bytes[..4] != FCN1_MAGIC {
        return Err(Error::Format("bad FCN1 magic".into()));
    }
    let u32_at = |off: usize| u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != FCN1_VERSION {
        return Err(Error::Format(format!("unsupported FCN1 version {version}")));
    }
    let depth = u32_at(8) as usize;
    let order = u32_at(12) as usize;
    let kind = EquationKind::from_code(bytes[16])
        .ok_or_else(|| Error::Format(format!("unknown equation code {}", bytes[16])))?;
    if depth == 0 {
        return Err(Error::Validation("model file declares zero layers".into()));
    }
    let per_layer = order
        .checked_add(6)
        .ok_or_else(|| Error::Format("polynomial order overflows".into()))?;
    let expected = depth
        .checked_mul(per_layer)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| Error::Format("FCN1 dimensions overflow".into()))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != expected {
        return Err(Error::Format(format!(
            "FCN1 payload has {} bytes, expected {expected} for M = {depth}, r = {order}",
            payload.len()
        )));
    }
    let params: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let layers = params
        .chunks_exact(per_layer)
        .map(|p| StencilLayer::new(StencilWeights::from_array(p[..5].try_into().unwrap()), p[5..].to_vec()))
        .collect::<Result<Vec<_>>>()?;
    DeepFcnn::new(kind, layers)
}

pub fn save_model(model: &DeepFcnn, path: &Path) -> Result<()> {
    write_atomic(path, |w| write_model(model, w))
}

pub fn load_model(path: &Path) -> Result<DeepFcnn> {
    read_model(std::fs::File::open(path)?)
}
