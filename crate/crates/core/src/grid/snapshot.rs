//! Field serialization: FSN1 binary snapshots, CSV and 8-bit PGM images.
//!
//! FSN1 layout (little-endian):
//!
//! ```text
//! "FSN1" | nx: u32 | ny: u32 | h: f64 | nx*ny f64 values, row-major
//! ```

use std::io::{Read, Write};

use super::{Field, GridSpec};
use crate::error::{Error, Result};

pub const FSN1_MAGIC: &[u8; 4] = b"FSN1";

pub fn write_fsn1<W: Write>(field: &Field, mut w: W) -> Result<()> {
    let (nx, ny) = field.dims();
    let nx = u32::try_from(nx).map_err(|_| Error::Format("nx exceeds u32".into()))?;
    let ny = u32::try_from(ny).map_err(|_| Error::Format("ny exceeds u32".into()))?;
    let mut buf = Vec::with_capacity(20 + 8 * field.values().len());
    buf.extend_from_slice(FSN1_MAGIC);
    buf.extend_from_slice(&nx.to_le_bytes());
    buf.extend_from_slice(&ny.to_le_bytes());
    buf.extend_from_slice(&field.spec().h().to_le_bytes());
    for v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Reads an FSN1 snapshot. The grid is anchored at the origin since the
/// format stores only the mesh size.
pub fn read_fsn1<R: Read>(mut r: R) -> Result<Field> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() < 20 {
        return Err(Error::Format(format!("FSN1 header truncated ({} bytes)", bytes.len())));
    }
    if &bytes[..4] != FSN1_MAGIC {
        return Err(Error::Format("bad FSN1 magic".into()));
    }
    let nx = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let ny = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let h = f64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let expected = nx
        .checked_mul(ny)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| Error::Format("FSN1 dimensions overflow".into()))?;
    let payload = &bytes[20..];
    if payload.len() != expected {
        return Err(Error::Format(format!(
            "FSN1 payload has {} bytes, expected {expected} for {nx}x{ny}",
            payload.len()
        )));
    }
    let spec = GridSpec::with_mesh_size(nx, ny, h).map_err(|e| Error::Format(e.to_string()))?;
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Field::from_values(spec, values)
}

/// One grid row (fixed `i`) per line, 17 significant digits.
pub fn write_csv<W: Write>(field: &Field, mut w: W) -> Result<()> {
    let (nx, ny) = field.dims();
    let mut out = String::new();
    for i in 0..nx {
        for j in 0..ny {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format!("{:.16e}", field.get(i, j)));
        }
        out.push('\n');
    }
    w.write_all(out.as_bytes())?;
    Ok(())
}

/// Grey-level mapping used by [`write_pgm`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PgmScale {
    /// Map the field's own `[min, max]` onto `0..=255`.
    Auto,
    /// Map a fixed interval, clamping values outside it.
    Fixed(f64, f64),
}

impl PgmScale {
    pub const UNIT: PgmScale = PgmScale::Fixed(-1.0, 1.0);
}

/// Binary (P5) greyscale image, one pixel row per grid row `i`.
pub fn write_pgm<W: Write>(field: &Field, scale: PgmScale, mut w: W) -> Result<()> {
    let (nx, ny) = field.dims();
    let (lo, hi) = match scale {
        PgmScale::Auto => {
            let finite = field.values().iter().copied().filter(|v| v.is_finite());
            finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
        }
        PgmScale::Fixed(lo, hi) => (lo, hi),
    };
    let span = hi - lo;
    let mut buf = format!("P5\n{ny} {nx}\n255\n").into_bytes();
    buf.extend(field.values().iter().map(|&v| {
        if !v.is_finite() || !(span > 0.0) {
            // NaN and flat images map to black; infinities saturate
            return if v == f64::INFINITY { 255 } else { 0 };
        }
        let t = ((v - lo) / span).clamp(0.0, 1.0);
        (t * 255.0).round() as u8
    }));
    w.write_all(&buf)?;
    Ok(())
}
