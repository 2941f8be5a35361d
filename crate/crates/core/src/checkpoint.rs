//! Framed little-endian float records shared by every checkpoint kind:
//! 4-byte magic, 1-byte version, 1-byte tag, `u64` value count, then the
//! values as `f64`.

use crate::error::{Error, Result};

pub(crate) const HEADER_LEN: usize = 4 + 1 + 1 + 8;

pub(crate) fn encode(magic: &[u8; 4], version: u8, tag: u8, values: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * values.len());
    out.extend_from_slice(magic);
    out.push(version);
    out.push(tag);
    out.extend_from_slice(&(values.len() as u64).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Returns `(tag, values)` after checking magic, version and length.
pub(crate) fn decode(magic: &[u8; 4], version: u8, bytes: &[u8]) -> Result<(u8, Vec<f64>)> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Checkpoint(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..4] != magic {
        return Err(Error::Checkpoint(format!(
            "bad magic {:?}, expected {:?}",
            &bytes[..4],
            magic
        )));
    }
    if bytes[4] != version {
        return Err(Error::Checkpoint(format!(
            "unsupported version {} (expected {version})",
            bytes[4]
        )));
    }
    let tag = bytes[5];
    let count = u64::from_le_bytes(bytes[6..14].try_into().expect("8-byte slice")) as usize;
    let body = &bytes[HEADER_LEN..];
    if body.len() != count.saturating_mul(8) {
        return Err(Error::Checkpoint(format!(
            "length prefix says {count} values but {} bytes follow",
            body.len()
        )));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok((tag, values))
}

/// Reads a float that must hold a non-negative integer (dimensions, counters).
pub(crate) fn as_count(x: f64, what: &str) -> Result<usize> {
    if x >= 0.0 && x.fract() == 0.0 && x < 2f64.powi(53) {
        Ok(x as usize)
    } else {
        Err(Error::Checkpoint(format!("{what} = {x} is not a count")))
    }
}
