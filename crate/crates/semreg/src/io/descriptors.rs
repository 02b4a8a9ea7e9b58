//! Binary descriptor matrices: the bytes `DESC`, then point count and
//! dimension as little-endian `u32`, then row-major little-endian `f32`.

use std::path::Path;

use semreg_core::correspond::DescriptorSet;

use crate::error::{CliError, Result};

pub const MAGIC: &[u8; 4] = b"DESC";
const HEADER: usize = 12;

pub fn parse(bytes: &[u8], path: &Path) -> Result<DescriptorSet> {
    if bytes.len() < HEADER {
        return Err(CliError::malformed(path, bytes.len() as u64, "truncated descriptor header"));
    }
    if &bytes[..4] != MAGIC {
        return Err(CliError::malformed(path, 0, "missing DESC magic"));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes")) as usize;
    let (count, dim) = (word(4), word(8));
    if dim == 0 {
        return Err(CliError::malformed(path, 8, "descriptor dimension is zero"));
    }
    let expected = count
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| CliError::malformed(path, 4, "descriptor size overflows"))?;
    let body = &bytes[HEADER..];
    if body.len() != expected {
        let offset = HEADER + body.len().min(expected);
        return Err(CliError::malformed(
            path,
            offset as u64,
            format!("expected {expected} bytes of descriptor data for {count}×{dim}, found {}", body.len()),
        ));
    }
    let data: Vec<f64> = body.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64).collect();
    if let Some(i) = data.iter().position(|v| !v.is_finite()) {
        return Err(CliError::malformed(path, (HEADER + 4 * i) as u64, "non-finite descriptor value"));
    }
    DescriptorSet::new(dim, data).map_err(|e| CliError::malformed(path, 0, e.to_string()))
}

/// Values are narrowed to `f32`.
pub fn encode(set: &DescriptorSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER + 4 * set.as_slice().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(set.len() as u32).to_le_bytes());
    out.extend_from_slice(&(set.dimension() as u32).to_le_bytes());
    for v in set.as_slice() {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out
}
