//! KITTI / SemanticKITTI binaries and odometry pose text files.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use semreg_core::{Label, Point, RigidTransform};

use crate::error::{CliError, Result};

const VELODYNE_RECORD: usize = 16;

/// Little-endian `f32` quadruplets `(x, y, z, intensity)`; intensity dropped.
pub fn parse_velodyne(bytes: &[u8], path: &Path) -> Result<Vec<Point>> {
    let whole = bytes.len() - bytes.len() % VELODYNE_RECORD;
    if whole != bytes.len() {
        return Err(CliError::malformed(
            path,
            whole as u64,
            format!("{} trailing bytes after the last 16-byte record", bytes.len() - whole),
        ));
    }
    Ok(bytes
        .chunks_exact(VELODYNE_RECORD)
        .map(|r| {
            let f = |i: usize| f32::from_le_bytes(r[4 * i..4 * i + 4].try_into().expect("4 bytes")) as f64;
            Point::new(f(0), f(1), f(2))
        })
        .collect())
}

/// Inverse of [`parse_velodyne`] with zero intensity.
pub fn encode_velodyne(points: &[Point]) -> Vec<u8> {
    let mut out = Vec::with_capacity(points.len() * VELODYNE_RECORD);
    for p in points {
        for c in p.iter() {
            out.extend_from_slice(&(*c as f32).to_le_bytes());
        }
        out.extend_from_slice(&0f32.to_le_bytes());
    }
    out
}

/// One little-endian `u32` per point; the semantic class is the low 16 bits.
pub fn parse_labels(bytes: &[u8], path: &Path) -> Result<Vec<Label>> {
    if !bytes.len().is_multiple_of(4) {
        return Err(CliError::malformed(path, (bytes.len() - bytes.len() % 4) as u64, "label file length is not a multiple of 4"));
    }
    Ok(bytes.chunks_exact(4).map(|w| semantic_class(u32::from_le_bytes(w.try_into().expect("4 bytes")))).collect())
}

pub fn semantic_class(word: u32) -> Label {
    Label(word & 0xFFFF)
}

pub fn encode_labels(labels: &[Label]) -> Vec<u8> {
    labels.iter().flat_map(|l| l.0.to_le_bytes()).collect()
}

/// Builds a transform from a row-major 3×4 or 4×4 matrix. Rotations that are
/// not orthonormal to within the core tolerance (text files often carry six
/// digits) are projected onto SO(3).
pub fn transform_from_rows(values: &[f64]) -> Option<RigidTransform> {
    if values.len() != 12 && values.len() != 16 {
        return None;
    }
    let r = Matrix3::new(values[0], values[1], values[2], values[4], values[5], values[6], values[8], values[9], values[10]);
    let t = Vector3::new(values[3], values[7], values[11]);
    RigidTransform::new(r, t).or_else(|_| RigidTransform::from_approximate(r, t)).ok()
}

/// One pose per non-empty line, 12 (KITTI) or 16 whitespace-separated numbers.
pub fn parse_poses(text: &str, path: &Path) -> Result<Vec<RigidTransform>> {
    let mut out = Vec::new();
    let mut offset = 0u64;
    for line in text.split_inclusive('\n') {
        let body = line.trim();
        if !body.is_empty() && !body.starts_with('#') {
            let values: Vec<f64> = body
                .split_whitespace()
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| CliError::malformed(path, offset, "unparsable number in pose line"))?;
            let t = transform_from_rows(&values).ok_or_else(|| {
                CliError::malformed(path, offset, format!("pose line needs 12 or 16 finite numbers, found {}", values.len()))
            })?;
            out.push(t);
        }
        offset += line.len() as u64;
    }
    Ok(out)
}

/// KITTI single-line form: the top three rows, row-major.
pub fn format_pose(t: &RigidTransform) -> String {
    let rows = t.to_row_major();
    let mut s = String::new();
    for (i, v) in rows[..3].iter().flatten().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{v}");
    }
    s.push('\n');
    s
}
