//! File ingestion and output. Formats are chosen by extension: `.ply` for
//! PLY, `.bin` for KITTI velodyne scans, `.label` for KITTI label files.

pub mod correspondences;
pub mod descriptors;
pub mod kitti;
pub mod ply;

use std::path::Path;

use semreg_core::correspond::DescriptorSet;
use semreg_core::{Correspondence, RigidTransform, SemanticPointCloud};

use crate::error::{CliError, Result};

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn extension(path: &Path) -> String {
    path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase()
}

/// Loads a cloud from PLY or a KITTI scan. A separate KITTI label file, when
/// given, replaces any labels stored in the cloud file.
pub fn load_point_cloud(path: &Path, label_path: Option<&Path>) -> Result<SemanticPointCloud> {
    let bytes = read_bytes(path)?;
    let ply = match extension(path).as_str() {
        "ply" => ply::parse(&bytes, path)?,
        "bin" => ply::PlyCloud { points: kitti::parse_velodyne(&bytes, path)?, labels: None },
        other => return Err(CliError::Usage(format!("{}: unsupported point cloud extension `{other}`", path.display()))),
    };
    let ply = match label_path {
        Some(lp) => {
            let labels = kitti::parse_labels(&read_bytes(lp)?, lp)?;
            if labels.len() != ply.points.len() {
                return Err(CliError::LengthMismatch {
                    what: format!("labels {} for cloud {}", lp.display(), path.display()),
                    expected: ply.points.len(),
                    found: labels.len(),
                });
            }
            ply::PlyCloud { labels: Some(labels), ..ply }
        }
        None => ply,
    };
    ply.into_cloud(path)
}

/// Writes binary little-endian PLY with double coordinates, so a reload is
/// bit-identical.
pub fn save_point_cloud(path: &Path, cloud: &SemanticPointCloud) -> Result<()> {
    write_bytes(path, &ply::encode(cloud, ply::Encoding::BinaryLittleEndian, ply::Precision::Double))
}

pub fn load_descriptors(path: &Path) -> Result<DescriptorSet> {
    descriptors::parse(&read_bytes(path)?, path)
}

/// First pose of a pose file.
pub fn load_pose(path: &Path) -> Result<RigidTransform> {
    let bytes = read_bytes(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| CliError::malformed(path, e.valid_up_to() as u64, "not UTF-8"))?;
    kitti::parse_poses(text, path)?.into_iter().next().ok_or_else(|| CliError::malformed(path, 0, "no pose found"))
}

pub fn save_pose(path: &Path, t: &RigidTransform) -> Result<()> {
    write_bytes(path, kitti::format_pose(t).as_bytes())
}

pub fn load_correspondences(
    path: &Path,
    src: &SemanticPointCloud,
    tgt: &SemanticPointCloud,
) -> Result<Vec<Correspondence>> {
    correspondences::parse(&read_bytes(path)?, path, src, tgt)
}
