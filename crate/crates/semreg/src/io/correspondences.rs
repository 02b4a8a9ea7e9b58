//! Correspondence lists as CSV with a `src_index,tgt_index` header. Labels
//! are taken from the clouds.

use std::path::Path;

use semreg_core::{Correspondence, SemanticPointCloud};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    src_index: usize,
    tgt_index: usize,
}

pub fn parse(
    bytes: &[u8],
    path: &Path,
    src: &SemanticPointCloud,
    tgt: &SemanticPointCloud,
) -> Result<Vec<Correspondence>> {
    let mut reader = csv::Reader::from_reader(bytes);
    let mut out = Vec::new();
    for record in reader.deserialize::<Row>() {
        let row = record.map_err(|e| {
            let offset = e.position().map_or(0, |p| p.byte());
            CliError::malformed(path, offset, e.to_string())
        })?;
        let c = Correspondence::between(src, tgt, row.src_index, row.tgt_index).map_err(|e| {
            CliError::malformed(path, 0, format!("row ({}, {}): {e}", row.src_index, row.tgt_index))
        })?;
        out.push(c);
    }
    Ok(out)
}

pub fn encode(set: &[Correspondence]) -> Vec<u8> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for c in set {
        writer.serialize(Row { src_index: c.src_index, tgt_index: c.tgt_index }).expect("in-memory write");
    }
    writer.into_inner().expect("in-memory flush")
}
