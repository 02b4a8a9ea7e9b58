use alloc::format;
use alloc::vec::Vec;

use crate::cloud::{Label, Point, SemanticPointCloud};
use crate::error::{Error, Result};

/// A hypothesized pairing of a source point with a target point.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Correspondence {
    pub src_index: usize,
    pub tgt_index: usize,
    pub src_label: Label,
    pub tgt_label: Label,
    /// Descriptor-space distance, when the pair came from feature matching.
    pub feature_distance: Option<f64>,
}

/// Ordered list of correspondences; every stage of the pipeline produces one
/// (or indices into one).
pub type CorrespondenceSet = Vec<Correspondence>;

impl Correspondence {
    /// Builds a correspondence, copying the labels stored at both indices.
    pub fn between(
        src: &SemanticPointCloud,
        tgt: &SemanticPointCloud,
        src_index: usize,
        tgt_index: usize,
    ) -> Result<Self> {
        check_index(src_index, src.len(), "source")?;
        check_index(tgt_index, tgt.len(), "target")?;
        Ok(Self {
            src_index,
            tgt_index,
            src_label: src.label(src_index),
            tgt_label: tgt.label(tgt_index),
            feature_distance: None,
        })
    }

    pub fn with_feature_distance(mut self, d: f64) -> Self {
        self.feature_distance = Some(d);
        self
    }

    pub fn validate(&self, src: &SemanticPointCloud, tgt: &SemanticPointCloud) -> Result<()> {
        check_index(self.src_index, src.len(), "source")?;
        check_index(self.tgt_index, tgt.len(), "target")?;
        if src.label(self.src_index) != self.src_label || tgt.label(self.tgt_index) != self.tgt_label {
            return Err(Error::InvalidArgument(format!(
                "correspondence ({}, {}) carries labels that differ from the clouds",
                self.src_index, self.tgt_index
            )));
        }
        Ok(())
    }

    pub fn source_point<'a>(&self, src: &'a SemanticPointCloud) -> &'a Point {
        src.point(self.src_index)
    }

    pub fn target_point<'a>(&self, tgt: &'a SemanticPointCloud) -> &'a Point {
        tgt.point(self.tgt_index)
    }
}

fn check_index(i: usize, len: usize, side: &str) -> Result<()> {
    if i >= len {
        return Err(Error::InvalidArgument(format!("{side} index {i} out of range for {len} points")));
    }
    Ok(())
}

pub fn validate_all(set: &[Correspondence], src: &SemanticPointCloud, tgt: &SemanticPointCloud) -> Result<()> {
    set.iter().try_for_each(|c| c.validate(src, tgt))
}

/// Gathers source and target coordinates of the listed correspondences.
pub fn endpoints(
    set: &[Correspondence],
    members: impl IntoIterator<Item = usize>,
    src: &SemanticPointCloud,
    tgt: &SemanticPointCloud,
) -> (Vec<Point>, Vec<Point>) {
    members
        .into_iter()
        .map(|m| (*set[m].source_point(src), *set[m].target_point(tgt)))
        .unzip()
}
