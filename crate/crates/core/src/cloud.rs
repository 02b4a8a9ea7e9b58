use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use nalgebra::Vector3;

use crate::error::{Error, Result};

/// A point in R³, meters.
pub type Point = Vector3<f64>;

/// Integer semantic class id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(transparent))]
pub struct Label(pub u32);

impl core::fmt::Display for Label {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        self.0.fmt(f)
    }
}

/// Points with one semantic label each, plus the set of label ids the
/// labels are drawn from.
#[derive(Clone, Debug, PartialEq)]
pub struct SemanticPointCloud {
    points: Vec<Point>,
    labels: Vec<Label>,
    universe: BTreeSet<Label>,
}

impl SemanticPointCloud {
    pub fn new(points: Vec<Point>, labels: Vec<Label>, universe: BTreeSet<Label>) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::LengthMismatch { expected: points.len(), found: labels.len() });
        }
        if let Some(i) = points.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidCloud(format!("non-finite coordinate at point {i}")));
        }
        if let Some(i) = labels.iter().position(|l| !universe.contains(l)) {
            return Err(Error::InvalidCloud(format!(
                "label {} of point {i} is outside the label universe",
                labels[i]
            )));
        }
        Ok(Self { points, labels, universe })
    }

    /// Builds a cloud whose universe is exactly the set of labels present.
    pub fn from_labeled(points: Vec<Point>, labels: Vec<Label>) -> Result<Self> {
        let universe = labels.iter().copied().collect();
        Self::new(points, labels, universe)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn universe(&self) -> &BTreeSet<Label> {
        &self.universe
    }

    pub fn point(&self, i: usize) -> &Point {
        &self.points[i]
    }

    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    /// Labels that actually occur in the cloud.
    pub fn label_set(&self) -> BTreeSet<Label> {
        self.labels.iter().copied().collect()
    }

    /// Sub-cloud made of the given point indices, in the given order. The
    /// label universe is kept.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            universe: self.universe.clone(),
        }
    }

    /// Same geometry with a replacement label vector.
    pub fn with_labels(&self, labels: Vec<Label>) -> Result<Self> {
        Self::new(self.points.clone(), labels, self.universe.clone())
    }

    /// Same labels with replacement coordinates.
    pub fn with_points(&self, points: Vec<Point>) -> Result<Self> {
        Self::new(points, self.labels.clone(), self.universe.clone())
    }

    pub fn into_parts(self) -> (Vec<Point>, Vec<Label>, BTreeSet<Label>) {
        (self.points, self.labels, self.universe)
    }
}
