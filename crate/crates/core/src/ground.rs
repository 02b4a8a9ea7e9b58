//! Label-seeded ground segmentation with a distance-based second pass.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use nalgebra::{Matrix3, Vector3};

use crate::cloud::{Label, Point, SemanticPointCloud};
use crate::error::{Error, Result};
use crate::transform::DEGENERACY_RATIO;

/// Plane `a·x + b·y + c·z + d = 0` with unit normal `(a, b, c)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlaneModel {
    pub normal: Vector3<f64>,
    pub d: f64,
    pub centroid: Point,
}

impl PlaneModel {
    pub fn coefficients(&self) -> [f64; 4] {
        [self.normal.x, self.normal.y, self.normal.z, self.d]
    }

    /// `|a·x + b·y + c·z + d| / (a² + b² + c²)`; with the unit normal kept
    /// here this is the Euclidean point-plane distance.
    pub fn distance(&self, p: &Point) -> f64 {
        (self.normal.dot(p) + self.d).abs() / self.normal.norm_squared()
    }
}

/// Least-squares plane through `points`: the normal is the direction of least
/// variance of the centered scatter, flipped so that its largest-magnitude
/// component is positive.
pub fn fit_plane(points: &[Point]) -> Result<PlaneModel> {
    fit_plane_iter(points.iter())
}

pub(crate) fn fit_plane_iter<'a>(points: impl Iterator<Item = &'a Point> + Clone) -> Result<PlaneModel> {
    let n = points.clone().count();
    if n < 3 {
        return Err(Error::DegenerateConfiguration("plane fit needs at least three points"));
    }
    let centroid = points.clone().fold(Vector3::zeros(), |acc, p| acc + p) / n as f64;
    let scatter = points.fold(Matrix3::zeros(), |acc, p| {
        let c = p - centroid;
        acc + c * c.transpose()
    });
    let eig = scatter.symmetric_eigen();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let (largest, middle) = (eig.eigenvalues[order[0]], eig.eigenvalues[order[1]]);
    if !(largest > 0.0) || middle <= DEGENERACY_RATIO * largest {
        return Err(Error::DegenerateConfiguration("points are collinear or coincident"));
    }
    let mut normal: Vector3<f64> = eig.eigenvectors.column(order[2]).normalize();
    let peak = normal.amax();
    let lead = (0..3).find(|&i| normal[i].abs() >= peak - 1e-12).unwrap_or(0);
    if normal[lead] < 0.0 {
        normal = -normal;
    }
    Ok(PlaneModel { normal, d: -normal.dot(&centroid), centroid })
}

/// Ground / non-ground partition of one cloud, by point index.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundSplit {
    pub ground: Vec<usize>,
    pub non_ground: Vec<usize>,
    /// Final plane; its normal is the ground prior used during verification.
    pub plane: PlaneModel,
    pub ground_labels: BTreeSet<Label>,
}

impl GroundSplit {
    pub fn ground_cloud(&self, cloud: &SemanticPointCloud) -> SemanticPointCloud {
        cloud.select(&self.ground)
    }

    pub fn non_ground_cloud(&self, cloud: &SemanticPointCloud) -> SemanticPointCloud {
        cloud.select(&self.non_ground)
    }

    /// Per-point membership mask.
    pub fn ground_mask(&self, len: usize) -> Vec<bool> {
        let mut mask = alloc::vec![false; len];
        for &i in &self.ground {
            mask[i] = true;
        }
        mask
    }

    fn from_ground(len: usize, ground: Vec<usize>, plane: PlaneModel, ground_labels: &BTreeSet<Label>) -> Self {
        let mut is_ground = alloc::vec![false; len];
        ground.iter().for_each(|&i| is_ground[i] = true);
        let non_ground = (0..len).filter(|&i| !is_ground[i]).collect();
        Self { ground, non_ground, plane, ground_labels: ground_labels.clone() }
    }
}

fn labeled_ground(cloud: &SemanticPointCloud, ground_labels: &BTreeSet<Label>) -> Vec<usize> {
    (0..cloud.len()).filter(|&i| ground_labels.contains(&cloud.label(i))).collect()
}

fn fit_indices(cloud: &SemanticPointCloud, indices: &[usize]) -> Result<PlaneModel> {
    fit_plane_iter(indices.iter().map(|&i| cloud.point(i)))
}

/// Ground taken from the labels alone: every point carrying a ground label,
/// with one plane fit.
pub fn label_only_segmentation(cloud: &SemanticPointCloud, ground_labels: &BTreeSet<Label>) -> Result<GroundSplit> {
    let ground = labeled_ground(cloud, ground_labels);
    if ground.len() < 3 {
        return Err(Error::NoGroundPoints);
    }
    let plane = fit_indices(cloud, &ground)?;
    Ok(GroundSplit::from_ground(cloud.len(), ground, plane, ground_labels))
}

/// Fit a plane on ground-labeled points, keep the ground-labeled points within
/// `sigma_g` of it, and refit. Points that only carry a ground label but sit
/// away from the plane move to the non-ground side; no unlabeled point is
/// promoted to ground.
pub fn secondary_ground_segmentation(
    cloud: &SemanticPointCloud,
    ground_labels: &BTreeSet<Label>,
    sigma_g: f64,
) -> Result<GroundSplit> {
    if !(sigma_g > 0.0) {
        return Err(Error::InvalidArgument(alloc::format!("sigma_g must be positive, got {sigma_g}")));
    }
    let seeded = labeled_ground(cloud, ground_labels);
    if seeded.len() < 3 {
        return Err(Error::NoGroundPoints);
    }
    let initial = fit_indices(cloud, &seeded)?;
    let near: Vec<usize> = seeded.into_iter().filter(|&i| initial.distance(cloud.point(i)) < sigma_g).collect();
    if near.len() < 3 {
        return Err(Error::NoGroundPoints);
    }
    let plane = fit_indices(cloud, &near).map_err(|_| Error::NoGroundPoints)?;
    // Membership is reported against the final plane.
    let ground: Vec<usize> = near.into_iter().filter(|&i| plane.distance(cloud.point(i)) < sigma_g).collect();
    if ground.len() < 3 {
        return Err(Error::NoGroundPoints);
    }
    Ok(GroundSplit::from_ground(cloud.len(), ground, plane, ground_labels))
}

/// Unsigned angle between two plane normals, in degrees, ignoring orientation.
pub fn normal_angle_deg(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let cross = a.cross(b).norm();
    let dot = a.dot(b).abs();
    libm::atan2(cross, dot).to_degrees()
}
