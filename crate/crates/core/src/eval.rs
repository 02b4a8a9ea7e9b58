//! Registration and correspondence quality metrics.

use crate::cloud::SemanticPointCloud;
use crate::correspondence::Correspondence;
use crate::transform::RigidTransform;

use nalgebra::{Matrix3, Vector3};

/// Geodesic angle between two rotations, in degrees.
///
/// Evaluated as `atan2(sin θ, cos θ)` from the relative rotation, which keeps
/// full precision near 0° and 180° where `acos` of the trace does not.
pub fn rotation_error(r_est: &Matrix3<f64>, r_gt: &Matrix3<f64>) -> f64 {
    let r = r_gt.transpose() * r_est;
    let cos = (r.trace() - 1.0) / 2.0;
    let axis = Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]);
    let sin = axis.norm() / 2.0;
    libm::atan2(sin, cos).to_degrees()
}

/// `‖t_est − t_gt‖` in centimeters.
pub fn translation_error(t_est: &Vector3<f64>, t_gt: &Vector3<f64>) -> f64 {
    (t_est - t_gt).norm() * 100.0
}

/// Success thresholds; both comparisons are strict.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Thresholds {
    pub re_deg: f64,
    pub te_cm: f64,
}

impl Thresholds {
    pub const EASY: Self = Self { re_deg: 5.0, te_cm: 60.0 };
    pub const MEDIUM: Self = Self { re_deg: 5.0, te_cm: 30.0 };
    pub const HARD: Self = Self { re_deg: 2.0, te_cm: 10.0 };
}

pub fn registration_success(re_deg: f64, te_cm: f64, thresholds: Thresholds) -> bool {
    re_deg < thresholds.re_deg && te_cm < thresholds.te_cm
}

/// Fraction of successful runs; 0 for an empty input.
pub fn recall<I: IntoIterator<Item = bool>>(outcomes: I) -> f64 {
    let (mut ok, mut total) = (0usize, 0usize);
    for o in outcomes {
        total += 1;
        ok += usize::from(o);
    }
    if total == 0 {
        0.0
    } else {
        ok as f64 / total as f64
    }
}

/// Inlier precision, recall and their harmonic mean.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CorrespondenceMetrics {
    pub ip: f64,
    pub ir: f64,
    pub f1: f64,
}

impl CorrespondenceMetrics {
    pub fn from_counts(true_retained: usize, retained: usize, true_total: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let ip = ratio(true_retained, retained);
        let ir = ratio(true_retained, true_total);
        let f1 = if ip + ir == 0.0 { 0.0 } else { 2.0 * ip * ir / (ip + ir) };
        Self { ip, ir, f1 }
    }
}

/// Whether `c` lies within `radius` of its ground-truth target.
pub fn is_true_inlier(
    c: &Correspondence,
    gt: &RigidTransform,
    src: &SemanticPointCloud,
    tgt: &SemanticPointCloud,
    radius: f64,
) -> bool {
    (gt.apply(c.source_point(src)) - c.target_point(tgt)).norm() <= radius
}

/// IP / IR of `retained` against the true inliers of `global`.
pub fn correspondence_metrics(
    retained: &[Correspondence],
    global: &[Correspondence],
    gt: &RigidTransform,
    src: &SemanticPointCloud,
    tgt: &SemanticPointCloud,
    radius: f64,
) -> CorrespondenceMetrics {
    let hits = retained.iter().filter(|c| is_true_inlier(c, gt, src, tgt, radius)).count();
    let total = global.iter().filter(|c| is_true_inlier(c, gt, src, tgt, radius)).count();
    CorrespondenceMetrics::from_counts(hits, retained.len(), total)
}

/// Errors of an estimate against ground truth.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricReport {
    pub re_deg: f64,
    pub te_cm: f64,
    pub ip: f64,
    pub ir: f64,
    pub f1: f64,
}

impl MetricReport {
    pub fn new(estimate: &RigidTransform, gt: &RigidTransform, corr: CorrespondenceMetrics) -> Self {
        Self {
            re_deg: rotation_error(estimate.rotation(), gt.rotation()),
            te_cm: translation_error(estimate.translation(), gt.translation()),
            ip: corr.ip,
            ir: corr.ir,
            f1: corr.f1,
        }
    }

    pub fn success(&self, thresholds: Thresholds) -> bool {
        registration_success(self.re_deg, self.te_cm, thresholds)
    }
}
