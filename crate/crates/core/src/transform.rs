//! Rigid transforms and the weighted least-squares rigid solve.

use alloc::vec::Vec;

use nalgebra::{Matrix3, Matrix4, Rotation3, Unit, Vector3};

use crate::cloud::Point;
use crate::error::{Error, Result};

const SO3_TOLERANCE: f64 = 1e-9;

/// Ratio below which a singular value of the cross-covariance counts as zero.
pub const DEGENERACY_RATIO: f64 = 1e-12;

/// Rotation in SO(3) plus translation, acting as `p ↦ R·p + t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self { rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    /// Validates `rotationᵀ·rotation = I` and `det = +1` within 1e-9.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        if !rotation.iter().chain(translation.iter()).all(|v| v.is_finite()) {
            return Err(Error::InvalidTransform("non-finite entry"));
        }
        let gram = rotation.transpose() * rotation - Matrix3::identity();
        if gram.amax() > SO3_TOLERANCE {
            return Err(Error::InvalidTransform("rotation is not orthonormal"));
        }
        if (rotation.determinant() - 1.0).abs() > SO3_TOLERANCE {
            return Err(Error::InvalidTransform("rotation determinant is not +1"));
        }
        Ok(Self { rotation, translation })
    }

    /// Projects an approximately orthonormal matrix onto SO(3) (nearest
    /// rotation in Frobenius norm). Useful for poses stored in single
    /// precision text files.
    pub fn from_approximate(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        if !rotation.iter().chain(translation.iter()).all(|v| v.is_finite()) {
            return Err(Error::InvalidTransform("non-finite entry"));
        }
        let svd = rotation.svd(true, true);
        let (u, v_t) = match (svd.u, svd.v_t) {
            (Some(u), Some(v_t)) => (u, v_t),
            _ => return Err(Error::InvalidTransform("svd failed")),
        };
        let projected = u * v_t;
        if projected.determinant() < 0.0 {
            return Err(Error::InvalidTransform("matrix is a reflection"));
        }
        Self::new(projected, translation)
    }

    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64, translation: Vector3<f64>) -> Self {
        let rotation = match Unit::try_new(*axis, 1e-15) {
            Some(axis) => *Rotation3::from_axis_angle(&axis, angle).matrix(),
            None => Matrix3::identity(),
        };
        Self { rotation, translation }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self { rotation: Matrix3::identity(), translation }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn apply(&self, p: &Point) -> Point {
        self.rotation * p + self.translation
    }

    pub fn apply_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform { rotation: rt, translation: -(rt * self.translation) }
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// Row-major 4×4 matrix.
    pub fn to_row_major(&self) -> [[f64; 4]; 4] {
        let m = self.to_homogeneous();
        core::array::from_fn(|r| core::array::from_fn(|c| m[(r, c)]))
    }

    pub fn from_row_major(rows: &[[f64; 4]; 4]) -> Result<Self> {
        let rotation = Matrix3::from_fn(|r, c| rows[r][c]);
        let translation = Vector3::new(rows[0][3], rows[1][3], rows[2][3]);
        Self::new(rotation, translation)
    }
}

/// Applies `t` to every point.
pub fn apply_transform(points: &[Point], t: &RigidTransform) -> Vec<Point> {
    points.iter().map(|p| t.apply(p)).collect()
}

/// Minimizes `Σ wᵢ ‖R·srcᵢ + t − tgtᵢ‖²` over SO(3) × R³.
///
/// Solved through the SVD of the weighted cross-covariance with the usual
/// determinant correction on the smallest singular direction, so the result
/// is always a proper rotation.
pub fn weighted_rigid_solve(src: &[Point], tgt: &[Point], weights: &[f64]) -> Result<RigidTransform> {
    if src.len() != weights.len() {
        return Err(Error::LengthMismatch { expected: weights.len(), found: src.len() });
    }
    if tgt.len() != weights.len() {
        return Err(Error::LengthMismatch { expected: weights.len(), found: tgt.len() });
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidArgument("weights must be finite and non-negative".into()));
    }
    if weights.iter().filter(|w| **w > 0.0).count() < 3 {
        return Err(Error::DegenerateConfiguration("fewer than three weighted pairs"));
    }
    let total: f64 = weights.iter().sum();

    let mut src_mean = Vector3::zeros();
    let mut tgt_mean = Vector3::zeros();
    for ((p, q), w) in src.iter().zip(tgt).zip(weights) {
        src_mean += p * *w;
        tgt_mean += q * *w;
    }
    src_mean /= total;
    tgt_mean /= total;

    let mut cov = Matrix3::zeros();
    for ((p, q), w) in src.iter().zip(tgt).zip(weights) {
        if *w > 0.0 {
            cov += (p - src_mean) * (q - tgt_mean).transpose() * *w;
        }
    }

    // Singular values come back sorted in decreasing order.
    let svd = cov.svd(true, true);
    let s = svd.singular_values;
    if !(s[0] > 0.0) || s[1] < DEGENERACY_RATIO * s[0] {
        return Err(Error::DegenerateConfiguration("weighted points are collinear or coincident"));
    }
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::DegenerateConfiguration("svd did not converge")),
    };
    let v = v_t.transpose();
    let mut correction = Matrix3::identity();
    if (v * u.transpose()).determinant() < 0.0 {
        correction[(2, 2)] = -1.0;
    }
    let rotation = v * correction * u.transpose();
    let translation = tgt_mean - rotation * src_mean;
    Ok(RigidTransform { rotation, translation })
}
