//! Independent reference implementations used by the integration tests and
//! the acceptance target. Nothing here calls into the crate's algorithms.

#![allow(dead_code)]

pub mod chain;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, Matrix3, Matrix4, Vector3};

/// Closed-form weighted absolute orientation through unit quaternions: the
/// rotation is the eigenvector of the largest eigenvalue of Horn's 4×4
/// matrix built from the weighted cross-covariance.
pub fn horn_solve(src: &[Vector3<f64>], tgt: &[Vector3<f64>], w: &[f64]) -> (Matrix3<f64>, Vector3<f64>) {
    let total: f64 = w.iter().sum();
    let ps = src.iter().zip(w).fold(Vector3::zeros(), |a, (p, wi)| a + p * *wi) / total;
    let qs = tgt.iter().zip(w).fold(Vector3::zeros(), |a, (q, wi)| a + q * *wi) / total;
    let mut s = Matrix3::<f64>::zeros();
    for ((p, q), wi) in src.iter().zip(tgt).zip(w) {
        let a = p - ps;
        let b = q - qs;
        for r in 0..3 {
            for c in 0..3 {
                s[(r, c)] += wi * a[r] * b[c];
            }
        }
    }
    let (sxx, sxy, sxz) = (s[(0, 0)], s[(0, 1)], s[(0, 2)]);
    let (syx, syy, syz) = (s[(1, 0)], s[(1, 1)], s[(1, 2)]);
    let (szx, szy, szz) = (s[(2, 0)], s[(2, 1)], s[(2, 2)]);
    let n = Matrix4::new(
        sxx + syy + szz,
        syz - szy,
        szx - sxz,
        sxy - syx,
        syz - szy,
        sxx - syy - szz,
        sxy + syx,
        szx + sxz,
        szx - sxz,
        sxy + syx,
        -sxx + syy - szz,
        syz + szy,
        sxy - syx,
        szx + sxz,
        syz + szy,
        -sxx - syy + szz,
    );
    let eig = n.symmetric_eigen();
    let best = (0..4).max_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b])).unwrap();
    let q = eig.eigenvectors.column(best);
    let r = quaternion_to_matrix(q[0], q[1], q[2], q[3]);
    (r, qs - r * ps)
}

pub fn quaternion_to_matrix(w: f64, x: f64, y: f64, z: f64) -> Matrix3<f64> {
    let n = (w * w + x * x + y * y + z * z).sqrt();
    let (w, x, y, z) = (w / n, x / n, y / n, z / n);
    Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}

/// Shepperd's branch-stable matrix-to-quaternion conversion, `(w, x, y, z)`.
pub fn matrix_to_quaternion(r: &Matrix3<f64>) -> [f64; 4] {
    let tr = r.trace();
    let cands = [tr, r[(0, 0)], r[(1, 1)], r[(2, 2)]];
    let k = (0..4).max_by(|&a, &b| cands[a].total_cmp(&cands[b])).unwrap();
    match k {
        0 => {
            let s = (1.0 + tr).sqrt() * 2.0;
            [0.25 * s, (r[(2, 1)] - r[(1, 2)]) / s, (r[(0, 2)] - r[(2, 0)]) / s, (r[(1, 0)] - r[(0, 1)]) / s]
        }
        1 => {
            let s = (1.0 + r[(0, 0)] - r[(1, 1)] - r[(2, 2)]).sqrt() * 2.0;
            [(r[(2, 1)] - r[(1, 2)]) / s, 0.25 * s, (r[(0, 1)] + r[(1, 0)]) / s, (r[(0, 2)] + r[(2, 0)]) / s]
        }
        2 => {
            let s = (1.0 + r[(1, 1)] - r[(0, 0)] - r[(2, 2)]).sqrt() * 2.0;
            [(r[(0, 2)] - r[(2, 0)]) / s, (r[(0, 1)] + r[(1, 0)]) / s, 0.25 * s, (r[(1, 2)] + r[(2, 1)]) / s]
        }
        _ => {
            let s = (1.0 + r[(2, 2)] - r[(0, 0)] - r[(1, 1)]).sqrt() * 2.0;
            [(r[(1, 0)] - r[(0, 1)]) / s, (r[(0, 2)] + r[(2, 0)]) / s, (r[(1, 2)] + r[(2, 1)]) / s, 0.25 * s]
        }
    }
}

/// Rotation angle between two rotations via the relative quaternion, degrees.
pub fn quaternion_angle_deg(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    let q = matrix_to_quaternion(&(b.transpose() * a));
    let v = (q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    (2.0 * v.atan2(q[0].abs())).to_degrees()
}

/// Exhaustive kNN: sort every point by squared distance, then index.
pub fn brute_knn(points: &[Vector3<f64>], center: &Vector3<f64>, k: usize) -> Vec<usize> {
    let mut all: Vec<(f64, usize)> = points.iter().enumerate().map(|(i, p)| ((p - center).norm_squared(), i)).collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    all.into_iter().take(k).map(|(_, i)| i).collect()
}

pub fn brute_radius(points: &[Vector3<f64>], center: &Vector3<f64>, radius: f64) -> Vec<usize> {
    (0..points.len()).filter(|&i| (points[i] - center).norm_squared() <= radius * radius).collect()
}

fn nearest_row(rows: &[Vec<f64>], x: &[f64]) -> usize {
    let d = |r: &Vec<f64>| r.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    let mut best = 0;
    for j in 1..rows.len() {
        if d(&rows[j]) < d(&rows[best]) {
            best = j;
        }
    }
    best
}

/// Mutual nearest neighbors `(i, j, distance)`, sorted by distance then `i`.
pub fn brute_mutual_nn(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for (i, row) in a.iter().enumerate() {
        let j = nearest_row(b, row);
        if nearest_row(a, &b[j]) == i {
            let d = row.iter().zip(&b[j]).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            out.push((i, j, d));
        }
    }
    out.sort_by(|x, y| x.2.total_cmp(&y.2).then(x.0.cmp(&y.0)));
    out
}

/// Unit principal eigenvector of a symmetric matrix, sign fixed positive-sum.
pub fn principal_eigenvector(a: &DMatrix<f64>) -> (f64, Vec<f64>) {
    let eig = a.clone().symmetric_eigen();
    let best = (0..a.nrows()).max_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y])).unwrap();
    let mut v: Vec<f64> = eig.eigenvectors.column(best).iter().copied().collect();
    if v.iter().sum::<f64>() < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    (eig.eigenvalues[best], v)
}

/// Label with the most points within `radius` of `points[i]`, ties to the
/// smallest label, brute force.
pub fn brute_majority(points: &[Vector3<f64>], labels: &[u32], i: usize, radius: f64) -> u32 {
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for j in brute_radius(points, &points[i], radius) {
        *counts.entry(labels[j]).or_default() += 1;
    }
    let top = *counts.values().max().unwrap();
    *counts.iter().find(|(_, &c)| c == top).unwrap().0
}

/// One correspondence of the consistency oracle.
#[derive(Clone, Debug)]
pub struct OracleCorr {
    pub p: Vector3<f64>,
    pub q: Vector3<f64>,
    pub src_label: u32,
    pub tgt_label: u32,
    pub src_major: u32,
    pub tgt_major: u32,
}

pub struct OracleMatrices {
    pub m_g: DMatrix<f64>,
    pub m_g_prime: DMatrix<f64>,
    pub w: DMatrix<f64>,
    pub m_g_star: DMatrix<f64>,
    pub m_s: DMatrix<f64>,
    pub m_s_prime: DMatrix<f64>,
    pub m_s_star: DMatrix<f64>,
    pub m_star: DMatrix<f64>,
    /// Retained group positions, best first.
    pub kept: Vec<usize>,
    pub weights: Vec<f64>,
}

/// The local/global consistency chain written straight from its
/// definitions: dense matrices, an explicit product `M′ W M′ᵀ`, and a full
/// sort for the top-k₁ selection. `mode` is 0 (geometry only), 1 (tight) or
/// 2 (loose).
pub fn consistency_chain(
    global: &[OracleCorr],
    members: &[usize],
    sigma_d: f64,
    mode: u8,
    keep: usize,
) -> OracleMatrices {
    let w_len = global.len();
    let k = members.len();
    let d = |x: usize, y: usize| {
        let a = (global[x].p - global[y].p).norm();
        let b = (global[x].q - global[y].q).norm();
        (a - b).abs()
    };
    let compat = |x: usize, y: usize| if d(x, y).powi(2) / sigma_d.powi(2) - 1.0 <= 0.0 { 1.0 } else { 0.0 };
    let m_g = DMatrix::from_fn(k, k, |i, j| compat(members[i], members[j]));
    let m_g_prime = DMatrix::from_fn(k, w_len, |i, x| compat(members[i], x));
    let w = DMatrix::from_fn(w_len, w_len, |x, y| (-d(x, y).powi(2) / (2.0 * sigma_d * sigma_d)).exp());
    let second = &m_g_prime * &w * m_g_prime.transpose();
    let m_g_star = m_g.component_mul(&second);
    let tight = |x: usize| global[x].src_label == global[x].tgt_label;
    let loose = |x: usize| global[x].src_major == global[x].tgt_major;
    let m_s = DMatrix::from_fn(k, k, |i, j| f64::from(u8::from(tight(members[i]) && tight(members[j]))));
    let m_s_prime = DMatrix::from_fn(k, k, |i, j| f64::from(u8::from(loose(members[i]) && loose(members[j]))));
    let m_s_star = m_s.zip_map(&m_s_prime, |a, b| a.max(b));
    let mask = match mode {
        0 => DMatrix::from_element(k, k, 1.0),
        1 => m_s.clone(),
        _ => m_s_star.clone(),
    };
    let m_star = m_g_star.component_mul(&mask);
    let mut order: Vec<usize> = (0..k).filter(|&j| m_star[(0, j)] > 0.0).collect();
    order.sort_by(|&a, &b| m_star[(0, b)].total_cmp(&m_star[(0, a)]).then(a.cmp(&b)));
    order.truncate(keep);
    let total: f64 = order.iter().map(|&j| m_star[(0, j)]).sum();
    let weights = order.iter().map(|&j| m_star[(0, j)] / total).collect();
    OracleMatrices { m_g, m_g_prime, w, m_g_star, m_s, m_s_prime, m_s_star, m_star, kept: order, weights }
}
