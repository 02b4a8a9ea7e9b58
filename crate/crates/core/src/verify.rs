//! Candidate verification (ground-normal gate, truncated-distance scoring)
//! and the final refinement solve.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::Vector3;

use crate::cloud::{Point, SemanticPointCloud};
use crate::consistency::FilteredGroup;
use crate::correspondence::Correspondence;
use crate::error::{Error, Result};
use crate::ground::normal_angle_deg;
use crate::transform::{weighted_rigid_solve, RigidTransform};

/// Passes when the rotated source ground normal lies within `sigma_theta`
/// degrees of the target normal, regardless of orientation.
pub fn ground_normal_gate(candidate: &RigidTransform, n_p: &Vector3<f64>, n_q: &Vector3<f64>, sigma_theta: f64) -> bool {
    normal_angle_deg(&candidate.apply_vector(n_p), n_q) <= sigma_theta
}

/// Residual clamped to `[0.5σ_d, 2.5σ_d]`.
pub fn truncated_distance(p: &Point, q: &Point, sigma_d: f64) -> f64 {
    let d = (p - q).norm();
    if d <= 0.5 * sigma_d {
        0.5 * sigma_d
    } else if d < 2.5 * sigma_d {
        d
    } else {
        2.5 * sigma_d
    }
}

/// Sum of truncated distances of `members` under `t`.
pub fn truncated_score(
    t: &RigidTransform,
    members: &[usize],
    global: &[Correspondence],
    src: &SemanticPointCloud,
    tgt: &SemanticPointCloud,
    sigma_d: f64,
) -> f64 {
    members
        .iter()
        .map(|&m| truncated_distance(&t.apply(global[m].source_point(src)), global[m].target_point(tgt), sigma_d))
        .sum()
}

/// Union of the retained members of all candidates, ascending.
pub fn filtered_union(candidates: &[FilteredGroup]) -> Vec<usize> {
    let set: BTreeSet<usize> = candidates.iter().flat_map(|c| c.retained.members.iter().copied()).collect();
    set.into_iter().collect()
}

/// Ground normals of both scans, used by the gate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroundNormals {
    pub source: Vector3<f64>,
    pub target: Vector3<f64>,
}

/// Outcome of the two-stage selection.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    /// Position of the chosen candidate.
    pub best_index: usize,
    pub best: RigidTransform,
    pub candidate_scores: Vec<f64>,
    pub gate_passed: Vec<bool>,
    /// True when no normals were available, the gate was switched off, or
    /// every candidate failed it; selection then ran over all candidates.
    pub gate_bypassed: bool,
}

/// Gates every candidate on the ground normals, then picks the survivor with
/// the smallest truncated-distance sum over `union` (ties to the lower
/// index). `normals = None` bypasses the gate.
pub fn select_best(
    candidates: &[FilteredGroup],
    union: &[usize],
    global: &[Correspondence],
    src: &SemanticPointCloud,
    tgt: &SemanticPointCloud,
    normals: Option<&GroundNormals>,
    sigma_theta: f64,
    sigma_d: f64,
) -> Result<Selection> {
    if candidates.is_empty() {
        return Err(Error::NoCandidates);
    }
    let gate_passed: Vec<bool> = match normals {
        Some(n) => candidates.iter().map(|c| ground_normal_gate(&c.candidate, &n.source, &n.target, sigma_theta)).collect(),
        None => vec![false; candidates.len()],
    };
    let gate_bypassed = !gate_passed.iter().any(|&b| b);
    let candidate_scores: Vec<f64> =
        candidates.iter().map(|c| truncated_score(&c.candidate, union, global, src, tgt, sigma_d)).collect();
    let mut best_index = None;
    for (l, score) in candidate_scores.iter().enumerate() {
        if !(gate_bypassed || gate_passed[l]) {
            continue;
        }
        if best_index.is_none_or(|b: usize| *score < candidate_scores[b]) {
            best_index = Some(l);
        }
    }
    let best_index = best_index.ok_or(Error::NoCandidates)?;
    Ok(Selection { best_index, best: candidates[best_index].candidate, candidate_scores, gate_passed, gate_bypassed })
}

/// Result of the refinement solve.
#[derive(Clone, Debug, PartialEq)]
pub struct Refinement {
    pub transform: RigidTransform,
    /// Indices into the global set with squared residual below `τ₁`.
    pub inliers: Vec<usize>,
    /// False when too few or degenerate inliers left the input unchanged.
    pub solved: bool,
}

/// Re-solves with unit weights over every global pair whose squared residual
/// under `t` is below `tau_1`.
pub fn refine(
    t: &RigidTransform,
    global: &[Correspondence],
    src: &SemanticPointCloud,
    tgt: &SemanticPointCloud,
    tau_1: f64,
) -> Refinement {
    let inliers: Vec<usize> = (0..global.len())
        .filter(|&i| (t.apply(global[i].source_point(src)) - global[i].target_point(tgt)).norm_squared() < tau_1)
        .collect();
    let (p, q): (Vec<Point>, Vec<Point>) =
        inliers.iter().map(|&i| (*global[i].source_point(src), *global[i].target_point(tgt))).unzip();
    let ones = alloc::vec![1.0; inliers.len()];
    match weighted_rigid_solve(&p, &q, &ones) {
        Ok(transform) => Refinement { transform, inliers, solved: true },
        Err(_) => Refinement { transform: *t, inliers, solved: false },
    }
}

/// Everything the verification stage decided.
#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    pub best: RigidTransform,
    pub refined: RigidTransform,
    pub best_index: usize,
    pub candidate_scores: Vec<f64>,
    pub gate_passed: Vec<bool>,
    pub gate_bypassed: bool,
    pub refined_inliers: Vec<usize>,
    pub refined_inlier_count: usize,
}

impl VerificationReport {
    pub fn new(selection: Selection, refinement: Refinement) -> Self {
        Self {
            best: selection.best,
            refined: refinement.transform,
            best_index: selection.best_index,
            candidate_scores: selection.candidate_scores,
            gate_passed: selection.gate_passed,
            gate_bypassed: selection.gate_bypassed,
            refined_inlier_count: refinement.inliers.len(),
            refined_inliers: refinement.inliers,
        }
    }
}
