//! Ground-truth-guided correspondences for harness runs without descriptors.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use semreg_core::neighbors::NeighborIndex;
use semreg_core::synth::{rng, OUTLIER_MIN_RESIDUAL};
use semreg_core::{Correspondence, Label, RigidTransform, SemanticPointCloud};

use crate::error::{CliError, Result};

/// Settings of [`synthetic_matches`].
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticMatch {
    pub count: usize,
    pub outlier_ratio: f64,
    /// A source point's nearest target to its true image must lie this close
    /// to count as an inlier.
    pub inlier_radius: f64,
    /// Points with these labels are never matched.
    pub excluded_labels: BTreeSet<Label>,
    pub seed: u64,
}

/// `round((1 − outlier_ratio) · count)` inliers pairing source points with
/// the target point nearest to their image under `gt`, then random outliers
/// whose residual exceeds [`OUTLIER_MIN_RESIDUAL`]. Returned shuffled.
pub fn synthetic_matches(
    src: &SemanticPointCloud,
    tgt: &SemanticPointCloud,
    gt: &RigidTransform,
    opts: &SyntheticMatch,
) -> Result<Vec<Correspondence>> {
    if !(0.0..=1.0).contains(&opts.outlier_ratio) {
        return Err(CliError::Usage(format!("outlier ratio must lie in [0, 1], got {}", opts.outlier_ratio)));
    }
    let usable = |c: &SemanticPointCloud| -> Vec<usize> {
        (0..c.len()).filter(|&i| !opts.excluded_labels.contains(&c.label(i))).collect()
    };
    let mut src_pool = usable(src);
    let tgt_pool = usable(tgt);
    if src_pool.is_empty() || tgt_pool.is_empty() {
        return Err(CliError::Usage("no matchable points outside the excluded labels".into()));
    }
    let tgt_points: Vec<_> = tgt_pool.iter().map(|&j| *tgt.point(j)).collect();
    let index = NeighborIndex::new(&tgt_points).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut r = rng(opts.seed);
    let n_in = ((1.0 - opts.outlier_ratio) * opts.count as f64).round() as usize;
    let pair = |i: usize, j: usize| Correspondence::between(src, tgt, i, j).expect("pool indices are in range");

    src_pool.shuffle(&mut r);
    let mut out = Vec::with_capacity(opts.count);
    for &i in &src_pool {
        if out.len() == n_in {
            break;
        }
        let image = gt.apply(src.point(i));
        let (k, d2) = index.knn_with_distances(&image, 1).expect("non-empty index")[0];
        if d2.sqrt() <= opts.inlier_radius {
            out.push(pair(i, tgt_pool[k]));
        }
    }
    let mut attempts = 0usize;
    while out.len() < opts.count {
        attempts += 1;
        if attempts > 1000 * opts.count.max(1) {
            return Err(CliError::Usage("could not draw enough outlier pairs".into()));
        }
        let i = src_pool[r.random_range(0..src_pool.len())];
        let j = tgt_pool[r.random_range(0..tgt_pool.len())];
        if (gt.apply(src.point(i)) - tgt.point(j)).norm() > OUTLIER_MIN_RESIDUAL {
            out.push(pair(i, j));
        }
    }
    out.shuffle(&mut r);
    Ok(out)
}
