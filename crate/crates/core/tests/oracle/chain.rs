//! Random small consistency instances checked against the dense oracle.

use nalgebra::{DMatrix, Vector3};
use rand::Rng;
use semreg_core::consistency::{filter_group, ConsistencyContext};
use semreg_core::neighbors::NeighborIndex;
use semreg_core::synth::{random_transform, rng};
use semreg_core::{Correspondence, Error, Label, SemanticMode, SemanticPointCloud};

use super::{brute_majority, consistency_chain, OracleCorr};

pub const MAJORITY_RADIUS: f64 = 0.8;

/// Outcome of one instance: largest absolute deviation over all real-valued
/// entries and the number of disagreeing boolean entries or selections.
#[derive(Clone, Copy, Debug, Default)]
pub struct ChainCheck {
    pub max_abs_diff: f64,
    pub mismatches: usize,
}

fn bool_mismatches(a: &DMatrix<bool>, b: &DMatrix<f64>) -> usize {
    a.iter().zip(b.iter()).filter(|(x, y)| f64::from(u8::from(**x)) != **y).count()
}

fn max_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Builds instance `seed` (w ≤ 20 correspondences, group of k ≤ 8, at most six
/// classes) and compares every matrix of the chain plus the top-k₁ selection.
pub fn check_instance(seed: u64) -> ChainCheck {
    let mut r = rng(seed);
    let classes = r.random_range(1..=6u32);
    let n = 24;
    let src_pts: Vec<Vector3<f64>> =
        (0..n).map(|_| Vector3::new(r.random_range(0.0..3.0), r.random_range(0.0..3.0), r.random_range(0.0..3.0))).collect();
    let src_labels: Vec<u32> = (0..n).map(|_| r.random_range(1..=classes)).collect();
    let t = random_transform(&mut r, 180.0, 2.0);
    let tgt_pts: Vec<Vector3<f64>> = src_pts
        .iter()
        .map(|p| {
            let jitter = if r.random_bool(0.5) { 0.0 } else { r.random_range(-0.5..0.5) };
            t.apply(p) + Vector3::new(jitter, -jitter, 0.5 * jitter)
        })
        .collect();
    let tgt_labels: Vec<u32> =
        src_labels.iter().map(|&l| if r.random_bool(0.7) { l } else { r.random_range(1..=classes) }).collect();

    let universe = (1..=classes).map(Label).collect();
    let src = SemanticPointCloud::new(src_pts.clone(), src_labels.iter().map(|&l| Label(l)).collect(), universe)
        .expect("valid source");
    let tgt = src.with_points(tgt_pts.clone()).and_then(|c| c.with_labels(tgt_labels.iter().map(|&l| Label(l)).collect()));
    let tgt = tgt.expect("valid target");

    let w = r.random_range(3..=20usize);
    let global: Vec<Correspondence> = (0..w)
        .map(|_| {
            let i = r.random_range(0..n);
            let j = if r.random_bool(0.5) { i } else { r.random_range(0..n) };
            Correspondence::between(&src, &tgt, i, j).expect("in range")
        })
        .collect();
    let k = r.random_range(3..=w.min(8));
    let mut pool: Vec<usize> = (0..w).collect();
    let mut members = Vec::with_capacity(k);
    for _ in 0..k {
        members.push(pool.swap_remove(r.random_range(0..pool.len())));
    }
    let keep = r.random_range(3..=k);
    let sigma_d = r.random_range(0.3..1.0);
    let mode_id = (seed % 3) as u8;
    let mode = [SemanticMode::Off, SemanticMode::Tight, SemanticMode::Loose][mode_id as usize];

    let oracle_global: Vec<OracleCorr> = global
        .iter()
        .map(|c| OracleCorr {
            p: src_pts[c.src_index],
            q: tgt_pts[c.tgt_index],
            src_label: src_labels[c.src_index],
            tgt_label: tgt_labels[c.tgt_index],
            src_major: brute_majority(&src_pts, &src_labels, c.src_index, MAJORITY_RADIUS),
            tgt_major: brute_majority(&tgt_pts, &tgt_labels, c.tgt_index, MAJORITY_RADIUS),
        })
        .collect();
    let expected = consistency_chain(&oracle_global, &members, sigma_d, mode_id, keep);

    let src_index = NeighborIndex::new(src.points()).expect("non-empty");
    let tgt_index = NeighborIndex::new(tgt.points()).expect("non-empty");
    let ctx = ConsistencyContext::new(&global, &src, &src_index, &tgt, &tgt_index, sigma_d, MAJORITY_RADIUS, mode)
        .expect("context");
    let ws = ctx.workspace(&members);

    let mut out = ChainCheck::default();
    out.mismatches += bool_mismatches(&ws.m_g, &expected.m_g);
    out.mismatches += bool_mismatches(&ws.m_g_prime, &expected.m_g_prime);
    out.mismatches += bool_mismatches(&ws.m_s, &expected.m_s);
    out.mismatches += bool_mismatches(&ws.m_s_prime, &expected.m_s_prime);
    out.mismatches += bool_mismatches(&ws.m_s_star, &expected.m_s_star);
    out.max_abs_diff = max_diff(&ctx.table.weight_matrix(), &expected.w)
        .max(max_diff(&ws.m_g_star, &expected.m_g_star))
        .max(max_diff(&ws.m_star, &expected.m_star));
    match filter_group(&ws, &members, keep, 0) {
        Ok(kept) => {
            if kept.columns != expected.kept {
                out.mismatches += 1;
            }
            if kept.weights.len() == expected.weights.len() {
                for (a, b) in kept.weights.iter().zip(&expected.weights) {
                    out.max_abs_diff = out.max_abs_diff.max((a - b).abs());
                }
            }
        }
        Err(Error::AllZeroRow) if expected.kept.is_empty() => {}
        Err(_) => out.mismatches += 1,
    }
    out
}
