//! Correspondence establishment: semantic overlap screening, descriptor
//! matching, spectral seed selection and kNN grouping.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::cloud::{Label, SemanticPointCloud};
use crate::consistency::PairTable;
use crate::correspondence::Correspondence;
use crate::error::{Error, Result};
use crate::neighbors::NeighborIndex;

/// Power-iteration stopping tolerance on the change of the unit eigenvector.
pub const POWER_TOLERANCE: f64 = 1e-6;
pub const POWER_MAX_ITERATIONS: usize = 100;

/// Labels present in both clouds.
pub fn overlap_labels(src: &SemanticPointCloud, tgt: &SemanticPointCloud) -> Result<BTreeSet<Label>> {
    let shared: BTreeSet<Label> = src.label_set().intersection(&tgt.label_set()).copied().collect();
    if shared.is_empty() {
        return Err(Error::EmptyOverlap);
    }
    Ok(shared)
}

/// Indices of points whose label is in `labels`, ascending.
pub fn indices_with_labels(cloud: &SemanticPointCloud, labels: &BTreeSet<Label>) -> Vec<usize> {
    (0..cloud.len()).filter(|&i| labels.contains(&cloud.label(i))).collect()
}

/// Restricts both clouds to the labels they share.
pub fn semantic_overlap_filter(
    src: &SemanticPointCloud,
    tgt: &SemanticPointCloud,
) -> Result<(SemanticPointCloud, SemanticPointCloud)> {
    let shared = overlap_labels(src, tgt)?;
    Ok((
        src.select(&indices_with_labels(src, &shared)),
        tgt.select(&indices_with_labels(tgt, &shared)),
    ))
}

/// Per-point feature vectors, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DescriptorSet {
    dimension: usize,
    data: Vec<f64>,
}

impl DescriptorSet {
    pub fn new(dimension: usize, data: Vec<f64>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidArgument("descriptor dimension must be positive".into()));
        }
        if !data.len().is_multiple_of(dimension) {
            return Err(Error::InvalidArgument(format!(
                "{} values do not split into rows of {dimension}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("descriptor {} has a non-finite entry", pos / dimension)));
        }
        Ok(Self { dimension, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dimension = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dimension) {
            return Err(Error::DimensionMismatch(dimension, bad.len()));
        }
        Self::new(dimension, rows.concat())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dimension
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Mutual nearest neighbors in descriptor space over all points.
pub fn match_descriptors(
    src_desc: &DescriptorSet,
    tgt_desc: &DescriptorSet,
    src: &SemanticPointCloud,
    tgt: &SemanticPointCloud,
    cap: usize,
) -> Result<Vec<Correspondence>> {
    let src_all: Vec<usize> = (0..src.len()).collect();
    let tgt_all: Vec<usize> = (0..tgt.len()).collect();
    match_descriptors_among(src_desc, tgt_desc, src, tgt, &src_all, &tgt_all, cap)
}

/// Mutual nearest neighbors restricted to the given point indices. Nearest
/// ties go to the lower index; output is sorted by feature distance then
/// source index and truncated to `cap`.
pub fn match_descriptors_among(
    src_desc: &DescriptorSet,
    tgt_desc: &DescriptorSet,
    src: &SemanticPointCloud,
    tgt: &SemanticPointCloud,
    src_subset: &[usize],
    tgt_subset: &[usize],
    cap: usize,
) -> Result<Vec<Correspondence>> {
    if src_desc.dimension() != tgt_desc.dimension() {
        return Err(Error::DimensionMismatch(src_desc.dimension(), tgt_desc.dimension()));
    }
    if src_desc.len() != src.len() {
        return Err(Error::LengthMismatch { expected: src.len(), found: src_desc.len() });
    }
    if tgt_desc.len() != tgt.len() {
        return Err(Error::LengthMismatch { expected: tgt.len(), found: tgt_desc.len() });
    }
    let mut src_best = vec![(f64::INFINITY, usize::MAX); src_subset.len()];
    let mut tgt_best = vec![(f64::INFINITY, usize::MAX); tgt_subset.len()];
    // One pass over all pairs fills both directions; strict `<` keeps the
    // first (lowest-position) minimum when subsets are ascending.
    for (a, &i) in src_subset.iter().enumerate() {
        let row = src_desc.row(i);
        for (b, &j) in tgt_subset.iter().enumerate() {
            let d = squared_distance(row, tgt_desc.row(j));
            if d < src_best[a].0 || (d == src_best[a].0 && j < src_best[a].1) {
                src_best[a] = (d, j);
            }
            if d < tgt_best[b].0 || (d == tgt_best[b].0 && i < tgt_best[b].1) {
                tgt_best[b] = (d, i);
            }
        }
    }
    let tgt_pos: alloc::collections::BTreeMap<usize, usize> =
        tgt_subset.iter().enumerate().map(|(b, &j)| (j, b)).collect();
    let mut out = Vec::new();
    for (a, &i) in src_subset.iter().enumerate() {
        let (d, j) = src_best[a];
        if j == usize::MAX {
            continue;
        }
        if tgt_best[tgt_pos[&j]].1 == i {
            out.push(Correspondence::between(src, tgt, i, j)?.with_feature_distance(libm::sqrt(d)));
        }
    }
    out.sort_by(|a, b| {
        a.feature_distance
            .unwrap_or(0.0)
            .total_cmp(&b.feature_distance.unwrap_or(0.0))
            .then(a.src_index.cmp(&b.src_index))
    });
    out.truncate(cap);
    Ok(out)
}

/// Principal eigenvector of the consistency affinity (Gaussian weight where
/// compatible, zero diagonal). Iterates on `A + I`, which has the same
/// eigenvectors and cannot oscillate on bipartite graphs.
pub fn spectral_scores(table: &PairTable) -> Vec<f64> {
    let n = table.len();
    if n == 0 {
        return Vec::new();
    }
    let mut v = vec![1.0 / libm::sqrt(n as f64); n];
    for _ in 0..POWER_MAX_ITERATIONS {
        let mut u: Vec<f64> = (0..n)
            .map(|i| {
                v[i] + table.support(i).iter().filter(|&&j| j != i).map(|&j| table.weight(i, j) * v[j]).sum::<f64>()
            })
            .collect();
        let norm = libm::sqrt(u.iter().map(|x| x * x).sum());
        u.iter_mut().for_each(|x| *x /= norm);
        let change = libm::sqrt(u.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum());
        v = u;
        if change < POWER_TOLERANCE {
            break;
        }
    }
    v
}

/// Indices of the `min(count, len)` largest scores, ties by ascending index.
pub fn top_scores(scores: &[f64], count: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(count);
    order
}

/// Seed correspondences (indices into `g`) chosen by spectral matching.
pub fn spectral_sample(
    g: &[Correspondence],
    src: &SemanticPointCloud,
    tgt: &SemanticPointCloud,
    count: usize,
    sigma_d: f64,
) -> Result<Vec<usize>> {
    if g.is_empty() || count == 0 {
        return Err(Error::InvalidArgument("need at least one correspondence and one seed".into()));
    }
    let table = PairTable::new(g, src, tgt, sigma_d)?;
    Ok(spectral_sample_table(&table, count))
}

pub fn spectral_sample_table(table: &PairTable, count: usize) -> Vec<usize> {
    top_scores(&spectral_scores(table), count)
}

/// Seeds and their source-space neighborhoods. All indices refer to the
/// global correspondence set the groups were built from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalGroupSet {
    pub seeds: Vec<usize>,
    /// One group per seed; the seed comes first, then the remaining members
    /// by ascending source distance (ties by index).
    pub groups: Vec<Vec<usize>>,
}

impl LocalGroupSet {
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

/// Groups the `k` correspondences whose source points are nearest to each
/// seed's source point.
pub fn group_knn(
    g: &[Correspondence],
    seeds: &[usize],
    src: &SemanticPointCloud,
    k: usize,
) -> Result<LocalGroupSet> {
    if k == 0 || g.len() < k {
        return Err(Error::GroupTooSmall { k, available: g.len() });
    }
    let points: Vec<_> = g.iter().map(|c| *c.source_point(src)).collect();
    let index = NeighborIndex::new(&points)?;
    let mut groups = Vec::with_capacity(seeds.len());
    for &s in seeds {
        if s >= g.len() {
            return Err(Error::InvalidArgument(format!("seed {s} out of range for {} correspondences", g.len())));
        }
        let mut near = index.knn_query(&points[s], k)?;
        match near.iter().position(|&m| m == s) {
            Some(p) => {
                near.remove(p);
            }
            None => {
                near.pop();
            }
        }
        near.insert(0, s);
        groups.push(near);
    }
    Ok(LocalGroupSet { seeds: seeds.to_vec(), groups })
}
