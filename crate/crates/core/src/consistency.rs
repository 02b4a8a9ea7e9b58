//! Semantic-geometric consistency inside local correspondence groups and the
//! per-group weighted rigid solves that produce candidate transforms.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cell::OnceCell;

use nalgebra::DMatrix;

use crate::cloud::{Label, Point, SemanticPointCloud};
use crate::config::SemanticMode;
use crate::correspond::LocalGroupSet;
use crate::correspondence::Correspondence;
use crate::error::{Error, Result};
use crate::neighbors::NeighborIndex;
use crate::transform::{weighted_rigid_solve, RigidTransform};

/// Above this many correspondences the pairwise tables are not stored and
/// entries are recomputed on demand.
pub const DENSE_LIMIT: usize = 6000;

/// `| ‖pᵢ − pⱼ‖ − ‖qᵢ − qⱼ‖ |`.
pub fn distance_score(p_i: &Point, p_j: &Point, q_i: &Point, q_j: &Point) -> f64 {
    ((p_i - p_j).norm() - (q_i - q_j).norm()).abs()
}

/// Geometric consistency score of two correspondences.
pub fn pairwise_distance_score(
    c_i: &Correspondence,
    c_j: &Correspondence,
    src: &SemanticPointCloud,
    tgt: &SemanticPointCloud,
) -> f64 {
    distance_score(c_i.source_point(src), c_j.source_point(src), c_i.target_point(tgt), c_j.target_point(tgt))
}

/// `𝟙(d² / σ_d² − 1 ≤ 0)`.
pub fn is_compatible(d: f64, sigma_d: f64) -> bool {
    d * d / (sigma_d * sigma_d) - 1.0 <= 0.0
}

/// `exp(−d² / 2σ_d²)`.
pub fn consistency_weight(d: f64, sigma_d: f64) -> f64 {
    libm::exp(-(d * d) / (2.0 * sigma_d * sigma_d))
}

/// Pairwise scores over the whole correspondence set: distances, binary
/// compatibility, Gaussian weights, and cached rows of `M′ · W` for the
/// global-aware term.
#[derive(Debug)]
pub struct PairTable {
    sigma_d: f64,
    src: Vec<Point>,
    tgt: Vec<Point>,
    dense: Option<(Vec<f64>, Vec<f64>)>,
    support: Vec<Vec<usize>>,
    weighted_support: Vec<OnceCell<Vec<f64>>>,
}

impl PairTable {
    pub fn new(
        global: &[Correspondence],
        src: &SemanticPointCloud,
        tgt: &SemanticPointCloud,
        sigma_d: f64,
    ) -> Result<Self> {
        let (src_pts, tgt_pts) = global.iter().map(|c| (*c.source_point(src), *c.target_point(tgt))).unzip();
        Self::from_endpoints(src_pts, tgt_pts, sigma_d)
    }

    pub fn from_endpoints(src: Vec<Point>, tgt: Vec<Point>, sigma_d: f64) -> Result<Self> {
        if !(sigma_d > 0.0) {
            return Err(Error::InvalidArgument(format!("sigma_d must be positive, got {sigma_d}")));
        }
        if src.len() != tgt.len() {
            return Err(Error::LengthMismatch { expected: src.len(), found: tgt.len() });
        }
        let w = src.len();
        let mut table = Self {
            sigma_d,
            src,
            tgt,
            dense: None,
            support: Vec::with_capacity(w),
            weighted_support: (0..w).map(|_| OnceCell::new()).collect(),
        };
        if w <= DENSE_LIMIT {
            let mut dist = vec![0.0; w * w];
            let mut weight = vec![0.0; w * w];
            for x in 0..w {
                weight[x * w + x] = consistency_weight(0.0, sigma_d);
                for y in x + 1..w {
                    let d = table.compute_distance(x, y);
                    let wt = consistency_weight(d, sigma_d);
                    dist[x * w + y] = d;
                    dist[y * w + x] = d;
                    weight[x * w + y] = wt;
                    weight[y * w + x] = wt;
                }
            }
            table.dense = Some((dist, weight));
        }
        table.support = (0..w).map(|x| (0..w).filter(|&y| table.compatible(x, y)).collect()).collect();
        Ok(table)
    }

    fn compute_distance(&self, x: usize, y: usize) -> f64 {
        distance_score(&self.src[x], &self.src[y], &self.tgt[x], &self.tgt[y])
    }

    pub fn len(&self) -> usize {
        self.src.len()
    }

    pub fn is_empty(&self) -> bool {
        self.src.is_empty()
    }

    pub fn sigma_d(&self) -> f64 {
        self.sigma_d
    }

    pub fn distance(&self, x: usize, y: usize) -> f64 {
        match &self.dense {
            Some((dist, _)) => dist[x * self.len() + y],
            None if x == y => 0.0,
            None => self.compute_distance(x, y),
        }
    }

    pub fn compatible(&self, x: usize, y: usize) -> bool {
        is_compatible(self.distance(x, y), self.sigma_d)
    }

    pub fn weight(&self, x: usize, y: usize) -> f64 {
        match &self.dense {
            Some((_, weight)) => weight[x * self.len() + y],
            None => consistency_weight(self.distance(x, y), self.sigma_d),
        }
    }

    /// Indices compatible with `x`, ascending; always contains `x`.
    pub fn support(&self, x: usize) -> &[usize] {
        &self.support[x]
    }

    /// The full `w × w` weight matrix.
    pub fn weight_matrix(&self) -> DMatrix<f64> {
        let w = self.len();
        DMatrix::from_fn(w, w, |x, y| self.weight(x, y))
    }

    /// Row `a` of `M′ · W`: `Σ_{x ∈ S_a} W[x, ·]`.
    fn weighted_support_row(&self, a: usize) -> &[f64] {
        self.weighted_support[a].get_or_init(|| {
            let w = self.len();
            let mut row = vec![0.0; w];
            for &x in &self.support[a] {
                match &self.dense {
                    Some((_, weight)) => {
                        row.iter_mut().zip(&weight[x * w..(x + 1) * w]).for_each(|(r, v)| *r += v);
                    }
                    None => row.iter_mut().enumerate().for_each(|(y, r)| *r += self.weight(x, y)),
                }
            }
            row
        })
    }

    /// `(M′ W M′ᵀ)[a, b] = Σ_{x ∈ S_a} Σ_{y ∈ S_b} W[x, y]`.
    pub fn second_order(&self, a: usize, b: usize) -> f64 {
        let row = self.weighted_support_row(a);
        self.support[b].iter().map(|&y| row[y]).sum()
    }
}

/// Geometric half of the workspace for one group.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometricConsistency {
    pub m_g: DMatrix<bool>,
    pub m_g_prime: DMatrix<bool>,
    pub m_g_star: DMatrix<f64>,
}

/// Local, local-to-global and global-aware geometric consistency of the
/// group members (indices into the global set).
pub fn geometric_consistency(members: &[usize], table: &PairTable) -> GeometricConsistency {
    let k = members.len();
    let w = table.len();
    let m_g = DMatrix::from_fn(k, k, |i, j| table.compatible(members[i], members[j]));
    let m_g_prime = DMatrix::from_fn(k, w, |i, x| table.compatible(members[i], x));
    let m_g_star = DMatrix::from_fn(k, k, |i, j| {
        if m_g[(i, j)] {
            table.second_order(members[i], members[j])
        } else {
            0.0
        }
    });
    GeometricConsistency { m_g, m_g_prime, m_g_star }
}

/// Label with the largest share among points within `radius` of point
/// `index` (the point itself included); ties go to the smallest label id.
pub fn neighborhood_majority_label(
    cloud: &SemanticPointCloud,
    neighbors: &NeighborIndex,
    index: usize,
    radius: f64,
) -> Result<Label> {
    let mut counts: BTreeMap<Label, usize> = BTreeMap::new();
    for i in neighbors.radius_query(cloud.point(index), radius)? {
        *counts.entry(cloud.label(i)).or_default() += 1;
    }
    // BTreeMap iterates labels ascending; keep the first maximum.
    let mut best = (cloud.label(index), 0usize);
    for (label, count) in counts {
        if count > best.1 {
            best = (label, count);
        }
    }
    Ok(best.0)
}

/// Neighborhood-majority labels of both endpoints of every global
/// correspondence.
#[derive(Clone, Debug, PartialEq)]
pub struct MajorityLabels {
    pub src: Vec<Label>,
    pub tgt: Vec<Label>,
}

impl MajorityLabels {
    pub fn compute(
        global: &[Correspondence],
        src: &SemanticPointCloud,
        src_index: &NeighborIndex,
        tgt: &SemanticPointCloud,
        tgt_index: &NeighborIndex,
        radius: f64,
    ) -> Result<Self> {
        let mut src_cache: BTreeMap<usize, Label> = BTreeMap::new();
        let mut tgt_cache: BTreeMap<usize, Label> = BTreeMap::new();
        let mut out = Self { src: Vec::with_capacity(global.len()), tgt: Vec::with_capacity(global.len()) };
        for c in global {
            let s = match src_cache.get(&c.src_index) {
                Some(l) => *l,
                None => {
                    let l = neighborhood_majority_label(src, src_index, c.src_index, radius)?;
                    src_cache.insert(c.src_index, l);
                    l
                }
            };
            let t = match tgt_cache.get(&c.tgt_index) {
                Some(l) => *l,
                None => {
                    let l = neighborhood_majority_label(tgt, tgt_index, c.tgt_index, radius)?;
                    tgt_cache.insert(c.tgt_index, l);
                    l
                }
            };
            out.src.push(s);
            out.tgt.push(t);
        }
        Ok(out)
    }
}

/// Semantic half of the workspace for one group.
#[derive(Clone, Debug, PartialEq)]
pub struct SemanticConsistency {
    pub m_s: DMatrix<bool>,
    pub m_s_prime: DMatrix<bool>,
    pub m_s_star: DMatrix<bool>,
}

/// Tight (per-point), neighborhood and combined semantic consistency. Entry
/// `(i, j)` holds when the ordered label pairs `(sᵖᵢ, sᵖⱼ)` and `(s^qᵢ, s^qⱼ)`
/// are equal; the combined matrix is the elementwise OR of the two.
pub fn semantic_consistency(
    members: &[usize],
    global: &[Correspondence],
    majority: &MajorityLabels,
) -> SemanticConsistency {
    let k = members.len();
    let tight: Vec<bool> = members.iter().map(|&m| global[m].src_label == global[m].tgt_label).collect();
    let loose: Vec<bool> = members.iter().map(|&m| majority.src[m] == majority.tgt[m]).collect();
    let m_s = DMatrix::from_fn(k, k, |i, j| tight[i] && tight[j]);
    let m_s_prime = DMatrix::from_fn(k, k, |i, j| loose[i] && loose[j]);
    let m_s_star = m_s.zip_map(&m_s_prime, |a, b| a || b);
    SemanticConsistency { m_s, m_s_prime, m_s_star }
}

/// All consistency matrices of one local group.
#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyWorkspace {
    pub m_g: DMatrix<bool>,
    pub m_g_prime: DMatrix<bool>,
    pub m_g_star: DMatrix<f64>,
    pub m_s: DMatrix<bool>,
    pub m_s_prime: DMatrix<bool>,
    pub m_s_star: DMatrix<bool>,
    pub m_star: DMatrix<f64>,
}

impl ConsistencyWorkspace {
    pub fn compute(
        members: &[usize],
        table: &PairTable,
        global: &[Correspondence],
        majority: &MajorityLabels,
        mode: SemanticMode,
    ) -> Self {
        let geo = geometric_consistency(members, table);
        let sem = semantic_consistency(members, global, majority);
        let k = members.len();
        let mask = match mode {
            SemanticMode::Off => DMatrix::from_element(k, k, true),
            SemanticMode::Tight => sem.m_s.clone(),
            SemanticMode::Loose => sem.m_s_star.clone(),
        };
        let m_star = geo.m_g_star.zip_map(&mask, |v, keep| if keep { v } else { 0.0 });
        Self {
            m_g: geo.m_g,
            m_g_prime: geo.m_g_prime,
            m_g_star: geo.m_g_star,
            m_s: sem.m_s,
            m_s_prime: sem.m_s_prime,
            m_s_star: sem.m_s_star,
            m_star,
        }
    }
}

/// Top-scoring members of one group with their normalized weights.
#[derive(Clone, Debug, PartialEq)]
pub struct RetainedSet {
    /// Indices into the global correspondence set.
    pub members: Vec<usize>,
    /// Positions within the group (columns of the workspace).
    pub columns: Vec<usize>,
    pub scores: Vec<f64>,
    /// Scores divided by their sum.
    pub weights: Vec<f64>,
}

/// Keeps the `keep` largest positive entries of row `seed_row` of `M*`
/// (ties by ascending column) and normalizes them into weights.
pub fn filter_group(
    workspace: &ConsistencyWorkspace,
    members: &[usize],
    keep: usize,
    seed_row: usize,
) -> Result<RetainedSet> {
    let k = members.len();
    if workspace.m_star.nrows() != k || seed_row >= k {
        return Err(Error::InvalidArgument(format!("seed row {seed_row} invalid for a group of {k}")));
    }
    if keep < 3 || keep > k {
        return Err(Error::InvalidArgument(format!("keep must lie in 3..={k}, got {keep}")));
    }
    let row = workspace.m_star.row(seed_row);
    let mut columns: Vec<usize> = (0..k).filter(|&j| row[j] > 0.0).collect();
    if columns.is_empty() {
        return Err(Error::AllZeroRow);
    }
    columns.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
    columns.truncate(keep);
    let scores: Vec<f64> = columns.iter().map(|&j| row[j]).collect();
    let total: f64 = scores.iter().sum();
    Ok(RetainedSet {
        members: columns.iter().map(|&j| members[j]).collect(),
        weights: scores.iter().map(|s| s / total).collect(),
        scores,
        columns,
    })
}

/// A filtered local group together with its candidate transform.
#[derive(Clone, Debug, PartialEq)]
pub struct FilteredGroup {
    /// Position of the group in the [`LocalGroupSet`].
    pub group_index: usize,
    pub retained: RetainedSet,
    pub candidate: RigidTransform,
}

/// Shared, read-only state for filtering every group of one run.
#[derive(Debug)]
pub struct ConsistencyContext<'a> {
    pub global: &'a [Correspondence],
    pub src: &'a SemanticPointCloud,
    pub tgt: &'a SemanticPointCloud,
    pub table: PairTable,
    pub majority: MajorityLabels,
    pub semantic: SemanticMode,
}

impl<'a> ConsistencyContext<'a> {
    pub fn new(
        global: &'a [Correspondence],
        src: &'a SemanticPointCloud,
        src_index: &NeighborIndex,
        tgt: &'a SemanticPointCloud,
        tgt_index: &NeighborIndex,
        sigma_d: f64,
        semantic_radius: f64,
        semantic: SemanticMode,
    ) -> Result<Self> {
        let table = PairTable::new(global, src, tgt, sigma_d)?;
        Self::with_table(global, src, src_index, tgt, tgt_index, table, semantic_radius, semantic)
    }

    /// Reuses a table already built over `global`.
    pub fn with_table(
        global: &'a [Correspondence],
        src: &'a SemanticPointCloud,
        src_index: &NeighborIndex,
        tgt: &'a SemanticPointCloud,
        tgt_index: &NeighborIndex,
        table: PairTable,
        semantic_radius: f64,
        semantic: SemanticMode,
    ) -> Result<Self> {
        if table.len() != global.len() {
            return Err(Error::LengthMismatch { expected: global.len(), found: table.len() });
        }
        let majority = MajorityLabels::compute(global, src, src_index, tgt, tgt_index, semantic_radius)?;
        Ok(Self { global, src, tgt, table, majority, semantic })
    }

    pub fn workspace(&self, members: &[usize]) -> ConsistencyWorkspace {
        ConsistencyWorkspace::compute(members, &self.table, self.global, &self.majority, self.semantic)
    }

    /// Filters one group and solves for its candidate. `Ok(None)` when the
    /// group has to be dropped (empty seed row or degenerate geometry).
    pub fn estimate_group(&self, group_index: usize, members: &[usize], keep: usize) -> Result<Option<FilteredGroup>> {
        let ws = self.workspace(members);
        let retained = match filter_group(&ws, members, keep.min(members.len()), 0) {
            Ok(r) => r,
            Err(Error::AllZeroRow) => return Ok(None),
            Err(e) => return Err(e),
        };
        let (src_pts, tgt_pts): (Vec<Point>, Vec<Point>) = retained
            .members
            .iter()
            .map(|&m| (*self.global[m].source_point(self.src), *self.global[m].target_point(self.tgt)))
            .unzip();
        match weighted_rigid_solve(&src_pts, &tgt_pts, &retained.weights) {
            Ok(candidate) => Ok(Some(FilteredGroup { group_index, retained, candidate })),
            Err(Error::DegenerateConfiguration(_)) => Ok(None),
            Err(e) => Err(e),
        }
    }
}

/// Runs consistency filtering and the weighted solve on every group, in group
/// order, dropping groups that cannot produce a candidate.
pub fn estimate_local_transforms(
    groups: &LocalGroupSet,
    ctx: &ConsistencyContext<'_>,
    keep: usize,
) -> Result<Vec<FilteredGroup>> {
    let mut out = Vec::with_capacity(groups.groups.len());
    for (l, members) in groups.groups.iter().enumerate() {
        if let Some(fg) = ctx.estimate_group(l, members, keep)? {
            out.push(fg);
        }
    }
    if out.is_empty() {
        return Err(Error::NoCandidates);
    }
    Ok(out)
}
