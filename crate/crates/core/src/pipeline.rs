//! The full registration pipeline, from labeled scans to a refined transform.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::cloud::{Label, SemanticPointCloud};
use crate::config::PipelineConfig;
use crate::consistency::{estimate_local_transforms, ConsistencyContext, FilteredGroup, PairTable};
use crate::correspond::{group_knn, match_descriptors_among, spectral_sample_table, DescriptorSet, LocalGroupSet};
use crate::correspondence::{validate_all, Correspondence};
use crate::error::{Error, Result};
use crate::ground::{label_only_segmentation, secondary_ground_segmentation, GroundSplit};
use crate::neighbors::NeighborIndex;
use crate::transform::RigidTransform;
use crate::verify::{filtered_union, refine, select_best, GroundNormals, VerificationReport};

/// Where the initial correspondences come from.
#[derive(Clone, Copy, Debug)]
pub enum Matching<'a> {
    /// Precomputed pairs, indexed into the full clouds. Pairs touching
    /// removed points are dropped during preprocessing.
    Given(&'a [Correspondence]),
    /// Mutual nearest neighbors between per-point descriptors.
    Descriptors { src: &'a DescriptorSet, tgt: &'a DescriptorSet },
}

/// Pipeline stages in execution order, reported to observers as each begins.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Ground,
    Overlap,
    Match,
    Sample,
    Group,
    Consistency,
    Verify,
    Refine,
    Done,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Ground,
        Stage::Overlap,
        Stage::Match,
        Stage::Sample,
        Stage::Group,
        Stage::Consistency,
        Stage::Verify,
        Stage::Refine,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ground => "ground",
            Stage::Overlap => "overlap",
            Stage::Match => "match",
            Stage::Sample => "sample",
            Stage::Group => "group",
            Stage::Consistency => "consistency",
            Stage::Verify => "verify",
            Stage::Refine => "refine",
            Stage::Done => "done",
        }
    }
}

/// Sizes of the intermediate sets.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StageCounts {
    pub source_points: usize,
    pub target_points: usize,
    pub source_ground: usize,
    pub target_ground: usize,
    pub overlap_labels: usize,
    pub correspondences: usize,
    pub seeds: usize,
    pub candidates: usize,
    pub gate_passed: usize,
    pub refined_inliers: usize,
}

/// Ground splits of both scans when segmentation succeeded on each.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundPair {
    pub source: GroundSplit,
    pub target: GroundSplit,
}

/// Everything a run produced.
#[derive(Clone, Debug, PartialEq)]
pub struct Registration {
    pub transform: RigidTransform,
    /// The correspondence set the consistency stages ran on.
    pub correspondences: Vec<Correspondence>,
    pub overlap_labels: BTreeSet<Label>,
    pub ground: Option<GroundPair>,
    pub groups: LocalGroupSet,
    pub candidates: Vec<FilteredGroup>,
    pub verification: VerificationReport,
    pub counts: StageCounts,
}

impl Registration {
    /// Refined inlier set as correspondences.
    pub fn refined_inliers(&self) -> Vec<Correspondence> {
        self.verification.refined_inliers.iter().map(|&i| self.correspondences[i]).collect()
    }
}

pub fn register(
    src: &SemanticPointCloud,
    tgt: &SemanticPointCloud,
    matching: Matching<'_>,
    config: &PipelineConfig,
) -> Result<Registration> {
    register_observed(src, tgt, matching, config, &mut |_| {})
}

fn segment(cloud: &SemanticPointCloud, config: &PipelineConfig) -> Result<Option<GroundSplit>> {
    let labels = config.ground_label_set();
    let split = if config.secondary_segmentation {
        secondary_ground_segmentation(cloud, &labels, config.sigma_g)
    } else {
        label_only_segmentation(cloud, &labels)
    };
    match split {
        Ok(s) => Ok(Some(s)),
        Err(Error::NoGroundPoints | Error::DegenerateConfiguration(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Runs every stage, calling `observer` as each one starts and once more
/// with [`Stage::Done`] on success.
pub fn register_observed(
    src: &SemanticPointCloud,
    tgt: &SemanticPointCloud,
    matching: Matching<'_>,
    config: &PipelineConfig,
    observer: &mut dyn FnMut(Stage),
) -> Result<Registration> {
    config.validate()?;
    if src.is_empty() || tgt.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if let Matching::Given(g) = matching {
        validate_all(g, src, tgt)?;
    }
    let mut counts = StageCounts { source_points: src.len(), target_points: tgt.len(), ..StageCounts::default() };

    observer(Stage::Ground);
    let ground = match (segment(src, config)?, segment(tgt, config)?) {
        (Some(source), Some(target)) => Some(GroundPair { source, target }),
        _ => None,
    };
    let (src_ground, tgt_ground) = match &ground {
        Some(g) => (g.source.ground_mask(src.len()), g.target.ground_mask(tgt.len())),
        None => (alloc::vec![false; src.len()], alloc::vec![false; tgt.len()]),
    };
    counts.source_ground = src_ground.iter().filter(|&&b| b).count();
    counts.target_ground = tgt_ground.iter().filter(|&&b| b).count();

    observer(Stage::Overlap);
    let non_ground_labels = |cloud: &SemanticPointCloud, mask: &[bool]| -> BTreeSet<Label> {
        (0..cloud.len()).filter(|&i| !mask[i]).map(|i| cloud.label(i)).collect()
    };
    let src_labels = non_ground_labels(src, &src_ground);
    let overlap: BTreeSet<Label> = src_labels.intersection(&non_ground_labels(tgt, &tgt_ground)).copied().collect();
    counts.overlap_labels = overlap.len();
    let (src_keep, tgt_keep) = if config.preprocess {
        if overlap.is_empty() {
            return Err(Error::EmptyOverlap);
        }
        let keep = |cloud: &SemanticPointCloud, mask: &[bool]| -> Vec<bool> {
            (0..cloud.len()).map(|i| !mask[i] && overlap.contains(&cloud.label(i))).collect()
        };
        (keep(src, &src_ground), keep(tgt, &tgt_ground))
    } else {
        (alloc::vec![true; src.len()], alloc::vec![true; tgt.len()])
    };

    observer(Stage::Match);
    let mut global: Vec<Correspondence> = match matching {
        Matching::Given(g) => g.iter().filter(|c| src_keep[c.src_index] && tgt_keep[c.tgt_index]).copied().collect(),
        Matching::Descriptors { src: sd, tgt: td } => {
            let pick = |keep: &[bool]| -> Vec<usize> { (0..keep.len()).filter(|&i| keep[i]).collect() };
            match_descriptors_among(sd, td, src, tgt, &pick(&src_keep), &pick(&tgt_keep), config.cap)?
        }
    };
    global.truncate(config.cap);
    counts.correspondences = global.len();
    if global.len() < 3 {
        return Err(Error::NoCandidates);
    }

    observer(Stage::Sample);
    let table = PairTable::new(&global, src, tgt, config.sigma_d)?;
    let seeds = spectral_sample_table(&table, config.num_seeds);
    counts.seeds = seeds.len();

    observer(Stage::Group);
    let k = config.group_size.min(global.len());
    let groups = group_knn(&global, &seeds, src, k)?;

    observer(Stage::Consistency);
    let src_index = NeighborIndex::new(src.points())?;
    let tgt_index = NeighborIndex::new(tgt.points())?;
    let ctx = ConsistencyContext::with_table(
        &global,
        src,
        &src_index,
        tgt,
        &tgt_index,
        table,
        config.semantic_radius,
        config.semantic,
    )?;
    let candidates = estimate_local_transforms(&groups, &ctx, config.keep_per_group.min(k))?;
    counts.candidates = candidates.len();

    observer(Stage::Verify);
    let union = filtered_union(&candidates);
    let normals = match (&ground, config.ground_gate) {
        (Some(g), true) => Some(GroundNormals { source: g.source.plane.normal, target: g.target.plane.normal }),
        _ => None,
    };
    let selection =
        select_best(&candidates, &union, &global, src, tgt, normals.as_ref(), config.sigma_theta, config.sigma_d)?;
    counts.gate_passed = selection.gate_passed.iter().filter(|&&b| b).count();

    observer(Stage::Refine);
    let refinement = refine(&selection.best, &global, src, tgt, config.tau_1);
    let verification = VerificationReport::new(selection, refinement);
    counts.refined_inliers = verification.refined_inlier_count;

    observer(Stage::Done);
    Ok(Registration {
        transform: verification.refined,
        correspondences: global,
        overlap_labels: overlap,
        ground,
        groups,
        candidates,
        verification,
        counts,
    })
}
