//! Synthetic labeled street scenes, correspondence sets with known inliers,
//! and label corruption.
//!
//! All randomness comes from [`rng`]: ChaCha8 seeded through
//! `SeedableRng::seed_from_u64`. Its output stream is fixed by the ChaCha
//! specification, so a seed reproduces the same scene on every platform.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use nalgebra::{Rotation3, Unit, Vector3};
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::cloud::{Label, Point, SemanticPointCloud};
use crate::correspondence::Correspondence;
use crate::error::{Error, Result};
use crate::labels;
use crate::transform::RigidTransform;

/// The generator behind every seeded operation in this module.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Objects are never sampled with fewer points than this.
pub const MIN_OBJECT_POINTS: usize = 60;

/// Generated outliers sit at least this far (meters) from their true target.
pub const OUTLIER_MIN_RESIDUAL: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "lowercase"))]
pub enum Shape {
    /// Footprint sides from `size_range`, height from `height_range`.
    Box,
    /// Radius from `size_range`, height from `height_range`.
    Cylinder,
    /// Open thin cylinder; radius from `size_range`.
    Pole,
    /// Radius from `size_range`, resting on the ground.
    Sphere,
}

/// A family of identical-shape objects.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ObjectCluster {
    pub shape: Shape,
    pub label: Label,
    pub count: usize,
    pub size_range: [f64; 2],
    #[cfg_attr(feature = "serde", serde(default))]
    pub height_range: [f64; 2],
}

/// How objects are placed on the ground.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "lowercase"))]
pub enum Layout {
    /// Random positions with random yaw, avoiding footprint overlaps.
    Scattered,
    /// Evenly spaced along the x axis through the origin, no yaw.
    Row { spacing: f64 },
}

/// Distribution of ground samples over the square patch.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "lowercase"))]
pub enum GroundSampling {
    /// Constant density `point_density`.
    Uniform,
    /// Range from a sensor at the origin uniform in `[min_range, half
    /// diagonal]`, so density falls off as 1/range like a spinning LiDAR.
    /// The point count matches the uniform case.
    Radial { min_range: f64 },
}

/// Recipe for one synthetic scene.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SceneSpec {
    /// Side of the square ground patch, meters.
    pub ground_extent: f64,
    /// Slope of the ground about the y axis, degrees.
    pub ground_tilt: f64,
    pub object_clusters: Vec<ObjectCluster>,
    /// Surface sampling density, points per m².
    pub point_density: f64,
    /// Standard deviation of the Gaussian noise added to target coordinates.
    pub noise_sigma: f64,
    pub rng_seed: u64,
    pub layout: Layout,
    /// Half width of the road band along x; a sidewalk band of
    /// `sidewalk_width` follows on both sides, then terrain.
    pub road_half_width: f64,
    pub sidewalk_width: f64,
    pub ground_sampling: GroundSampling,
}

impl SceneSpec {
    /// About 20k points: ground bands, buildings, cars, poles, trunks and
    /// vegetation.
    pub fn street(seed: u64) -> Self {
        let cluster = |shape, label, count, size_range, height_range| ObjectCluster {
            shape,
            label,
            count,
            size_range,
            height_range,
        };
        Self {
            ground_extent: 50.0,
            ground_tilt: 0.0,
            object_clusters: vec![
                cluster(Shape::Box, labels::BUILDING, 4, [8.0, 16.0], [6.0, 12.0]),
                cluster(Shape::Box, labels::CAR, 8, [1.8, 4.5], [1.4, 1.8]),
                cluster(Shape::Pole, labels::POLE, 8, [0.1, 0.15], [4.0, 7.0]),
                cluster(Shape::Cylinder, labels::TRUNK, 6, [0.2, 0.4], [2.0, 4.0]),
                cluster(Shape::Sphere, labels::VEGETATION, 5, [1.0, 2.0], [0.0, 0.0]),
            ],
            point_density: 4.0,
            noise_sigma: 0.02,
            rng_seed: seed,
            layout: Layout::Scattered,
            road_half_width: 5.0,
            sidewalk_width: 3.0,
            ground_sampling: GroundSampling::Uniform,
        }
    }

    /// Flat ground with a row of identical spheres sharing one label.
    pub fn weak_geometry(seed: u64) -> Self {
        Self {
            ground_extent: 40.0,
            ground_tilt: 0.0,
            object_clusters: vec![ObjectCluster {
                shape: Shape::Sphere,
                label: labels::OTHER_STRUCTURE,
                count: 7,
                size_range: [2.0, 2.0],
                height_range: [0.0, 0.0],
            }],
            point_density: 5.0,
            noise_sigma: 0.02,
            rng_seed: seed,
            layout: Layout::Row { spacing: 6.0 },
            road_half_width: 5.0,
            sidewalk_width: 3.0,
            ground_sampling: GroundSampling::Uniform,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("ground_extent", self.ground_extent),
            ("point_density", self.point_density),
            ("road_half_width", self.road_half_width),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.noise_sigma >= 0.0) || !(self.sidewalk_width >= 0.0) {
            return Err(Error::InvalidArgument("noise_sigma and sidewalk_width must be non-negative".into()));
        }
        if !(self.ground_tilt.abs() < 90.0) {
            return Err(Error::InvalidArgument(format!("ground_tilt must be below 90 degrees, got {}", self.ground_tilt)));
        }
        if let GroundSampling::Radial { min_range } = self.ground_sampling {
            if !(min_range >= 0.0 && min_range < self.ground_extent / 2.0) {
                return Err(Error::InvalidArgument(format!("min_range must lie in [0, extent / 2), got {min_range}")));
            }
        }
        if let Layout::Row { spacing } = self.layout {
            if !(spacing > 0.0) {
                return Err(Error::InvalidArgument(format!("row spacing must be positive, got {spacing}")));
            }
        }
        for c in &self.object_clusters {
            let [lo, hi] = c.size_range;
            if c.count == 0 || !(lo > 0.0 && lo <= hi) {
                return Err(Error::InvalidArgument(format!("object cluster {} has an invalid count or size", c.label)));
            }
            let [hl, hh] = c.height_range;
            if c.shape != Shape::Sphere && !(hl > 0.0 && hl <= hh) {
                return Err(Error::InvalidArgument(format!("object cluster {} has an invalid height", c.label)));
            }
        }
        Ok(())
    }

    /// Labels the generator can emit.
    pub fn label_universe(&self) -> BTreeSet<Label> {
        let mut u: BTreeSet<Label> = [labels::ROAD, labels::SIDEWALK, labels::TERRAIN].into_iter().collect();
        u.extend(self.object_clusters.iter().map(|c| c.label));
        u
    }
}

/// A source scan, its transformed and noisy copy, and the ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenePair {
    pub source: SemanticPointCloud,
    pub target: SemanticPointCloud,
    /// Maps source coordinates onto target coordinates.
    pub gt: RigidTransform,
    pub gt_overlap_labels: BTreeSet<Label>,
    /// Target index of each source point's true counterpart.
    pub counterpart: Vec<Option<usize>>,
    /// Points generated on the ground surface.
    pub source_ground: Vec<bool>,
    pub target_ground: Vec<bool>,
    /// Up direction of the source ground.
    pub ground_normal: Vector3<f64>,
    /// For row layouts: a point on the row axis and its unit direction, in
    /// source coordinates.
    pub row_axis: Option<(Point, Vector3<f64>)>,
}

struct Sampled {
    points: Vec<Point>,
    labels: Vec<Label>,
    ground: Vec<bool>,
}

fn uniform(rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

fn surface_count(area: f64, density: f64) -> usize {
    (libm::round(area * density) as usize).max(MIN_OBJECT_POINTS)
}

/// Surface points of one object in its local frame (base center at the
/// origin, z up).
fn sample_object(rng: &mut ChaCha8Rng, shape: Shape, dims: (f64, f64, f64), density: f64) -> Vec<Point> {
    let (a, b, h) = dims;
    match shape {
        Shape::Box => {
            // Faces: ±x sides, ±y sides, top.
            let areas = [b * h, b * h, a * h, a * h, a * b];
            let total: f64 = areas.iter().sum();
            let n = surface_count(total, density);
            (0..n)
                .map(|_| {
                    let mut pick = rng.random::<f64>() * total;
                    let mut face = 0;
                    while face < 4 && pick >= areas[face] {
                        pick -= areas[face];
                        face += 1;
                    }
                    let (u, v, w) = (rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, rng.random::<f64>());
                    match face {
                        0 => Point::new(a / 2.0, u * b, w * h),
                        1 => Point::new(-a / 2.0, u * b, w * h),
                        2 => Point::new(u * a, b / 2.0, w * h),
                        3 => Point::new(u * a, -b / 2.0, w * h),
                        _ => Point::new(u * a, v * b, h),
                    }
                })
                .collect()
        }
        Shape::Cylinder | Shape::Pole => {
            let side = TAU * a * h;
            let top = if shape == Shape::Cylinder { PI * a * a } else { 0.0 };
            let n = surface_count(side + top, density);
            (0..n)
                .map(|_| {
                    let theta = rng.random::<f64>() * TAU;
                    if rng.random::<f64>() * (side + top) < side {
                        Point::new(a * libm::cos(theta), a * libm::sin(theta), rng.random::<f64>() * h)
                    } else {
                        let r = a * libm::sqrt(rng.random::<f64>());
                        Point::new(r * libm::cos(theta), r * libm::sin(theta), h)
                    }
                })
                .collect()
        }
        Shape::Sphere => {
            let n = surface_count(4.0 * PI * a * a, density);
            (0..n)
                .map(|_| {
                    let z: f64 = rng.random_range(-1.0..1.0);
                    let theta = rng.random::<f64>() * TAU;
                    let s = libm::sqrt(1.0 - z * z);
                    Point::new(a * s * libm::cos(theta), a * s * libm::sin(theta), a + a * z)
                })
                .collect()
        }
    }
}

fn object_dims(rng: &mut ChaCha8Rng, c: &ObjectCluster) -> (f64, f64, f64) {
    match c.shape {
        Shape::Box => (uniform(rng, c.size_range), uniform(rng, c.size_range), uniform(rng, c.height_range)),
        Shape::Cylinder | Shape::Pole => {
            let r = uniform(rng, c.size_range);
            (r, r, uniform(rng, c.height_range))
        }
        Shape::Sphere => {
            let r = uniform(rng, c.size_range);
            (r, r, 2.0 * r)
        }
    }
}

fn footprint_radius(shape: Shape, dims: (f64, f64, f64)) -> f64 {
    match shape {
        Shape::Box => libm::hypot(dims.0, dims.1) / 2.0,
        _ => dims.0,
    }
}

fn ground_label(spec: &SceneSpec, y: f64) -> Label {
    let y = y.abs();
    if y < spec.road_half_width {
        labels::ROAD
    } else if y < spec.road_half_width + spec.sidewalk_width {
        labels::SIDEWALK
    } else {
        labels::TERRAIN
    }
}

fn sample_scene(spec: &SceneSpec, rng: &mut ChaCha8Rng) -> Sampled {
    let e = spec.ground_extent;
    let n_ground = libm::round(e * e * spec.point_density) as usize;
    let mut out = Sampled { points: Vec::new(), labels: Vec::new(), ground: Vec::new() };
    let half = e / 2.0;
    for _ in 0..n_ground {
        let (x, y) = match spec.ground_sampling {
            GroundSampling::Uniform => ((rng.random::<f64>() - 0.5) * e, (rng.random::<f64>() - 0.5) * e),
            GroundSampling::Radial { min_range } => loop {
                let r = rng.random_range(min_range..half * core::f64::consts::SQRT_2);
                let theta = rng.random::<f64>() * TAU;
                let (x, y) = (r * libm::cos(theta), r * libm::sin(theta));
                if x.abs() <= half && y.abs() <= half {
                    break (x, y);
                }
            },
        };
        out.points.push(Point::new(x, y, 0.0));
        out.labels.push(ground_label(spec, y));
        out.ground.push(true);
    }

    let total_objects: usize = spec.object_clusters.iter().map(|c| c.count).sum();
    let mut placed: Vec<(f64, f64, f64)> = Vec::new();
    let mut slot = 0usize;
    for cluster in &spec.object_clusters {
        for _ in 0..cluster.count {
            let dims = object_dims(rng, cluster);
            let radius = footprint_radius(cluster.shape, dims);
            let (x, y, yaw) = match spec.layout {
                Layout::Row { spacing } => {
                    let x = (slot as f64 - (total_objects as f64 - 1.0) / 2.0) * spacing;
                    (x, 0.0, 0.0)
                }
                Layout::Scattered => {
                    let half = 0.45 * e;
                    let mut pos = (0.0, 0.0);
                    for _ in 0..200 {
                        pos = (rng.random_range(-half..half), rng.random_range(-half..half));
                        let clear = placed
                            .iter()
                            .all(|&(px, py, pr)| libm::hypot(px - pos.0, py - pos.1) > pr + radius + 0.5);
                        if clear {
                            break;
                        }
                    }
                    (pos.0, pos.1, rng.random::<f64>() * TAU)
                }
            };
            slot += 1;
            placed.push((x, y, radius));
            let yaw_rot = Rotation3::from_axis_angle(&Vector3::z_axis(), yaw);
            for p in sample_object(rng, cluster.shape, dims, spec.point_density) {
                out.points.push(yaw_rot * p + Vector3::new(x, y, 0.0));
                out.labels.push(cluster.label);
                out.ground.push(false);
            }
        }
    }

    if spec.ground_tilt != 0.0 {
        let tilt = Rotation3::from_axis_angle(&Vector3::y_axis(), spec.ground_tilt.to_radians());
        out.points.iter_mut().for_each(|p| *p = tilt * *p);
    }
    out
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        );
        let n: f64 = v.norm();
        if n > 1e-9 {
            return v / n;
        }
    }
}

/// Draws a transform with rotation angle uniform in `[0, max_deg]` about a
/// uniformly random axis and translation of length uniform in `[0, max_m]`
/// along a uniformly random direction.
pub fn random_transform(rng: &mut ChaCha8Rng, max_deg: f64, max_m: f64) -> RigidTransform {
    let axis = random_unit(rng);
    let angle = rng.random::<f64>() * max_deg.to_radians();
    let dir = random_unit(rng);
    let len = rng.random::<f64>() * max_m;
    RigidTransform::from_axis_angle(&axis, angle, dir * len)
}

/// Samples a scene, moves it by a random transform of at most
/// `magnitude = (degrees, meters)`, shuffles the point order and adds
/// Gaussian noise to the target.
pub fn generate_scene_pair(spec: &SceneSpec, magnitude: (f64, f64)) -> Result<ScenePair> {
    spec.validate()?;
    let mut rng = rng(spec.rng_seed);
    let scene = sample_scene(spec, &mut rng);
    let gt = random_transform(&mut rng, magnitude.0, magnitude.1);
    let n = scene.points.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut counterpart = vec![None; n];
    let mut tgt_points = Vec::with_capacity(n);
    let mut tgt_labels = Vec::with_capacity(n);
    let mut target_ground = Vec::with_capacity(n);
    for (t, &s) in order.iter().enumerate() {
        let mut q = gt.apply(&scene.points[s]);
        if spec.noise_sigma > 0.0 {
            for c in q.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *c += spec.noise_sigma * z;
            }
        }
        tgt_points.push(q);
        tgt_labels.push(scene.labels[s]);
        target_ground.push(scene.ground[s]);
        counterpart[s] = Some(t);
    }
    let universe = spec.label_universe();
    let source = SemanticPointCloud::new(scene.points, scene.labels, universe.clone())?;
    let target = SemanticPointCloud::new(tgt_points, tgt_labels, universe)?;
    let gt_overlap_labels = source.label_set().intersection(&target.label_set()).copied().collect();
    let tilt = Rotation3::from_axis_angle(&Vector3::y_axis(), spec.ground_tilt.to_radians());
    let row_axis = match spec.layout {
        Layout::Row { .. } => {
            let height = spec
                .object_clusters
                .first()
                .filter(|c| c.shape == Shape::Sphere)
                .map_or(0.0, |c| c.size_range[0]);
            Some((tilt * Point::new(0.0, 0.0, height), tilt * Vector3::x()))
        }
        Layout::Scattered => None,
    };
    Ok(ScenePair {
        source,
        target,
        gt,
        gt_overlap_labels,
        counterpart,
        source_ground: scene.ground,
        target_ground,
        ground_normal: tilt * Vector3::z(),
        row_axis,
    })
}

/// Options of [`make_correspondences_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutlierMix {
    /// Share of outliers whose two endpoints carry the same true label.
    pub same_label_fraction: f64,
    pub min_residual: f64,
}

impl Default for OutlierMix {
    fn default() -> Self {
        Self { same_label_fraction: 0.5, min_residual: OUTLIER_MIN_RESIDUAL }
    }
}

/// `total` correspondences between non-ground points, of which
/// `round(inlier_ratio · total)` pair a source point with its true
/// counterpart. Returns the shuffled set and its inlier mask.
pub fn make_correspondences(
    pair: &ScenePair,
    total: usize,
    inlier_ratio: f64,
    seed: u64,
) -> Result<(Vec<Correspondence>, Vec<bool>)> {
    make_correspondences_with(pair, total, inlier_ratio, seed, OutlierMix::default())
}

pub fn make_correspondences_with(
    pair: &ScenePair,
    total: usize,
    inlier_ratio: f64,
    seed: u64,
    mix: OutlierMix,
) -> Result<(Vec<Correspondence>, Vec<bool>)> {
    if !(0.0..=1.0).contains(&inlier_ratio) || !(0.0..=1.0).contains(&mix.same_label_fraction) {
        return Err(Error::InvalidArgument(format!("ratios must lie in [0, 1], got {inlier_ratio}")));
    }
    let mut rng = rng(seed);
    let src = &pair.source;
    let tgt = &pair.target;
    let src_pool: Vec<usize> = (0..src.len()).filter(|&i| !pair.source_ground[i] && pair.counterpart[i].is_some()).collect();
    let tgt_pool: Vec<usize> = (0..tgt.len()).filter(|&j| !pair.target_ground[j]).collect();
    let n_in = libm::round(inlier_ratio * total as f64) as usize;
    if src_pool.len() < n_in || (total > n_in && (src_pool.is_empty() || tgt_pool.is_empty())) {
        return Err(Error::TooFewPoints(format!(
            "{} non-ground source points cannot supply {n_in} inliers of {total}",
            src_pool.len()
        )));
    }
    let mut by_label: BTreeMap<Label, Vec<usize>> = BTreeMap::new();
    for &j in &tgt_pool {
        by_label.entry(tgt.label(j)).or_default().push(j);
    }

    let mut set: Vec<(Correspondence, bool)> = Vec::with_capacity(total);
    for a in index::sample(&mut rng, src_pool.len(), n_in) {
        let i = src_pool[a];
        let j = pair.counterpart[i].expect("pool holds matched points");
        set.push((Correspondence::between(src, tgt, i, j)?, true));
    }
    let mut attempts = 0usize;
    while set.len() < total {
        attempts += 1;
        if attempts > 1000 * total.max(1) {
            return Err(Error::TooFewPoints("no admissible outlier pairs".into()));
        }
        let i = src_pool[rng.random_range(0..src_pool.len())];
        let label = src.label(i);
        let same = rng.random::<f64>() < mix.same_label_fraction;
        let j = if same {
            match by_label.get(&label) {
                Some(c) => c[rng.random_range(0..c.len())],
                None => continue,
            }
        } else {
            let j = tgt_pool[rng.random_range(0..tgt_pool.len())];
            if tgt.label(j) == label {
                continue;
            }
            j
        };
        if (pair.gt.apply(src.point(i)) - tgt.point(j)).norm() <= mix.min_residual {
            continue;
        }
        set.push((Correspondence::between(src, tgt, i, j)?, false));
    }
    set.shuffle(&mut rng);
    Ok(set.into_iter().unzip())
}

/// Copies the labels currently stored in the clouds onto the correspondences.
pub fn relabel_correspondences(
    set: &[Correspondence],
    src: &SemanticPointCloud,
    tgt: &SemanticPointCloud,
) -> Result<Vec<Correspondence>> {
    set.iter()
        .map(|c| {
            let fresh = Correspondence::between(src, tgt, c.src_index, c.tgt_index)?;
            Ok(Correspondence { feature_distance: c.feature_distance, ..fresh })
        })
        .collect()
}

/// Gives exactly `round(fraction · n)` points a label drawn uniformly from
/// the other labels of the universe. Clouds whose universe has a single
/// label are returned unchanged.
pub fn corrupt_labels(cloud: &SemanticPointCloud, fraction: f64, seed: u64) -> SemanticPointCloud {
    let universe: Vec<Label> = cloud.universe().iter().copied().collect();
    if universe.len() < 2 {
        return cloud.clone();
    }
    let fraction = fraction.clamp(0.0, 1.0);
    let mut rng = rng(seed);
    let n = cloud.len();
    let mut labels = cloud.labels().to_vec();
    for i in index::sample(&mut rng, n, libm::round(fraction * n as f64) as usize) {
        let old = labels[i];
        let others: Vec<Label> = universe.iter().copied().filter(|&l| l != old).collect();
        labels[i] = others[rng.random_range(0..others.len())];
    }
    cloud.with_labels(labels).expect("labels drawn from the universe")
}

/// Object points relabeled as ground by [`corrupt_ground_labels`] lie at
/// least this high (meters) above the ground plane.
pub const ELEVATED_REGION_MIN_HEIGHT: f64 = 3.0;

/// Ground / non-ground label confusion with `round(rate · g)` errors for a
/// scene with `g` true ground points, split evenly between the two
/// directions:
/// - missed ground: uniformly random ground points get a random non-ground
///   label of the universe;
/// - false ground: one spatially coherent elevated region (the object points
///   nearest to a random anchor among those at least
///   [`ELEVATED_REGION_MIN_HEIGHT`] above the ground, like a tree canopy read
///   as terrain) gets random ground labels.
///
/// Coordinates are untouched. Fails when the universe lacks either class or
/// too few elevated points exist.
pub fn corrupt_ground_labels(
    pair: &ScenePair,
    rate: f64,
    ground_labels: &BTreeSet<Label>,
    seed: u64,
) -> Result<SemanticPointCloud> {
    let cloud = &pair.source;
    let (ground_pool, other_pool): (Vec<Label>, Vec<Label>) =
        cloud.universe().iter().copied().partition(|l| ground_labels.contains(l));
    if ground_pool.is_empty() || other_pool.is_empty() {
        return Err(Error::InvalidArgument("label universe needs ground and non-ground classes".into()));
    }
    let mut rng = rng(seed);
    let ground: Vec<usize> = (0..cloud.len()).filter(|&i| pair.source_ground[i]).collect();
    let errors = libm::round(rate.clamp(0.0, 1.0) * ground.len() as f64) as usize;
    let missed = errors / 2;
    let false_ground = errors - missed;
    let mut labels = cloud.labels().to_vec();
    for a in index::sample(&mut rng, ground.len(), missed) {
        labels[ground[a]] = other_pool[rng.random_range(0..other_pool.len())];
    }
    if false_ground > 0 {
        let elevated: Vec<usize> = (0..cloud.len())
            .filter(|&i| !pair.source_ground[i] && pair.ground_normal.dot(cloud.point(i)) >= ELEVATED_REGION_MIN_HEIGHT)
            .collect();
        if elevated.len() < false_ground {
            return Err(Error::TooFewPoints(format!(
                "{} elevated points cannot supply {false_ground} false ground labels",
                elevated.len()
            )));
        }
        let points: Vec<Point> = elevated.iter().map(|&i| *cloud.point(i)).collect();
        let index = crate::neighbors::NeighborIndex::new(&points)?;
        let anchor = points[rng.random_range(0..points.len())];
        for k in index.knn_query(&anchor, false_ground)? {
            labels[elevated[k]] = ground_pool[rng.random_range(0..ground_pool.len())];
        }
    }
    cloud.with_labels(labels)
}

/// Correspondences consistent with a wrong transform that maps every object
/// of a row onto itself: the ground truth composed with a rotation by one
/// angle in `[30°, 150°]` about the row axis. Each decoy pairs a non-ground
/// source point with the target point nearest to its rotated image and is
/// farther than `min_residual` from its true target. Mimics descriptor
/// confusion on rotationally symmetric structures.
pub fn make_symmetric_decoys(
    pair: &ScenePair,
    count: usize,
    min_residual: f64,
    seed: u64,
) -> Result<(Vec<Correspondence>, RigidTransform)> {
    let (origin, dir) =
        pair.row_axis.ok_or_else(|| Error::InvalidArgument("scene has no row axis for symmetric decoys".into()))?;
    let mut rng = rng(seed);
    let angle = rng.random_range(30f64..150f64).to_radians();
    let rot = Rotation3::from_axis_angle(&Unit::new_normalize(dir), angle);
    let about_axis = RigidTransform::new(*rot.matrix(), origin - rot * origin)?;
    let decoy = pair.gt.compose(&about_axis);

    let src = &pair.source;
    let tgt = &pair.target;
    let tgt_pool: Vec<usize> = (0..tgt.len()).filter(|&j| !pair.target_ground[j]).collect();
    let tgt_points: Vec<Point> = tgt_pool.iter().map(|&j| *tgt.point(j)).collect();
    let index = crate::neighbors::NeighborIndex::new(&tgt_points)?;
    let mut candidates: Vec<usize> = (0..src.len()).filter(|&i| !pair.source_ground[i]).collect();
    candidates.shuffle(&mut rng);
    let mut out = Vec::with_capacity(count);
    for i in candidates {
        if out.len() == count {
            break;
        }
        let j = tgt_pool[index.knn_query(&decoy.apply(src.point(i)), 1)?[0]];
        if (pair.gt.apply(src.point(i)) - tgt.point(j)).norm() > min_residual {
            out.push(Correspondence::between(src, tgt, i, j)?);
        }
    }
    if out.len() < count {
        return Err(Error::TooFewPoints(format!("only {} of {count} decoys available", out.len())));
    }
    Ok((out, decoy))
}
