mod oracle;

use nalgebra::{DMatrix, Matrix3, Vector3};
use proptest::prelude::*;
use semreg_core::consistency::PairTable;
use semreg_core::correspond::{match_descriptors, spectral_scores, DescriptorSet};
use semreg_core::eval::rotation_error;
use semreg_core::neighbors::NeighborIndex;
use semreg_core::synth::{random_transform, rng};
use semreg_core::transform::weighted_rigid_solve;
use semreg_core::verify::truncated_distance;
use semreg_core::{Label, Point, SemanticPointCloud};

fn point() -> impl Strategy<Value = Point> {
    (-20.0..20.0f64, -20.0..20.0f64, -20.0..20.0f64).prop_map(|(x, y, z)| Point::new(x, y, z))
}

/// Grid-snapped points so that exact distance ties actually occur.
fn grid_point() -> impl Strategy<Value = Point> {
    (-4i32..4, -4i32..4, -2i32..2).prop_map(|(x, y, z)| Point::new(x as f64, y as f64, z as f64))
}

fn unlabeled(points: Vec<Point>) -> SemanticPointCloud {
    let n = points.len();
    SemanticPointCloud::from_labeled(points, vec![Label(1); n]).unwrap()
}

#[test]
fn consistency_chain_matches_dense_reference() {
    for seed in 0..60 {
        let check = oracle::chain::check_instance(seed);
        assert_eq!(check.mismatches, 0, "instance {seed}");
        assert!(check.max_abs_diff <= 1e-12, "instance {seed}: {}", check.max_abs_diff);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn knn_matches_exhaustive_sort(points in prop::collection::vec(grid_point(), 1..120), center in grid_point(), k in 1usize..20) {
        let k = k.min(points.len());
        let index = NeighborIndex::new(&points).unwrap();
        prop_assert_eq!(index.knn_query(&center, k).unwrap(), oracle::brute_knn(&points, &center, k));
    }

    #[test]
    fn radius_matches_exhaustive_scan(points in prop::collection::vec(point(), 1..150), center in point(), radius in 0.5..15.0f64) {
        let index = NeighborIndex::new(&points).unwrap();
        prop_assert_eq!(index.radius_query(&center, radius).unwrap(), oracle::brute_radius(&points, &center, radius));
    }

    #[test]
    fn weighted_solve_matches_quaternion_oracle(
        seed in 0u64..10_000,
        src in prop::collection::vec(point(), 4..40),
        noise in 0.0..0.3f64,
    ) {
        let mut r = rng(seed);
        let t = random_transform(&mut r, 180.0, 10.0);
        let weights: Vec<f64> = (0..src.len()).map(|i| 0.1 + ((seed as usize * 31 + i * 17) % 13) as f64).collect();
        let tgt: Vec<Point> = src
            .iter()
            .enumerate()
            .map(|(i, p)| t.apply(p) + Vector3::new(noise * (i as f64).sin(), noise * (i as f64 * 1.3).cos(), -noise * 0.5))
            .collect();
        let est = weighted_rigid_solve(&src, &tgt, &weights).unwrap();
        let (r_ref, t_ref) = oracle::horn_solve(&src, &tgt, &weights);
        prop_assert!((est.rotation() - r_ref).amax() < 1e-8, "rotation {}", (est.rotation() - r_ref).amax());
        prop_assert!((est.translation() - t_ref).amax() < 1e-8);
    }

    #[test]
    fn rotation_error_matches_quaternion_angle(seed in 0u64..100_000) {
        let mut r = rng(seed);
        let a = random_transform(&mut r, 180.0, 0.0);
        let b = random_transform(&mut r, 180.0, 0.0);
        let got = rotation_error(a.rotation(), b.rotation());
        let want = oracle::quaternion_angle_deg(a.rotation(), b.rotation());
        prop_assert!((got - want).abs() < 1e-9, "{} vs {}", got, want);
    }

    #[test]
    fn mutual_nn_matches_exhaustive(
        a in prop::collection::vec(prop::collection::vec(-3i32..3, 3), 1..40),
        b in prop::collection::vec(prop::collection::vec(-3i32..3, 3), 1..40),
    ) {
        let to_f = |v: &Vec<Vec<i32>>| v.iter().map(|r| r.iter().map(|&x| x as f64).collect::<Vec<f64>>()).collect::<Vec<_>>();
        let (fa, fb) = (to_f(&a), to_f(&b));
        let src = unlabeled(vec![Point::zeros(); fa.len()]);
        let tgt = unlabeled(vec![Point::zeros(); fb.len()]);
        let got = match_descriptors(
            &DescriptorSet::from_rows(&fa).unwrap(),
            &DescriptorSet::from_rows(&fb).unwrap(),
            &src,
            &tgt,
            usize::MAX,
        )
        .unwrap();
        let want = oracle::brute_mutual_nn(&fa, &fb);
        let got: Vec<(usize, usize, f64)> = got.iter().map(|c| (c.src_index, c.tgt_index, c.feature_distance.unwrap())).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn truncated_distance_is_clamped_identity(d in 0.0..10.0f64, sigma in 0.05..3.0f64) {
        let td = truncated_distance(&Point::zeros(), &Point::new(d, 0.0, 0.0), sigma);
        prop_assert_eq!(td, d.clamp(0.5 * sigma, 2.5 * sigma));
    }
}

#[test]
fn spectral_scores_match_dense_eigenvector() {
    for seed in 0..25u64 {
        let mut r = rng(seed);
        let t = random_transform(&mut r, 90.0, 3.0);
        let n = 40;
        let src: Vec<Point> = (0..n).map(|i| Point::new((i % 7) as f64, (i / 7) as f64 * 1.3, (i % 3) as f64 * 0.7)).collect();
        let tgt: Vec<Point> = src
            .iter()
            .enumerate()
            .map(|(i, p)| if i % 4 == 0 { Point::new(i as f64 * 0.37 % 5.0, 2.0, -(i as f64) * 0.11) } else { t.apply(p) })
            .collect();
        let table = PairTable::from_endpoints(src, tgt, 0.6).unwrap();
        let affinity = DMatrix::from_fn(n, n, |i, j| if i != j && table.compatible(i, j) { table.weight(i, j) } else { 0.0 });
        let (_, want) = oracle::principal_eigenvector(&affinity);
        let got = spectral_scores(&table);
        let err = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-4, "seed {seed}: {err}");
    }
}

#[test]
fn horn_oracle_self_check() {
    let r = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
    let src = vec![Point::new(1.0, 0.0, 0.0), Point::new(0.0, 2.0, 0.0), Point::new(0.0, 0.0, 3.0), Point::new(1.0, 1.0, 1.0)];
    let tgt: Vec<Point> = src.iter().map(|p| r * p + Vector3::new(1.0, 2.0, 3.0)).collect();
    let (r_ref, t_ref) = oracle::horn_solve(&src, &tgt, &[1.0; 4]);
    assert!((r_ref - r).amax() < 1e-12);
    assert!((t_ref - Vector3::new(1.0, 2.0, 3.0)).amax() < 1e-12);
    assert!((oracle::quaternion_angle_deg(&r, &Matrix3::identity()) - 90.0).abs() < 1e-12);
}
