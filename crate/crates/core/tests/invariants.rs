use nalgebra::Matrix3;
use proptest::prelude::*;
use semreg_core::consistency::{filter_group, ConsistencyWorkspace, MajorityLabels, PairTable};
use semreg_core::correspond::{group_knn, top_scores};
use semreg_core::eval::{recall, CorrespondenceMetrics};
use semreg_core::ground::{fit_plane, secondary_ground_segmentation};
use semreg_core::labels::default_ground_labels;
use semreg_core::synth::{random_transform, rng};
use semreg_core::transform::weighted_rigid_solve;
use semreg_core::{Correspondence, Label, Point, SemanticMode, SemanticPointCloud};

fn point() -> impl Strategy<Value = Point> {
    (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64).prop_map(|(x, y, z)| Point::new(x, y, z))
}

fn pairs(max: usize) -> impl Strategy<Value = (Vec<Point>, Vec<Point>)> {
    prop::collection::vec((point(), point()), 3..max).prop_map(|v| v.into_iter().unzip())
}

fn is_rotation(r: &Matrix3<f64>) -> bool {
    (r.transpose() * r - Matrix3::identity()).amax() < 1e-9 && (r.determinant() - 1.0).abs() < 1e-9
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pair_table_is_symmetric_with_unit_diagonal((src, tgt) in pairs(40), sigma in 0.1..3.0f64) {
        let table = PairTable::from_endpoints(src, tgt, sigma).unwrap();
        let n = table.len();
        for x in 0..n {
            prop_assert_eq!(table.weight(x, x), 1.0);
            prop_assert!(table.compatible(x, x));
            prop_assert!(table.support(x).contains(&x));
            for y in 0..n {
                prop_assert_eq!(table.weight(x, y), table.weight(y, x));
                prop_assert_eq!(table.compatible(x, y), table.compatible(y, x));
                let w = table.weight(x, y);
                prop_assert!((0.0..=1.0).contains(&w));
                let brute: f64 = table.support(x).iter().flat_map(|&a| table.support(y).iter().map(move |&b| (a, b)))
                    .map(|(a, b)| table.weight(a, b)).sum();
                prop_assert!((table.second_order(x, y) - brute).abs() <= 1e-9 * brute.max(1.0));
            }
        }
    }

    #[test]
    fn filtered_weights_form_a_distribution((src, tgt) in pairs(30), sigma in 0.5..5.0f64, keep in 3usize..30) {
        let n = src.len();
        let cloud_src = SemanticPointCloud::from_labeled(src.clone(), vec![Label(1); n]).unwrap();
        let cloud_tgt = SemanticPointCloud::from_labeled(tgt.clone(), vec![Label(1); n]).unwrap();
        let global: Vec<Correspondence> = (0..n).map(|i| Correspondence::between(&cloud_src, &cloud_tgt, i, i).unwrap()).collect();
        let table = PairTable::from_endpoints(src, tgt, sigma).unwrap();
        let majority = MajorityLabels { src: vec![Label(1); n], tgt: vec![Label(1); n] };
        let members: Vec<usize> = (0..n).collect();
        let ws = ConsistencyWorkspace::compute(&members, &table, &global, &majority, SemanticMode::Loose);
        let keep = keep.min(n);
        let kept = filter_group(&ws, &members, keep, 0).unwrap();
        prop_assert!(kept.members.len() <= keep && !kept.members.is_empty());
        prop_assert!(kept.scores.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!((kept.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn solve_returns_a_rotation_and_ignores_weight_scale(
        (src, tgt) in pairs(30),
        scale in 0.01..100.0f64,
    ) {
        let w: Vec<f64> = (0..src.len()).map(|i| 1.0 + (i % 5) as f64).collect();
        let scaled: Vec<f64> = w.iter().map(|x| x * scale).collect();
        if let (Ok(a), Ok(b)) = (weighted_rigid_solve(&src, &tgt, &w), weighted_rigid_solve(&src, &tgt, &scaled)) {
            prop_assert!(is_rotation(a.rotation()));
            prop_assert!((a.rotation() - b.rotation()).amax() < 1e-9);
            prop_assert!((a.translation() - b.translation()).amax() < 1e-7);
        }
    }

    #[test]
    fn solve_is_equivariant_under_target_motion((src, tgt) in pairs(25), seed in 0u64..1000) {
        let w = vec![1.0; src.len()];
        let motion = random_transform(&mut rng(seed), 180.0, 5.0);
        let moved: Vec<Point> = tgt.iter().map(|q| motion.apply(q)).collect();
        if let (Ok(a), Ok(b)) = (weighted_rigid_solve(&src, &tgt, &w), weighted_rigid_solve(&src, &moved, &w)) {
            let expect = motion.compose(&a);
            prop_assert!((b.rotation() - expect.rotation()).amax() < 1e-7);
            prop_assert!((b.translation() - expect.translation()).amax() < 1e-6);
        }
    }

    #[test]
    fn transform_inverse_round_trips(seed in 0u64..10_000, p in point()) {
        let t = random_transform(&mut rng(seed), 180.0, 10.0);
        prop_assert!(is_rotation(t.rotation()));
        let back = t.inverse().apply(&t.apply(&p));
        prop_assert!((back - p).amax() < 1e-9);
    }

    #[test]
    fn top_scores_are_sorted_and_unique(scores in prop::collection::vec(-1.0..1.0f64, 0..60), count in 0usize..80) {
        let top = top_scores(&scores, count);
        prop_assert_eq!(top.len(), count.min(scores.len()));
        prop_assert!(top.windows(2).all(|w| scores[w[0]] > scores[w[1]] || (scores[w[0]] == scores[w[1]] && w[0] < w[1])));
    }

    #[test]
    fn groups_start_at_their_seed(points in prop::collection::vec(point(), 3..60), k in 1usize..10, seed_pick in 0usize..60) {
        let n = points.len();
        let cloud = SemanticPointCloud::from_labeled(points, vec![Label(1); n]).unwrap();
        let g: Vec<Correspondence> = (0..n).map(|i| Correspondence::between(&cloud, &cloud, i, i).unwrap()).collect();
        let k = k.min(n);
        let seed = seed_pick % n;
        let groups = group_knn(&g, &[seed], &cloud, k).unwrap();
        let group = &groups.groups[0];
        prop_assert_eq!(group.len(), k);
        prop_assert_eq!(group[0], seed);
        let mut sorted = group.clone();
        sorted.sort_unstable();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), k);
    }

    #[test]
    fn plane_normal_is_unit(points in prop::collection::vec(point(), 3..50)) {
        if let Ok(plane) = fit_plane(&points) {
            prop_assert!((plane.normal.norm() - 1.0).abs() < 1e-12);
            let c = plane.centroid;
            prop_assert!(plane.distance(&c) < 1e-9);
        }
    }

    #[test]
    fn ground_split_partitions_the_cloud(heights in prop::collection::vec(-0.5..3.0f64, 30..120), sigma_g in 0.05..1.0f64) {
        let n = heights.len();
        let points: Vec<Point> = heights.iter().enumerate().map(|(i, &z)| Point::new((i % 11) as f64, (i / 11) as f64, z)).collect();
        let labels: Vec<Label> = (0..n).map(|i| if i % 3 == 0 { Label(10) } else { Label(40) }).collect();
        let cloud = SemanticPointCloud::from_labeled(points, labels).unwrap();
        if let Ok(split) = secondary_ground_segmentation(&cloud, &default_ground_labels(), sigma_g) {
            let mut all: Vec<usize> = split.ground.iter().chain(&split.non_ground).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            prop_assert!(split.ground.iter().all(|&i| cloud.label(i) != Label(10)));
            prop_assert!(split.ground.iter().all(|&i| split.plane.distance(cloud.point(i)) < sigma_g));
        }
    }

    #[test]
    fn metrics_stay_in_unit_range(a in 0usize..50, b in 0usize..50, c in 0usize..50, outcomes in prop::collection::vec(any::<bool>(), 0..40)) {
        let hits = a.min(b).min(c);
        let m = CorrespondenceMetrics::from_counts(hits, b, c);
        for v in [m.ip, m.ir, m.f1] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!(m.f1 <= m.ip.max(m.ir) + 1e-15);
        let rr = recall(outcomes);
        prop_assert!((0.0..=1.0).contains(&rr));
    }
}
