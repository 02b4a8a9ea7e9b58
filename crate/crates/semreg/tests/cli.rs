use std::path::{Path, PathBuf};

use clap::Parser;
use semreg::cli::{register_report, Cli, Command, RegisterArgs};
use semreg::exit;
use semreg::report::RunReport;

fn run(args: &[&str]) -> i32 {
    semreg::cli::run(std::iter::once("semreg").chain(args.iter().copied()))
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A small street scene with ground truth, written once per test.
fn generate(dir: &Path, seed: u64) -> PathBuf {
    let out = dir.join(format!("scene-{seed}"));
    let seed = seed.to_string();
    let code = run(&["generate", "--seed", &seed, "--correspondences", "300", "--inlier-ratio", "0.2", "--output", arg(&out)]);
    assert_eq!(code, exit::OK);
    out
}

fn register_args(extra: &[&str]) -> RegisterArgs {
    let argv = std::iter::once("semreg").chain(std::iter::once("register")).chain(extra.iter().copied());
    match Cli::try_parse_from(argv).unwrap().command {
        Command::Register(a) => a,
        _ => unreachable!(),
    }
}

#[test]
fn generate_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let scene = generate(dir.path(), 3);
    for f in ["source.ply", "target.ply", "gt.txt", "correspondences.csv", "scene.toml"] {
        assert!(scene.join(f).is_file(), "missing {f}");
    }
}

#[test]
fn synthetic_match_registration_succeeds_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let scene = generate(dir.path(), 11);
    let (src, tgt, gt) = (scene.join("source.ply"), scene.join("target.ply"), scene.join("gt.txt"));
    let argv = [
        "--source", arg(&src), "--target", arg(&tgt), "--gt", arg(&gt), "--synthetic-match", "--match-count", "500", "--seed", "5",
    ];
    let a = register_report(&register_args(&argv)).unwrap();
    let m = a.metrics.expect("metrics with --gt");
    assert!(m.success_easy, "RE {} deg, TE {} cm", m.re_deg, m.te_cm);

    let b = register_report(&register_args(&argv)).unwrap();
    let strip = |r: &RunReport| RunReport { timings_ms: Default::default(), ..r.clone() };
    assert_eq!(strip(&a).to_json(), strip(&b).to_json());
}

#[test]
fn report_echoes_resolved_config_and_round_trips_through_eval() {
    let dir = tempfile::tempdir().unwrap();
    let scene = generate(dir.path(), 12);
    let report = dir.path().join("report.json");
    let code = run(&[
        "register",
        "--source", arg(&scene.join("source.ply")),
        "--target", arg(&scene.join("target.ply")),
        "--correspondences", arg(&scene.join("correspondences.csv")),
        "--gt", arg(&scene.join("gt.txt")),
        "--sigma-d", "0.4",
        "--variant", "no-ground-gate",
        "--output", arg(&report),
    ]);
    assert_eq!(code, exit::OK);
    let parsed: RunReport = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(parsed.schema, semreg::report::SCHEMA);
    assert_eq!(parsed.config.sigma_d, 0.4);
    assert_eq!(parsed.config.tau_1, 0.4 * 0.4);
    assert!(!parsed.config.ground_gate);
    assert_eq!(parsed.variant.as_deref(), Some("no-ground-gate"));
    assert!(parsed.timings_ms.contains_key("total"));

    let eval_out = dir.path().join("eval.json");
    let code = run(&["eval", "--estimate", arg(&report), "--gt", arg(&scene.join("gt.txt")), "--output", arg(&eval_out)]);
    assert_eq!(code, exit::OK);
    let eval: serde_json::Value = serde_json::from_slice(&std::fs::read(&eval_out).unwrap()).unwrap();
    let metrics = parsed.metrics.unwrap();
    assert!((eval["re_deg"].as_f64().unwrap() - metrics.re_deg).abs() < 1e-9);
    assert!((eval["te_cm"].as_f64().unwrap() - metrics.te_cm).abs() < 1e-9);
}

#[test]
fn config_file_values_are_used_and_flags_override_them() {
    let dir = tempfile::tempdir().unwrap();
    let scene = generate(dir.path(), 13);
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "sigma_d = 0.5\nnum_seeds = 80\n").unwrap();
    let argv = |extra: &'static [&'static str]| {
        let mut v: Vec<String> = [
            "--source", arg(&scene.join("source.ply")),
            "--target", arg(&scene.join("target.ply")),
            "--correspondences", arg(&scene.join("correspondences.csv")),
            "--config", arg(&cfg),
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        v.extend(extra.iter().map(|s| s.to_string()));
        v
    };
    let plain = argv(&[]);
    let r = register_report(&register_args(&plain.iter().map(String::as_str).collect::<Vec<_>>())).unwrap();
    assert_eq!((r.config.sigma_d, r.config.num_seeds, r.config.tau_1), (0.5, 80, 0.25));
    let flagged = argv(&["--num-seeds", "40"]);
    let r = register_report(&register_args(&flagged.iter().map(String::as_str).collect::<Vec<_>>())).unwrap();
    assert_eq!(r.config.num_seeds, 40);
}

#[test]
fn exit_codes_follow_the_failure_class() {
    let dir = tempfile::tempdir().unwrap();
    let scene = generate(dir.path(), 14);
    let (src, tgt, corr) = (scene.join("source.ply"), scene.join("target.ply"), scene.join("correspondences.csv"));

    assert_eq!(run(&["register", "--bogus"]), exit::USAGE);
    assert_eq!(run(&["register", "--source", arg(&src), "--target", arg(&tgt)]), exit::USAGE);
    let bad_sigma = ["register", "--source", arg(&src), "--target", arg(&tgt), "--correspondences", arg(&corr), "--sigma-d=-1"];
    assert_eq!(run(&bad_sigma), exit::USAGE);

    let missing = dir.path().join("missing.ply");
    assert_eq!(run(&["register", "--source", arg(&missing), "--target", arg(&tgt), "--correspondences", arg(&corr)]), exit::INPUT);

    let garbage = dir.path().join("garbage.ply");
    std::fs::write(&garbage, "not a ply file\n").unwrap();
    assert_eq!(run(&["register", "--source", arg(&garbage), "--target", arg(&tgt), "--correspondences", arg(&corr)]), exit::INPUT);

    let bad_config = dir.path().join("bad.toml");
    std::fs::write(&bad_config, "sigma_d = \"wide\"\n").unwrap();
    let with_bad_config =
        ["register", "--source", arg(&src), "--target", arg(&tgt), "--correspondences", arg(&corr), "--config", arg(&bad_config)];
    assert_eq!(run(&with_bad_config), exit::INPUT);

    // Disjoint label sets leave nothing to register.
    let relabeled = dir.path().join("relabeled.ply");
    let cloud = semreg::io::load_point_cloud(&tgt, None).unwrap();
    let shifted: Vec<_> = cloud.labels().iter().map(|l| semreg_core::Label(l.0 + 1000)).collect();
    let relabeled_cloud = semreg_core::SemanticPointCloud::from_labeled(cloud.points().to_vec(), shifted).unwrap();
    semreg::io::save_point_cloud(&relabeled, &relabeled_cloud).unwrap();
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "src_index,tgt_index\n").unwrap();
    assert_eq!(run(&["register", "--source", arg(&src), "--target", arg(&relabeled), "--correspondences", arg(&empty)]), exit::EMPTY_OVERLAP);

    assert_eq!(run(&["--help"]), exit::OK);
}

#[test]
fn ablate_emits_one_row_per_condition_variant_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = dir.path().join("sweep.toml");
    std::fs::write(
        &sweep,
        "seeds = [1, 2, 3]\nvariants = [\"full\"]\n\n[[conditions]]\nname = \"baseline\"\ncorrespondences = 300\ninlier_ratio = 0.2\n",
    )
    .unwrap();
    let csv_path = dir.path().join("rows.csv");
    assert_eq!(run(&["ablate", "--sweep", arg(&sweep), "--output", arg(&csv_path)]), exit::OK);
    let mut reader = csv::Reader::from_path(&csv_path).unwrap();
    let rows: Vec<semreg::sweep::Row> = reader.deserialize().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows.iter().map(|r| r.seed).collect::<Vec<_>>(), [1, 2, 3]);
    assert!(rows.iter().all(|r| r.condition == "baseline" && r.variant == "full" && r.error.is_empty()));
}

#[test]
fn ablate_rejects_unknown_variant() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = dir.path().join("sweep.toml");
    std::fs::write(&sweep, "seeds = [1]\nvariants = [\"turbo\"]\n\n[[conditions]]\nname = \"x\"\n").unwrap();
    assert_eq!(run(&["ablate", "--sweep", arg(&sweep)]), exit::INPUT);
}
