//! Command-line front end. See [`crate::error::exit`] for exit codes.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use semreg_core::eval::{rotation_error, translation_error, Thresholds};
use semreg_core::pipeline::{register_observed, Matching};
use semreg_core::synth::{
    corrupt_labels, generate_scene_pair, make_correspondences, make_symmetric_decoys, relabel_correspondences,
    SceneSpec,
};
use semreg_core::{PipelineConfig, RigidTransform, Variant};
use serde::Serialize;

use crate::config::{load_config, parse_variant, ConfigOverrides};
use crate::error::{exit, CliError, Result};
use crate::io;
use crate::matching::{synthetic_matches, SyntheticMatch};
use crate::report::{MetricBlock, RunReport, StageTimer};
use crate::sweep::{self, Preset, SweepSpec};

#[derive(Parser, Debug)]
#[command(name = "semreg", version, about = "Semantic-geometric point cloud registration")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Register a source cloud onto a target cloud and print a JSON report.
    Register(RegisterArgs),
    /// Write a synthetic scene pair with ground truth and correspondences.
    Generate(GenerateArgs),
    /// Compare an estimated transform with ground truth.
    Eval(EvalArgs),
    /// Run an ablation sweep and write one CSV row per run.
    Ablate(AblateArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct SharedArgs {
    /// Flat TOML file with pipeline settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// full, geometric-only, semantic-hard, no-preprocess, no-ground-gate or
    /// label-only-ground.
    #[arg(long, value_parser = parse_variant)]
    pub variant: Option<Variant>,
    /// Output file (directory for `generate`); standard output otherwise.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RegisterArgs {
    /// Source cloud (.ply or KITTI .bin).
    #[arg(long)]
    pub source: PathBuf,
    /// KITTI label file for the source.
    #[arg(long)]
    pub source_labels: Option<PathBuf>,
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long)]
    pub target_labels: Option<PathBuf>,
    /// Binary DESC descriptor file, one row per source point.
    #[arg(long)]
    pub source_desc: Option<PathBuf>,
    #[arg(long)]
    pub target_desc: Option<PathBuf>,
    /// CSV of precomputed `src_index,tgt_index` pairs.
    #[arg(long, conflicts_with_all = ["source_desc", "target_desc", "synthetic_match"])]
    pub correspondences: Option<PathBuf>,
    /// Build correspondences from the ground truth instead of descriptors.
    #[arg(long, requires = "gt")]
    pub synthetic_match: bool,
    #[arg(long, default_value_t = 1000)]
    pub match_count: usize,
    #[arg(long, default_value_t = 0.9)]
    pub outlier_ratio: f64,
    /// Ground-truth pose (KITTI 12-number line); adds a metric block.
    #[arg(long)]
    pub gt: Option<PathBuf>,
    #[command(flatten)]
    pub shared: SharedArgs,
    #[command(flatten)]
    pub overrides: ConfigOverrides,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long, value_enum, default_value = "street")]
    pub preset: PresetArg,
    /// TOML scene recipe used instead of a preset.
    #[arg(long)]
    pub scene: Option<PathBuf>,
    #[arg(long, default_value_t = 180.0)]
    pub max_rotation: f64,
    #[arg(long, default_value_t = 10.0)]
    pub max_translation: f64,
    #[arg(long, default_value_t = 1000)]
    pub correspondences: usize,
    #[arg(long, default_value_t = 0.1)]
    pub inlier_ratio: f64,
    #[arg(long, default_value_t = 0.0)]
    pub label_corruption: f64,
    #[arg(long, default_value_t = 0)]
    pub decoys: usize,
    #[command(flatten)]
    pub shared: SharedArgs,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
pub enum PresetArg {
    Street,
    WeakGeometry,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Street => Preset::Street,
            PresetArg::WeakGeometry => Preset::WeakGeometry,
        }
    }
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Pose file or a JSON run report.
    #[arg(long)]
    pub estimate: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    #[command(flatten)]
    pub shared: SharedArgs,
}

#[derive(Args, Debug)]
pub struct AblateArgs {
    /// TOML sweep description.
    #[arg(long)]
    pub sweep: PathBuf,
    #[command(flatten)]
    pub shared: SharedArgs,
    #[command(flatten)]
    pub overrides: ConfigOverrides,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Diagnostics go to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::USAGE } else { exit::OK };
        }
    };
    match execute(&cli.command) {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("semreg: error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command) -> Result<()> {
    match command {
        Command::Register(a) => cmd_register(a),
        Command::Generate(a) => cmd_generate(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Ablate(a) => cmd_ablate(a),
    }
}

fn resolve_config(shared: &SharedArgs, overrides: &ConfigOverrides) -> Result<PipelineConfig> {
    let file = shared.config.as_deref().map(load_config).transpose()?;
    overrides.resolve(file, shared.variant)
}

fn emit(output: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match output {
        Some(p) => io::write_bytes(p, bytes),
        None => std::io::stdout().write_all(bytes).map_err(|e| CliError::io("<stdout>", e)),
    }
}

fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("plain data");
    s.push('\n');
    s.into_bytes()
}

/// Runs the pipeline and builds the report; shared with tests.
pub fn register_report(a: &RegisterArgs) -> Result<RunReport> {
    let config = resolve_config(&a.shared, &a.overrides)?;
    let src = io::load_point_cloud(&a.source, a.source_labels.as_deref())?;
    let tgt = io::load_point_cloud(&a.target, a.target_labels.as_deref())?;
    let gt = a.gt.as_deref().map(io::load_pose).transpose()?;

    let given;
    let descriptors;
    let matching = if let Some(path) = &a.correspondences {
        given = io::load_correspondences(path, &src, &tgt)?;
        Matching::Given(&given)
    } else if a.synthetic_match {
        let gt = gt.as_ref().ok_or_else(|| CliError::Usage("--synthetic-match needs --gt".into()))?;
        let opts = SyntheticMatch {
            count: a.match_count,
            outlier_ratio: a.outlier_ratio,
            inlier_radius: config.sigma_d / 2.0,
            excluded_labels: config.ground_label_set(),
            seed: a.shared.seed.unwrap_or(0),
        };
        given = synthetic_matches(&src, &tgt, gt, &opts)?;
        Matching::Given(&given)
    } else {
        let (Some(sd), Some(td)) = (&a.source_desc, &a.target_desc) else {
            return Err(CliError::Usage(
                "need --source-desc and --target-desc, --correspondences, or --synthetic-match".into(),
            ));
        };
        descriptors = (io::load_descriptors(sd)?, io::load_descriptors(td)?);
        for (set, cloud, path) in [(&descriptors.0, &src, sd), (&descriptors.1, &tgt, td)] {
            if set.len() != cloud.len() {
                return Err(CliError::LengthMismatch {
                    what: format!("descriptors {}", path.display()),
                    expected: cloud.len(),
                    found: set.len(),
                });
            }
        }
        Matching::Descriptors { src: &descriptors.0, tgt: &descriptors.1 }
    };

    let mut timer = StageTimer::default();
    let reg = register_observed(&src, &tgt, matching, &config, &mut |s| timer.observe(s))
        .map_err(|source| CliError::Pipeline { stage: timer.current(), source })?;
    let mut report = RunReport::new(&reg, &config);
    report.variant = a.shared.variant.map(|v| v.name().to_string());
    report.seed = a.shared.seed;
    report.metrics = gt.map(|gt| MetricBlock::evaluate(&reg, &gt, &src, &tgt, config.sigma_d));
    report.timings_ms = timer.finish();
    Ok(report)
}

fn cmd_register(a: &RegisterArgs) -> Result<()> {
    let report = register_report(a)?;
    let c = &report.counts;
    eprintln!(
        "semreg: {} correspondences, {} seeds, {} candidates ({} passed the gate), {} refined inliers",
        c.correspondences, c.seeds, c.candidates, c.gate_passed, c.refined_inliers
    );
    emit(a.shared.output.as_deref(), &json(&report))
}

fn cmd_generate(a: &GenerateArgs) -> Result<()> {
    let dir = a.shared.output.as_deref().ok_or_else(|| CliError::Usage("generate needs --output <dir>".into()))?;
    let seed = a.shared.seed.unwrap_or(0);
    let spec = match &a.scene {
        Some(path) => {
            let bytes = io::read_bytes(path)?;
            let text = String::from_utf8_lossy(&bytes);
            let mut spec: SceneSpec =
                toml::from_str(&text).map_err(|e| CliError::malformed(path, e.span().map_or(0, |s| s.start as u64), e.message()))?;
            if a.shared.seed.is_some() {
                spec.rng_seed = seed;
            }
            spec
        }
        None => Preset::from(a.preset).spec(seed),
    };
    let pair = generate_scene_pair(&spec, (a.max_rotation, a.max_translation)).map_err(|e| CliError::Usage(e.to_string()))?;
    let (mut corr, _) = make_correspondences(&pair, a.correspondences, a.inlier_ratio, seed + sweep::CORRESPONDENCE_STREAM)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    if a.decoys > 0 {
        let (decoys, _) = make_symmetric_decoys(&pair, a.decoys, sweep::DECOY_MIN_RESIDUAL, seed + sweep::DECOY_STREAM)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        corr.extend(decoys);
    }
    let (src, tgt) = if a.label_corruption > 0.0 {
        (
            corrupt_labels(&pair.source, a.label_corruption, seed + sweep::SOURCE_CORRUPTION_STREAM),
            corrupt_labels(&pair.target, a.label_corruption, seed + sweep::TARGET_CORRUPTION_STREAM),
        )
    } else {
        (pair.source.clone(), pair.target.clone())
    };
    let corr = relabel_correspondences(&corr, &src, &tgt).map_err(|e| CliError::Usage(e.to_string()))?;

    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    io::save_point_cloud(&dir.join("source.ply"), &src)?;
    io::save_point_cloud(&dir.join("target.ply"), &tgt)?;
    io::save_pose(&dir.join("gt.txt"), &pair.gt)?;
    io::write_bytes(&dir.join("correspondences.csv"), &io::correspondences::encode(&corr))?;
    let scene = toml::to_string(&spec).expect("scene spec is plain data");
    io::write_bytes(&dir.join("scene.toml"), scene.as_bytes())?;
    eprintln!(
        "semreg: wrote {} + {} points and {} correspondences to {}",
        src.len(),
        tgt.len(),
        corr.len(),
        dir.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct EvalOutput {
    re_deg: f64,
    te_cm: f64,
    success_easy: bool,
    success_medium: bool,
    success_hard: bool,
}

fn load_estimate(path: &Path) -> Result<RigidTransform> {
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if !is_json {
        return io::load_pose(path);
    }
    let bytes = io::read_bytes(path)?;
    let report: RunReport = serde_json::from_slice(&bytes).map_err(|e| CliError::malformed(path, 0, e.to_string()))?;
    let flat: Vec<f64> = report.transform.iter().flatten().copied().collect();
    io::kitti::transform_from_rows(&flat).ok_or_else(|| CliError::malformed(path, 0, "report transform is not rigid"))
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let est = load_estimate(&a.estimate)?;
    let gt = io::load_pose(&a.gt)?;
    let re_deg = rotation_error(est.rotation(), gt.rotation());
    let te_cm = translation_error(est.translation(), gt.translation());
    let ok = |t: Thresholds| semreg_core::eval::registration_success(re_deg, te_cm, t);
    let out = EvalOutput {
        re_deg,
        te_cm,
        success_easy: ok(Thresholds::EASY),
        success_medium: ok(Thresholds::MEDIUM),
        success_hard: ok(Thresholds::HARD),
    };
    emit(a.shared.output.as_deref(), &json(&out))
}

fn cmd_ablate(a: &AblateArgs) -> Result<()> {
    let base = resolve_config(&SharedArgs { variant: None, ..a.shared.clone() }, &a.overrides)?;
    let bytes = io::read_bytes(&a.sweep)?;
    let text = String::from_utf8_lossy(&bytes);
    let mut spec = SweepSpec::parse(&text).map_err(|m| CliError::malformed(&a.sweep, 0, m))?;
    if let Some(seed) = a.shared.seed {
        spec.seeds = vec![seed];
    }
    if let Some(v) = a.shared.variant {
        spec.variants = vec![v.name().to_string()];
    }
    let rows = sweep::run_sweep(&spec, &base, &mut |r| {
        let status = if r.error.is_empty() { format!("rr={}", r.rr) } else { format!("error: {}", r.error) };
        eprintln!("semreg: {} / {} / seed {}: {status}", r.condition, r.variant, r.seed);
    })?;
    for (cond, variant, rr, rr_hard, n) in sweep::summarize(&rows) {
        eprintln!("semreg: {cond} / {variant}: RR {:.2}% (hard {:.2}%) over {n} runs", 100.0 * rr, 100.0 * rr_hard);
    }
    emit(a.shared.output.as_deref(), &sweep::to_csv(&rows))
}
