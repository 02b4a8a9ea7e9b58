//! Ablation sweeps over synthetic scenes: conditions × variants × seeds.
//!
//! Per (condition, seed) the scene uses `rng_seed = seed`; correspondences,
//! source and target label corruption, and decoys draw from `seed + 1000`,
//! `seed + 2000`, `seed + 3000` and `seed + 4000`.

use std::collections::BTreeMap;

use semreg_core::eval::{registration_success, Thresholds};
use semreg_core::pipeline::{register, Matching};
use semreg_core::synth::{
    corrupt_labels, generate_scene_pair, make_correspondences, make_symmetric_decoys, relabel_correspondences,
    ScenePair, SceneSpec,
};
use semreg_core::{Correspondence, PipelineConfig, SemanticPointCloud, Variant};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::report::MetricBlock;

pub const CORRESPONDENCE_STREAM: u64 = 1000;
pub const SOURCE_CORRUPTION_STREAM: u64 = 2000;
pub const TARGET_CORRUPTION_STREAM: u64 = 3000;
pub const DECOY_STREAM: u64 = 4000;
/// Decoys lie at least this far (meters) from their true target.
pub const DECOY_MIN_RESIDUAL: f64 = 0.6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Street,
    WeakGeometry,
}

impl Preset {
    pub fn spec(self, seed: u64) -> SceneSpec {
        match self {
            Preset::Street => SceneSpec::street(seed),
            Preset::WeakGeometry => SceneSpec::weak_geometry(seed),
        }
    }
}

fn default_preset() -> Preset {
    Preset::Street
}
fn default_rotation() -> f64 {
    180.0
}
fn default_translation() -> f64 {
    10.0
}
fn default_count() -> usize {
    1000
}
fn default_inlier_ratio() -> f64 {
    0.1
}

/// One scene recipe of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Condition {
    pub name: String,
    #[serde(default = "default_count")]
    pub correspondences: usize,
    #[serde(default = "default_inlier_ratio")]
    pub inlier_ratio: f64,
    /// Fraction of points of each cloud given a wrong label.
    #[serde(default)]
    pub label_corruption: f64,
    /// Symmetric decoy correspondences added on row layouts.
    #[serde(default)]
    pub decoys: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default = "default_preset")]
    pub preset: Preset,
    pub seeds: Vec<u64>,
    pub variants: Vec<String>,
    #[serde(default = "default_rotation")]
    pub max_rotation_deg: f64,
    #[serde(default = "default_translation")]
    pub max_translation_m: f64,
    pub conditions: Vec<Condition>,
}

impl SweepSpec {
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let spec: SweepSpec = toml::from_str(text).map_err(|e| e.to_string())?;
        spec.parsed_variants()?;
        if spec.conditions.is_empty() || spec.seeds.is_empty() {
            return Err("a sweep needs at least one condition and one seed".into());
        }
        Ok(spec)
    }

    pub fn parsed_variants(&self) -> std::result::Result<Vec<Variant>, String> {
        if self.variants.is_empty() {
            return Err("a sweep needs at least one variant".into());
        }
        self.variants.iter().map(|v| v.parse::<Variant>().map_err(|e| e.to_string())).collect()
    }
}

/// One CSV line. Metric fields are empty when the run failed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub condition: String,
    pub variant: String,
    pub seed: u64,
    pub correspondences: usize,
    pub inlier_ratio: f64,
    pub label_corruption: f64,
    /// 1 when registered under the easy thresholds, else 0.
    pub rr: f64,
    /// Same under the hard thresholds.
    pub rr_hard: f64,
    pub re_deg: Option<f64>,
    pub te_cm: Option<f64>,
    pub ip: Option<f64>,
    pub ir: Option<f64>,
    pub f1: Option<f64>,
    pub error: String,
}

struct Prepared {
    pair: ScenePair,
    src: SemanticPointCloud,
    tgt: SemanticPointCloud,
    correspondences: Vec<Correspondence>,
}

fn prepare(spec: &SweepSpec, cond: &Condition, seed: u64) -> semreg_core::Result<Prepared> {
    let pair = generate_scene_pair(&spec.preset.spec(seed), (spec.max_rotation_deg, spec.max_translation_m))?;
    let (mut corr, _) = make_correspondences(&pair, cond.correspondences, cond.inlier_ratio, seed + CORRESPONDENCE_STREAM)?;
    if cond.decoys > 0 {
        let (decoys, _) = make_symmetric_decoys(&pair, cond.decoys, DECOY_MIN_RESIDUAL, seed + DECOY_STREAM)?;
        corr.extend(decoys);
    }
    let (src, tgt) = if cond.label_corruption > 0.0 {
        (
            corrupt_labels(&pair.source, cond.label_corruption, seed + SOURCE_CORRUPTION_STREAM),
            corrupt_labels(&pair.target, cond.label_corruption, seed + TARGET_CORRUPTION_STREAM),
        )
    } else {
        (pair.source.clone(), pair.target.clone())
    };
    let correspondences = relabel_correspondences(&corr, &src, &tgt)?;
    Ok(Prepared { pair, src, tgt, correspondences })
}

/// Runs every row in (condition, seed, variant) order and returns them in
/// (condition, variant, seed) order. Failures become rows with an error.
pub fn run_sweep(spec: &SweepSpec, base: &PipelineConfig, progress: &mut dyn FnMut(&Row)) -> Result<Vec<Row>> {
    let variants = spec.parsed_variants().map_err(CliError::Usage)?;
    let mut rows: BTreeMap<(usize, usize, usize), Row> = BTreeMap::new();
    for (ci, cond) in spec.conditions.iter().enumerate() {
        for (si, &seed) in spec.seeds.iter().enumerate() {
            let prepared = prepare(spec, cond, seed);
            for (vi, &variant) in variants.iter().enumerate() {
                let config = base.clone().with_variant(variant);
                let mut row = Row {
                    condition: cond.name.clone(),
                    variant: variant.name().to_string(),
                    seed,
                    correspondences: cond.correspondences,
                    inlier_ratio: cond.inlier_ratio,
                    label_corruption: cond.label_corruption,
                    rr: 0.0,
                    rr_hard: 0.0,
                    re_deg: None,
                    te_cm: None,
                    ip: None,
                    ir: None,
                    f1: None,
                    error: String::new(),
                };
                match &prepared {
                    Err(e) => row.error = format!("scene: {e}"),
                    Ok(p) => match register(&p.src, &p.tgt, Matching::Given(&p.correspondences), &config) {
                        Err(e) => row.error = e.to_string(),
                        Ok(reg) => {
                            let m = MetricBlock::evaluate(&reg, &p.pair.gt, &p.src, &p.tgt, config.sigma_d);
                            row.rr = f64::from(u8::from(registration_success(m.re_deg, m.te_cm, Thresholds::EASY)));
                            row.rr_hard = f64::from(u8::from(registration_success(m.re_deg, m.te_cm, Thresholds::HARD)));
                            row.re_deg = Some(m.re_deg);
                            row.te_cm = Some(m.te_cm);
                            row.ip = Some(m.ip);
                            row.ir = Some(m.ir);
                            row.f1 = Some(m.f1);
                        }
                    },
                }
                progress(&row);
                rows.insert((ci, vi, si), row);
            }
        }
    }
    Ok(rows.into_values().collect())
}

pub fn to_csv(rows: &[Row]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Mean easy and hard RR per (condition, variant), in row order.
pub fn summarize(rows: &[Row]) -> Vec<(String, String, f64, f64, usize)> {
    let mut out: Vec<(String, String, f64, f64, usize)> = Vec::new();
    for r in rows {
        match out.last_mut() {
            Some(last) if last.0 == r.condition && last.1 == r.variant => {
                last.2 += r.rr;
                last.3 += r.rr_hard;
                last.4 += 1;
            }
            _ => out.push((r.condition.clone(), r.variant.clone(), r.rr, r.rr_hard, 1)),
        }
    }
    for s in &mut out {
        s.2 /= s.4 as f64;
        s.3 /= s.4 as f64;
    }
    out
}
