//! The JSON document printed by `register`.

use std::collections::BTreeMap;
use std::time::Instant;

use semreg_core::eval::{correspondence_metrics, MetricReport, Thresholds};
use semreg_core::pipeline::{Registration, Stage, StageCounts};
use semreg_core::{PipelineConfig, RigidTransform, SemanticPointCloud};
use serde::{Deserialize, Serialize};

pub const SCHEMA: &str = "semreg.run_report.v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationSummary {
    pub candidates: usize,
    pub gate_passed: usize,
    pub gate_bypassed: bool,
    pub best_index: usize,
    pub best_score: f64,
    pub refined_inliers: usize,
}

/// Accuracy against a supplied ground truth.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricBlock {
    pub re_deg: f64,
    pub te_cm: f64,
    pub ip: f64,
    pub ir: f64,
    pub f1: f64,
    pub success_easy: bool,
    pub success_medium: bool,
    pub success_hard: bool,
}

impl MetricBlock {
    pub fn new(m: &MetricReport) -> Self {
        Self {
            re_deg: m.re_deg,
            te_cm: m.te_cm,
            ip: m.ip,
            ir: m.ir,
            f1: m.f1,
            success_easy: m.success(Thresholds::EASY),
            success_medium: m.success(Thresholds::MEDIUM),
            success_hard: m.success(Thresholds::HARD),
        }
    }

    /// Errors of `reg` plus IP/IR of its refined inliers, counting a
    /// correspondence as true when it lies within `sigma_d` under `gt`.
    pub fn evaluate(
        reg: &Registration,
        gt: &RigidTransform,
        src: &SemanticPointCloud,
        tgt: &SemanticPointCloud,
        sigma_d: f64,
    ) -> Self {
        let corr = correspondence_metrics(&reg.refined_inliers(), &reg.correspondences, gt, src, tgt, sigma_d);
        Self::new(&MetricReport::new(&reg.transform, gt, corr))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub variant: Option<String>,
    pub seed: Option<u64>,
    /// Row-major 4×4, mapping source onto target.
    pub transform: [[f64; 4]; 4],
    pub counts: StageCounts,
    pub verification: VerificationSummary,
    pub metrics: Option<MetricBlock>,
    /// Wall-clock milliseconds per stage; the only non-deterministic field.
    pub timings_ms: BTreeMap<String, f64>,
    pub config: PipelineConfig,
}

impl RunReport {
    pub fn new(reg: &Registration, config: &PipelineConfig) -> Self {
        let v = &reg.verification;
        Self {
            schema: SCHEMA.to_string(),
            variant: None,
            seed: None,
            transform: reg.transform.to_row_major(),
            counts: reg.counts,
            verification: VerificationSummary {
                candidates: reg.candidates.len(),
                gate_passed: reg.counts.gate_passed,
                gate_bypassed: v.gate_bypassed,
                best_index: v.best_index,
                best_score: v.candidate_scores[v.best_index],
                refined_inliers: v.refined_inlier_count,
            },
            metrics: None,
            timings_ms: BTreeMap::new(),
            config: config.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is plain data")
    }
}

/// Observer that timestamps each stage start.
#[derive(Debug)]
pub struct StageTimer {
    start: Instant,
    marks: Vec<(Stage, Instant)>,
}

impl Default for StageTimer {
    fn default() -> Self {
        Self { start: Instant::now(), marks: Vec::new() }
    }
}

impl StageTimer {
    pub fn observe(&mut self, stage: Stage) {
        self.marks.push((stage, Instant::now()));
    }

    /// Stage most recently entered; failures are attributed to it.
    pub fn current(&self) -> Stage {
        self.marks.last().map_or(Stage::Ground, |m| m.0)
    }

    /// Milliseconds from each stage start to the next mark, plus `total`.
    pub fn finish(&self) -> BTreeMap<String, f64> {
        let end = Instant::now();
        let ms = |a: Instant, b: Instant| b.duration_since(a).as_secs_f64() * 1e3;
        let mut out = BTreeMap::new();
        for (i, (stage, at)) in self.marks.iter().enumerate() {
            if *stage == Stage::Done {
                continue;
            }
            let next = self.marks.get(i + 1).map_or(end, |m| m.1);
            out.insert(stage.name().to_string(), ms(*at, next));
        }
        out.insert("total".to_string(), ms(self.start, end));
        out
    }
}
