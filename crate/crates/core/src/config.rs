use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use crate::cloud::Label;
use crate::error::{Error, Result};
use crate::labels;

/// How semantic labels take part in the consistency matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "lowercase"))]
pub enum SemanticMode {
    /// Geometry only.
    Off,
    /// Per-point label agreement.
    Tight,
    /// Per-point agreement OR neighborhood-majority agreement.
    #[default]
    Loose,
}

impl SemanticMode {
    pub fn name(self) -> &'static str {
        match self {
            Self::Off => "off",
            Self::Tight => "tight",
            Self::Loose => "loose",
        }
    }
}

impl core::str::FromStr for SemanticMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "off" => Ok(Self::Off),
            "tight" => Ok(Self::Tight),
            "loose" => Ok(Self::Loose),
            other => Err(Error::InvalidArgument(format!("unknown semantic mode `{other}`"))),
        }
    }
}

/// Every threshold and count of the pipeline. Lengths in meters, angles in
/// degrees.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default, deny_unknown_fields))]
pub struct PipelineConfig {
    /// Pairwise-distance consistency threshold.
    pub sigma_d: f64,
    /// Point-to-plane threshold of the secondary ground pass.
    pub sigma_g: f64,
    /// Ground-normal gate, degrees.
    pub sigma_theta: f64,
    /// Squared residual threshold of the refinement step, m².
    pub tau_1: f64,
    /// Number of seed correspondences (local groups).
    pub num_seeds: usize,
    /// Correspondences per local group.
    pub group_size: usize,
    /// Correspondences kept per group after consistency filtering.
    pub keep_per_group: usize,
    /// Neighborhood radius for majority labels.
    pub semantic_radius: f64,
    /// Upper bound on the number of matched correspondences.
    pub cap: usize,
    pub ground_labels: Vec<Label>,
    pub semantic: SemanticMode,
    pub ground_gate: bool,
    pub preprocess: bool,
    pub secondary_segmentation: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let sigma_d = 0.6;
        let group_size = 40;
        Self {
            sigma_d,
            sigma_g: 0.2,
            sigma_theta: 5.0,
            tau_1: sigma_d * sigma_d,
            num_seeds: 100,
            group_size,
            keep_per_group: default_keep(group_size),
            semantic_radius: 1.0,
            cap: 8000,
            ground_labels: labels::DEFAULT_GROUND.to_vec(),
            semantic: SemanticMode::Loose,
            ground_gate: true,
            preprocess: true,
            secondary_segmentation: true,
        }
    }
}

/// `max(3, k / 2)`.
pub fn default_keep(group_size: usize) -> usize {
    (group_size / 2).max(3)
}

impl PipelineConfig {
    pub fn ground_label_set(&self) -> BTreeSet<Label> {
        self.ground_labels.iter().copied().collect()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("sigma_d", self.sigma_d),
            ("sigma_g", self.sigma_g),
            ("sigma_theta", self.sigma_theta),
            ("tau_1", self.tau_1),
            ("semantic_radius", self.semantic_radius),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.sigma_theta >= 90.0 {
            return Err(Error::InvalidArgument(format!("sigma_theta must be below 90 degrees, got {}", self.sigma_theta)));
        }
        if self.num_seeds == 0 {
            return Err(Error::InvalidArgument("num_seeds must be at least 1".into()));
        }
        if self.keep_per_group < 3 {
            return Err(Error::InvalidArgument("keep_per_group must be at least 3".into()));
        }
        if !(self.keep_per_group <= self.group_size && self.group_size <= self.cap) {
            return Err(Error::InvalidArgument(format!(
                "need keep_per_group <= group_size <= cap, got {} / {} / {}",
                self.keep_per_group, self.group_size, self.cap
            )));
        }
        Ok(())
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        match variant {
            Variant::Full => {}
            Variant::GeometricOnly => self.semantic = SemanticMode::Off,
            Variant::SemanticHard => self.semantic = SemanticMode::Tight,
            Variant::NoPreprocess => self.preprocess = false,
            Variant::NoGroundGate => self.ground_gate = false,
            Variant::LabelOnlyGround => self.secondary_segmentation = false,
        }
        self
    }
}

/// Named ablation settings, each switching off one part of the method.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Variant {
    Full,
    GeometricOnly,
    SemanticHard,
    NoPreprocess,
    NoGroundGate,
    LabelOnlyGround,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::Full,
        Variant::GeometricOnly,
        Variant::SemanticHard,
        Variant::NoPreprocess,
        Variant::NoGroundGate,
        Variant::LabelOnlyGround,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Full => "full",
            Self::GeometricOnly => "geometric-only",
            Self::SemanticHard => "semantic-hard",
            Self::NoPreprocess => "no-preprocess",
            Self::NoGroundGate => "no-ground-gate",
            Self::LabelOnlyGround => "label-only-ground",
        }
    }
}

impl core::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL.into_iter().find(|v| v.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Variant::ALL.iter().map(|v| v.name()).collect();
            Error::InvalidArgument(format!("unknown variant `{s}`; expected one of {}", names.join(", ")))
        })
    }
}

impl core::fmt::Display for Variant {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = PipelineConfig::default();
        c.validate().unwrap();
        assert_eq!(c.keep_per_group, 20);
        assert!((c.tau_1 - 0.36).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = PipelineConfig::default();
        c.keep_per_group = 50;
        assert!(c.validate().is_err());
        let mut c = PipelineConfig::default();
        c.sigma_theta = 95.0;
        assert!(c.validate().is_err());
        let mut c = PipelineConfig::default();
        c.sigma_d = -1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!("bogus".parse::<Variant>().is_err());
        let c = PipelineConfig::default().with_variant(Variant::GeometricOnly);
        assert_eq!(c.semantic, SemanticMode::Off);
    }
}
