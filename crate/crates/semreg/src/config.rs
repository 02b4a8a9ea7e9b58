//! Flat TOML configuration files and command-line overrides.
//!
//! Keys are the [`PipelineConfig`] field names. Two values are derived when
//! left unset everywhere: `keep_per_group` follows `group_size`, and `tau_1`
//! follows `sigma_d` (as its square).

use std::path::Path;

use clap::Args;
use semreg_core::config::default_keep;
use semreg_core::{Label, PipelineConfig, SemanticMode, Variant};

use crate::error::{CliError, Result};
use crate::io::read_bytes;

/// Every pipeline setting as an optional flag; given flags win over the file.
#[derive(Args, Clone, Debug, Default)]
pub struct ConfigOverrides {
    #[arg(long)]
    pub sigma_d: Option<f64>,
    #[arg(long)]
    pub sigma_g: Option<f64>,
    #[arg(long)]
    pub sigma_theta: Option<f64>,
    #[arg(long)]
    pub tau_1: Option<f64>,
    #[arg(long)]
    pub num_seeds: Option<usize>,
    #[arg(long)]
    pub group_size: Option<usize>,
    #[arg(long)]
    pub keep_per_group: Option<usize>,
    #[arg(long)]
    pub semantic_radius: Option<f64>,
    #[arg(long)]
    pub cap: Option<usize>,
    /// Comma-separated label ids.
    #[arg(long, value_delimiter = ',')]
    pub ground_labels: Option<Vec<u32>>,
    /// off, tight or loose.
    #[arg(long, value_parser = parse_semantic)]
    pub semantic: Option<SemanticMode>,
    #[arg(long)]
    pub ground_gate: Option<bool>,
    #[arg(long)]
    pub preprocess: Option<bool>,
    #[arg(long)]
    pub secondary_segmentation: Option<bool>,
}

fn parse_semantic(s: &str) -> std::result::Result<SemanticMode, String> {
    s.parse().map_err(|e: semreg_core::Error| e.to_string())
}

pub fn parse_variant(s: &str) -> std::result::Result<Variant, String> {
    s.parse().map_err(|e: semreg_core::Error| e.to_string())
}

/// A parsed file plus which derived keys it set explicitly.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigFile {
    pub config: PipelineConfig,
    pub sets_keep: bool,
    pub sets_tau: bool,
}

pub fn parse_config(text: &str, path: &Path) -> Result<ConfigFile> {
    let table: toml::Table = toml::from_str(text).map_err(|e| toml_error(&e, path))?;
    let config: PipelineConfig = toml::from_str(text).map_err(|e| toml_error(&e, path))?;
    Ok(ConfigFile { config, sets_keep: table.contains_key("keep_per_group"), sets_tau: table.contains_key("tau_1") })
}

fn toml_error(e: &toml::de::Error, path: &Path) -> CliError {
    let offset = e.span().map_or(0, |s| s.start as u64);
    CliError::malformed(path, offset, e.message().to_string())
}

pub fn load_config(path: &Path) -> Result<ConfigFile> {
    let bytes = read_bytes(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| CliError::malformed(path, e.valid_up_to() as u64, "not UTF-8"))?;
    parse_config(text, path)
}

pub fn to_toml(config: &PipelineConfig) -> String {
    toml::to_string(config).expect("config is plain data")
}

impl ConfigOverrides {
    /// Applies the flags on top of `base` (defaults when no file), then the
    /// variant, and validates the result.
    pub fn resolve(&self, base: Option<ConfigFile>, variant: Option<Variant>) -> Result<PipelineConfig> {
        let (mut c, sets_keep, sets_tau) = match base {
            Some(f) => (f.config, f.sets_keep, f.sets_tau),
            None => (PipelineConfig::default(), false, false),
        };
        macro_rules! set {
            ($($f:ident),*) => {$( if let Some(v) = self.$f.clone() { c.$f = v; } )*};
        }
        set!(sigma_d, sigma_g, sigma_theta, tau_1, num_seeds, group_size, keep_per_group, semantic_radius, cap);
        set!(semantic, ground_gate, preprocess, secondary_segmentation);
        if let Some(labels) = &self.ground_labels {
            c.ground_labels = labels.iter().map(|&l| Label(l)).collect();
        }
        if self.keep_per_group.is_none() && !sets_keep {
            c.keep_per_group = default_keep(c.group_size);
        }
        if self.tau_1.is_none() && !sets_tau {
            c.tau_1 = c.sigma_d * c.sigma_d;
        }
        if let Some(v) = variant {
            c = c.with_variant(v);
        }
        c.validate().map_err(|e| CliError::Usage(format!("invalid configuration: {e}")))?;
        Ok(c)
    }
}
