//! Experiment configuration (one TOML file; command-line flags override it).

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use trates_core::eval::{DirectFallback, HyperMode};
use trates_core::scaling::ScalingMode;
use trates_core::trait_features::Imputation;

use crate::loaders::DatasetKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub llm: LlmConfig,
    #[serde(default)]
    pub run: RunSection,
    /// Output directory for every artifact.
    pub output: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub kind: DatasetKind,
    pub data: PathBuf,
    pub metadata: PathBuf,
    /// Restrict to these prompt ids; empty keeps all.
    #[serde(default)]
    pub prompts: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Http,
    Mock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmConfig {
    pub backend: Backend,
    pub model_id: String,
    #[serde(default = "defaults::max_retries")]
    pub max_retries: u32,
    #[serde(default = "defaults::backoff_ms")]
    pub backoff_ms: u64,
    #[serde(default = "defaults::timeout_secs")]
    pub timeout_secs: u64,
    /// Upper bound on concurrent requests.
    #[serde(default = "defaults::max_in_flight")]
    pub max_in_flight: usize,
    #[serde(default = "defaults::cache_dir")]
    pub cache_dir: PathBuf,
    #[serde(default)]
    pub mock_seed: u64,
    /// CSV of `essay_id,latent` that drives planted mock ratings.
    #[serde(default)]
    pub mock_latent: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FoldScheme {
    LeaveOnePromptOut,
    /// Prompts sorted by id and chunked into groups of `group_size`.
    Grouped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// Traits to run; empty means every trait the metadata declares.
    #[serde(default)]
    pub traits: Vec<String>,
    #[serde(default = "defaults::feature_set")]
    pub feature_set: String,
    #[serde(default = "defaults::folds")]
    pub folds: FoldScheme,
    #[serde(default = "defaults::group_size")]
    pub group_size: usize,
    /// Nonzero shuffles prompts before grouping.
    #[serde(default)]
    pub fold_shuffle_seed: u64,
    #[serde(default = "defaults::tuning")]
    pub tuning: HyperMode,
    #[serde(default = "defaults::seed")]
    pub seed: u64,
    #[serde(default)]
    pub scaling: ScalingMode,
    #[serde(default = "defaults::val_fraction")]
    pub val_fraction: f64,
    /// What to do with a rating reply that does not parse: `medium` or `fail`.
    #[serde(default)]
    pub on_unparseable: Imputation,
    #[serde(default)]
    pub direct_fallback: DirectFallback,
    /// Worker threads for training and feature extraction; 0 uses all cores.
    #[serde(default)]
    pub threads: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        toml::from_str("").expect("defaults deserialize")
    }
}

mod defaults {
    use super::*;
    pub fn max_retries() -> u32 {
        3
    }
    pub fn backoff_ms() -> u64 {
        500
    }
    pub fn timeout_secs() -> u64 {
        120
    }
    pub fn max_in_flight() -> usize {
        4
    }
    pub fn cache_dir() -> PathBuf {
        "cache".into()
    }
    pub fn feature_set() -> String {
        "trates".into()
    }
    pub fn folds() -> FoldScheme {
        FoldScheme::LeaveOnePromptOut
    }
    pub fn group_size() -> usize {
        4
    }
    pub fn tuning() -> HyperMode {
        HyperMode::Tune
    }
    pub fn seed() -> u64 {
        42
    }
    pub fn val_fraction() -> f64 {
        0.2
    }
}

pub const FEATURE_SETS: [&str; 4] = ["trates", "llm-f", "gp-f", "llm-d"];

impl ExperimentConfig {
    /// Parses `path`; relative paths inside resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: ExperimentConfig = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        cfg.resolve(&base);
        Ok(cfg)
    }

    pub fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.dataset.data);
        fix(&mut self.dataset.metadata);
        fix(&mut self.output);
        if self.llm.cache_dir.is_relative() {
            self.llm.cache_dir = self.output.join(&self.llm.cache_dir);
        }
        if let Some(p) = self.llm.mock_latent.as_mut() {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (what, p) in [("dataset.data", &self.dataset.data), ("dataset.metadata", &self.dataset.metadata)] {
            if !p.exists() {
                bail!("{what}: {} does not exist", p.display());
            }
        }
        if let Some(p) = &self.llm.mock_latent {
            if !p.exists() {
                bail!("llm.mock_latent: {} does not exist", p.display());
            }
        }
        if self.llm.model_id.trim().is_empty() {
            bail!("llm.model_id must be set");
        }
        if self.llm.max_in_flight == 0 {
            bail!("llm.max_in_flight must be at least 1");
        }
        if !FEATURE_SETS.contains(&self.run.feature_set.as_str()) {
            bail!("run.feature_set {:?} is not one of {}", self.run.feature_set, FEATURE_SETS.join(", "));
        }
        if !(self.run.val_fraction > 0.0 && self.run.val_fraction < 1.0) {
            bail!("run.val_fraction must be in (0, 1)");
        }
        if self.run.group_size == 0 {
            bail!("run.group_size must be at least 1");
        }
        Ok(())
    }
}
