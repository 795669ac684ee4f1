//! The dataset metadata sidecar (TOML). Schema: `docs/metadata.md`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use trates_core::corpus::{EssayType, PromptSpec, RubricDoc, ScoreRange};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub columns: Columns,
    pub prompts: Vec<PromptEntry>,
    pub rubrics: Vec<RubricEntry>,
    /// Expected essay count per prompt id.
    #[serde(default)]
    pub manifest: BTreeMap<String, usize>,
}

/// Header names in the data file. Unset names use the loader's defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Columns {
    pub essay_id: Option<String>,
    pub prompt: Option<String>,
    pub text: Option<String>,
    /// trait name -> header; traits not listed use their own name.
    #[serde(default)]
    pub traits: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeEntry {
    pub min: f64,
    pub max: f64,
    #[serde(default = "one")]
    pub step: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PromptEntry {
    pub prompt_id: String,
    pub task_description: String,
    pub essay_type: EssayType,
    pub expected_length: f64,
    #[serde(default)]
    pub source_length: f64,
    pub grade_level: u32,
    pub score_ranges: BTreeMap<String, RangeEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RubricEntry {
    pub rubric_id: String,
    #[serde(rename = "trait")]
    pub trait_name: String,
    /// Inline text; exactly one of `body` and `body_file` is required.
    pub body: Option<String>,
    /// Path relative to the metadata file.
    pub body_file: Option<PathBuf>,
    /// `["*"]` means every prompt that declares the trait.
    pub prompt_ids: Vec<String>,
}

impl Metadata {
    pub fn load(path: &Path) -> Result<Metadata> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading metadata {}", path.display()))?;
        let meta: Metadata = toml::from_str(&text).with_context(|| format!("parsing metadata {}", path.display()))?;
        if meta.schema_version != SCHEMA_VERSION {
            bail!(
                "metadata {}: schema_version {} is not supported (expected {SCHEMA_VERSION})",
                path.display(),
                meta.schema_version
            );
        }
        Ok(meta)
    }

    pub fn prompt_specs(&self) -> Vec<PromptSpec> {
        self.prompts
            .iter()
            .map(|p| PromptSpec {
                prompt_id: p.prompt_id.clone(),
                task_description: p.task_description.clone(),
                essay_type: p.essay_type,
                expected_length: p.expected_length,
                source_length: p.source_length,
                grade_level: p.grade_level,
                score_ranges: p
                    .score_ranges
                    .iter()
                    .map(|(t, r)| (t.clone(), ScoreRange::new(r.min, r.max, r.step)))
                    .collect(),
            })
            .collect()
    }

    /// Rubrics with bodies read and `*` expanded. `base` resolves `body_file`.
    pub fn rubric_docs(&self, base: &Path) -> Result<Vec<RubricDoc>> {
        let mut out = Vec::new();
        for r in &self.rubrics {
            let body = match (&r.body, &r.body_file) {
                (Some(b), None) => b.clone(),
                (None, Some(f)) => {
                    let p = base.join(f);
                    std::fs::read_to_string(&p)
                        .with_context(|| format!("rubric {}: reading {}", r.rubric_id, p.display()))?
                }
                _ => bail!("rubric {}: set exactly one of body and body_file", r.rubric_id),
            };
            let prompt_ids = if r.prompt_ids.iter().any(|p| p == "*") {
                self.prompts
                    .iter()
                    .filter(|p| p.score_ranges.contains_key(&r.trait_name))
                    .map(|p| p.prompt_id.clone())
                    .collect()
            } else {
                r.prompt_ids.clone()
            };
            out.push(RubricDoc {
                rubric_id: r.rubric_id.clone(),
                trait_name: r.trait_name.clone(),
                body: trates_core::corpus::normalize_text(&body),
                prompt_ids,
            });
        }
        Ok(out)
    }

    pub fn trait_column<'a>(&'a self, trait_name: &'a str) -> &'a str {
        self.columns.traits.get(trait_name).map(String::as_str).unwrap_or(trait_name)
    }

    pub fn declared_traits(&self) -> Vec<String> {
        let mut t: Vec<String> = self.prompts.iter().flat_map(|p| p.score_ranges.keys().cloned()).collect();
        t.sort();
        t.dedup();
        t
    }
}
