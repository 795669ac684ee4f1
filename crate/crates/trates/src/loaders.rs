//! ASAP (TSV) and ELLIPSE (CSV) loaders.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use trates_core::corpus::{normalize_text, validate_essay, Dataset, EssayRecord};

use crate::metadata::Metadata;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Asap,
    Ellipse,
}

impl DatasetKind {
    fn delimiter(self) -> u8 {
        match self {
            DatasetKind::Asap => b'\t',
            DatasetKind::Ellipse => b',',
        }
    }

    fn default_columns(self) -> (&'static str, &'static str, &'static str) {
        match self {
            DatasetKind::Asap => ("essay_id", "essay_set", "essay"),
            DatasetKind::Ellipse => ("text_id", "prompt", "full_text"),
        }
    }
}

/// Values that mark a trait as not scored for a row.
fn is_missing(cell: &str) -> bool {
    matches!(cell.trim().to_ascii_lowercase().as_str(), "" | "na" | "nan" | "null" | "none")
}

/// UTF-8, or Latin-1 when the bytes are not valid UTF-8.
fn decode(bytes: Vec<u8>, path: &Path) -> String {
    match String::from_utf8(bytes) {
        Ok(s) => s,
        Err(e) => {
            log::warn!("{} is not valid UTF-8; decoding as Latin-1", path.display());
            e.into_bytes().into_iter().map(char::from).collect()
        }
    }
}

pub fn load_asap(data_path: &Path, metadata_path: &Path) -> Result<Dataset> {
    load(DatasetKind::Asap, data_path, metadata_path)
}

pub fn load_ellipse(data_path: &Path, metadata_path: &Path) -> Result<Dataset> {
    load(DatasetKind::Ellipse, data_path, metadata_path)
}

pub fn load(kind: DatasetKind, data_path: &Path, metadata_path: &Path) -> Result<Dataset> {
    let meta = Metadata::load(metadata_path)?;
    let base = metadata_path.parent().unwrap_or(Path::new("."));
    let mut dataset = Dataset {
        prompts: meta.prompt_specs(),
        rubrics: meta.rubric_docs(base)?,
        essays: Vec::new(),
    };
    let bytes = std::fs::read(data_path).with_context(|| format!("reading {}", data_path.display()))?;
    let text = decode(bytes, data_path);
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(kind.delimiter())
        .quoting(kind == DatasetKind::Ellipse)
        .flexible(false)
        .from_reader(text.as_bytes());
    let headers = reader.headers().context("reading header")?.clone();
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| anyhow!("{}: missing header column {name:?}", data_path.display()))
    };
    let (d_id, d_prompt, d_text) = kind.default_columns();
    let id_col = find(meta.columns.essay_id.as_deref().unwrap_or(d_id))?;
    let prompt_col = find(meta.columns.prompt.as_deref().unwrap_or(d_prompt))?;
    let text_col = find(meta.columns.text.as_deref().unwrap_or(d_text))?;
    let mut trait_cols = BTreeMap::new();
    for t in meta.declared_traits() {
        trait_cols.insert(t.clone(), find(meta.trait_column(&t))?);
    }

    for record in reader.records() {
        let record = record.with_context(|| format!("parsing {}", data_path.display()))?;
        let row = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let cell = |i: usize| record.get(i).unwrap_or("");
        let essay_id = cell(id_col).trim().to_string();
        let prompt_id = cell(prompt_col).trim().to_string();
        let Some(prompt) = dataset.prompt(&prompt_id) else {
            bail!("row {row}: essay {essay_id} references unknown prompt {prompt_id:?}");
        };
        let mut trait_scores = BTreeMap::new();
        for t in prompt.score_ranges.keys() {
            let raw = cell(trait_cols[t]);
            if is_missing(raw) {
                continue;
            }
            let v: f64 = raw
                .trim()
                .parse()
                .with_context(|| format!("row {row}: essay {essay_id}: {t} score {raw:?} is not a number"))?;
            trait_scores.insert(t.clone(), v);
        }
        let essay = EssayRecord {
            essay_id,
            prompt_id,
            text: normalize_text(cell(text_col)),
            trait_scores,
        };
        validate_essay(row, &essay, prompt)?;
        dataset.essays.push(essay);
    }
    let manifest = (!meta.manifest.is_empty()).then_some(&meta.manifest);
    dataset.validate(manifest)?;
    Ok(dataset)
}

/// Keeps only `prompt_ids` (all when empty), with their essays and rubrics.
pub fn restrict(mut dataset: Dataset, prompt_ids: &[String]) -> Dataset {
    if prompt_ids.is_empty() {
        return dataset;
    }
    dataset.prompts.retain(|p| prompt_ids.contains(&p.prompt_id));
    dataset.essays.retain(|e| prompt_ids.contains(&e.prompt_id));
    for r in &mut dataset.rubrics {
        r.prompt_ids.retain(|p| prompt_ids.contains(p));
    }
    dataset.rubrics.retain(|r| !r.prompt_ids.is_empty());
    dataset
}
