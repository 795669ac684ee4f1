//! Writes a synthetic planted-signal dataset plus a mock-backend config.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Result;
use trates_core::synthetic::two_prompt_corpus;

use crate::artifacts::write_atomic;
use crate::config::{Backend, DatasetConfig, ExperimentConfig, LlmConfig, RunSection};
use crate::loaders::DatasetKind;
use crate::metadata::{Columns, Metadata, PromptEntry, RangeEntry, RubricEntry, SCHEMA_VERSION};

pub const DEMO_TRAIT: &str = "organization";

/// Returns the path of the written config.
pub fn write_demo(dir: &Path, essays_per_prompt: usize, seed: u64) -> Result<PathBuf> {
    let corpus = two_prompt_corpus(DEMO_TRAIT, essays_per_prompt, seed);
    let ds = &corpus.dataset;

    let mut tsv = format!("essay_id\tessay_set\tessay\t{DEMO_TRAIT}\n");
    for e in &ds.essays {
        tsv.push_str(&format!("{}\t{}\t{}\t{}\n", e.essay_id, e.prompt_id, e.text, e.trait_scores[DEMO_TRAIT]));
    }
    write_atomic(&dir.join("essays.tsv"), tsv.as_bytes())?;

    let mut latent = String::from("essay_id,latent\n");
    for (id, v) in &corpus.latent {
        latent.push_str(&format!("{id},{v}\n"));
    }
    write_atomic(&dir.join("latent.csv"), latent.as_bytes())?;

    let meta = Metadata {
        schema_version: SCHEMA_VERSION,
        name: "synthetic demo".into(),
        columns: Columns::default(),
        prompts: ds
            .prompts
            .iter()
            .map(|p| PromptEntry {
                prompt_id: p.prompt_id.clone(),
                task_description: p.task_description.clone(),
                essay_type: p.essay_type,
                expected_length: p.expected_length,
                source_length: p.source_length,
                grade_level: p.grade_level,
                score_ranges: p
                    .score_ranges
                    .iter()
                    .map(|(t, r)| (t.clone(), RangeEntry { min: r.min, max: r.max, step: r.step }))
                    .collect(),
            })
            .collect(),
        rubrics: ds
            .rubrics
            .iter()
            .map(|r| RubricEntry {
                rubric_id: r.rubric_id.clone(),
                trait_name: r.trait_name.clone(),
                body: Some(r.body.clone()),
                body_file: None,
                prompt_ids: r.prompt_ids.clone(),
            })
            .collect(),
        manifest: ds.essay_counts().into_iter().collect::<BTreeMap<_, _>>(),
    };
    write_atomic(&dir.join("metadata.toml"), toml::to_string_pretty(&meta)?.as_bytes())?;

    let cfg = ExperimentConfig {
        dataset: DatasetConfig {
            kind: DatasetKind::Asap,
            data: "essays.tsv".into(),
            metadata: "metadata.toml".into(),
            prompts: Vec::new(),
        },
        llm: LlmConfig {
            backend: Backend::Mock,
            model_id: "mock".into(),
            max_retries: 3,
            backoff_ms: 500,
            timeout_secs: 120,
            max_in_flight: 4,
            cache_dir: "cache".into(),
            mock_seed: seed,
            mock_latent: Some("latent.csv".into()),
        },
        run: RunSection::default(),
        output: "out".into(),
    };
    let path = dir.join("config.toml");
    write_atomic(&path, toml::to_string_pretty(&cfg)?.as_bytes())?;
    Ok(path)
}
