//! Synthetic corpora with a planted quality signal, for offline runs.
//!
//! Every essay gets a hidden latent quality in `[0, 1]`. Its gold score is
//! the latent mapped linearly onto the prompt's grid. Essay text is random
//! filler drawn independently of the latent, so generic features carry no
//! signal; paired with [`crate::llm::MockLlm`] in planted mode, only the
//! trait-specific ratings do.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Dataset, EssayRecord, EssayType, PromptSpec, RubricDoc, ScoreRange};

const SUBJECTS: &[&str] = &["The library", "My friend", "Our town", "The teacher", "A computer", "The school", "People"];
const VERBS: &[&str] = &["helps", "changes", "shows", "needs", "gives", "makes", "brings"];
const OBJECTS: &[&str] = &[
    "many students",
    "new ideas",
    "a better future",
    "some problems",
    "the community",
    "useful lessons",
    "good reasons",
];
const TAILS: &[&str] = &["every day", "in many ways", "because it matters", "at home", "", "for everyone"];

#[derive(Debug, Clone)]
pub struct SyntheticPrompt {
    pub prompt_id: String,
    pub range: ScoreRange,
    pub grade_level: u32,
    pub essay_type: EssayType,
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub dataset: Dataset,
    /// Latent quality by essay id.
    pub latent: BTreeMap<String, f64>,
}

fn filler(rng: &mut ChaCha8Rng) -> String {
    let sentences = rng.random_range(4..9);
    let mut out = String::new();
    for i in 0..sentences {
        if i > 0 {
            out.push(' ');
        }
        let pick = |rng: &mut ChaCha8Rng, list: &[&'static str]| list[rng.random_range(0..list.len())];
        let tail = pick(rng, TAILS);
        out.push_str(&format!("{} {} {}", pick(rng, SUBJECTS), pick(rng, VERBS), pick(rng, OBJECTS)));
        if !tail.is_empty() {
            out.push(' ');
            out.push_str(tail);
        }
        out.push('.');
    }
    out
}

/// Latent mapped onto the grid.
pub fn latent_score(latent: f64, range: &ScoreRange) -> f64 {
    let k = libm::round(latent.clamp(0.0, 1.0) * (range.levels() - 1) as f64);
    range.min + k * range.step
}

pub fn planted_corpus(prompts: &[SyntheticPrompt], trait_name: &str, essays_per_prompt: usize, seed: u64) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dataset = Dataset::default();
    let mut latent = BTreeMap::new();
    for p in prompts {
        dataset.prompts.push(PromptSpec {
            prompt_id: p.prompt_id.clone(),
            task_description: format!("Write an essay for task {}.", p.prompt_id),
            essay_type: p.essay_type,
            expected_length: 100.0,
            source_length: 0.0,
            grade_level: p.grade_level,
            score_ranges: [(trait_name.to_string(), p.range)].into(),
        });
        dataset.rubrics.push(RubricDoc {
            rubric_id: format!("{trait_name}-{}", p.prompt_id),
            trait_name: trait_name.to_string(),
            body: format!(
                "Score {}: the {trait_name} is excellent. Score {}: the {trait_name} is weak.",
                p.range.max, p.range.min
            ),
            prompt_ids: alloc::vec![p.prompt_id.clone()],
        });
        for i in 0..essays_per_prompt {
            let id = format!("{}-{i:04}", p.prompt_id);
            let q: f64 = rng.random_range(0.0..1.0);
            dataset.essays.push(EssayRecord {
                essay_id: id.clone(),
                prompt_id: p.prompt_id.clone(),
                text: filler(&mut rng),
                trait_scores: [(trait_name.to_string(), latent_score(q, &p.range))].into(),
            });
            latent.insert(id, q);
        }
    }
    SyntheticCorpus { dataset, latent }
}

/// Two prompts of one grade tier with different score grids.
pub fn two_prompt_corpus(trait_name: &str, essays_per_prompt: usize, seed: u64) -> SyntheticCorpus {
    let prompts = [
        SyntheticPrompt {
            prompt_id: "1".into(),
            range: ScoreRange::new(1.0, 6.0, 1.0),
            grade_level: 8,
            essay_type: EssayType::Persuasive,
        },
        SyntheticPrompt {
            prompt_id: "2".into(),
            range: ScoreRange::new(0.0, 3.0, 1.0),
            grade_level: 8,
            essay_type: EssayType::Narrative,
        },
    ];
    planted_corpus(&prompts, trait_name, essays_per_prompt, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_valid_and_seeded() {
        let a = two_prompt_corpus("organization", 20, 1);
        a.dataset.validate(None).unwrap();
        assert_eq!(a.dataset.essays.len(), 40);
        let b = two_prompt_corpus("organization", 20, 1);
        assert_eq!(a.dataset, b.dataset);
        assert_eq!(latent_score(1.0, &ScoreRange::new(0.0, 3.0, 1.0)), 3.0);
    }
}
