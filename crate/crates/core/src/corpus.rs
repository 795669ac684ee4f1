//! Essays, prompts, rubrics and their validation.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

/// Tolerance for grid and range checks on scores parsed from text.
const GRID_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssayRecord {
    pub essay_id: String,
    pub prompt_id: String,
    pub text: String,
    /// Raw score per trait. A missing trait means the essay is not scored on it.
    pub trait_scores: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EssayType {
    Persuasive,
    Narrative,
    SourceDependent,
    Other,
}

impl EssayType {
    pub const ALL: [EssayType; 4] = [
        EssayType::Persuasive,
        EssayType::Narrative,
        EssayType::SourceDependent,
        EssayType::Other,
    ];

    /// Position in [`EssayType::ALL`].
    pub fn code(self) -> usize {
        Self::ALL.iter().position(|t| *t == self).unwrap()
    }

    /// Wording used inside LLM templates.
    pub fn label(self) -> &'static str {
        match self {
            EssayType::Persuasive => "persuasive",
            EssayType::Narrative => "narrative",
            EssayType::SourceDependent => "source-dependent",
            EssayType::Other => "",
        }
    }
}

/// A closed score interval with a fixed step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreRange {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl ScoreRange {
    pub fn new(min: f64, max: f64, step: f64) -> Self {
        ScoreRange { min, max, step }
    }

    pub fn is_valid(&self) -> bool {
        self.min.is_finite() && self.max.is_finite() && self.step.is_finite() && self.min < self.max && self.step > 0.0
    }

    /// Number of grid points.
    pub fn levels(&self) -> usize {
        libm::round((self.max - self.min) / self.step) as usize + 1
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.levels()).map(|i| self.min + i as f64 * self.step).collect()
    }

    pub fn contains(&self, score: f64) -> bool {
        score >= self.min - GRID_EPS && score <= self.max + GRID_EPS
    }

    /// Grid index of `score` when it lies on the grid.
    pub fn index_of(&self, score: f64) -> Option<usize> {
        if !score.is_finite() || !self.contains(score) {
            return None;
        }
        let k = (score - self.min) / self.step;
        let r = libm::round(k);
        ((k - r).abs() < GRID_EPS * 1e3).then_some(r as usize)
    }

    pub fn on_grid(&self, score: f64) -> bool {
        self.index_of(score).is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub prompt_id: String,
    pub task_description: String,
    pub essay_type: EssayType,
    /// Words.
    pub expected_length: f64,
    /// Words; 0 when the prompt has no source text.
    pub source_length: f64,
    pub grade_level: u32,
    pub score_ranges: BTreeMap<String, ScoreRange>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RubricDoc {
    pub rubric_id: String,
    #[serde(rename = "trait")]
    pub trait_name: String,
    pub body: String,
    pub prompt_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Dataset {
    pub prompts: Vec<PromptSpec>,
    pub rubrics: Vec<RubricDoc>,
    pub essays: Vec<EssayRecord>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorpusError {
    #[error("row {row}: essay {essay_id} has empty text")]
    EmptyText { row: usize, essay_id: String },
    #[error("row {row}: essay {essay_id} references unknown prompt {prompt_id}")]
    UnknownPrompt { row: usize, essay_id: String, prompt_id: String },
    #[error("row {row}: essay {essay_id} trait {trait_name} score {score} outside [{min}, {max}]")]
    ScoreOutOfRange {
        row: usize,
        essay_id: String,
        trait_name: String,
        score: f64,
        min: f64,
        max: f64,
    },
    #[error("row {row}: essay {essay_id} trait {trait_name} score {score} is not on the {step} grid")]
    OffGrid {
        row: usize,
        essay_id: String,
        trait_name: String,
        score: f64,
        step: f64,
    },
    #[error("row {row}: essay {essay_id} has trait {trait_name} with no declared range for prompt {prompt_id}")]
    UndeclaredTrait {
        row: usize,
        essay_id: String,
        trait_name: String,
        prompt_id: String,
    },
    #[error("duplicate essay id {0}")]
    DuplicateEssay(String),
    #[error("prompt {prompt_id}: {message}")]
    InvalidPrompt { prompt_id: String, message: String },
    #[error("duplicate prompt id {0}")]
    DuplicatePrompt(String),
    #[error("rubric {rubric_id}: {message}")]
    InvalidRubric { rubric_id: String, message: String },
    #[error("no rubric for trait {trait_name} on prompt {prompt_id}")]
    MissingRubric { trait_name: String, prompt_id: String },
    #[error("trait {trait_name} on prompt {prompt_id} has more than one rubric")]
    AmbiguousRubric { trait_name: String, prompt_id: String },
    #[error("prompt {prompt_id}: manifest expects {expected} essays, found {found}")]
    ManifestMismatch {
        prompt_id: String,
        expected: usize,
        found: usize,
    },
}

/// NFC normalization with CRLF and lone CR folded to LF.
pub fn normalize_text(text: &str) -> String {
    let unified = text.replace("\r\n", "\n").replace('\r', "\n");
    unified.nfc().collect()
}

impl PromptSpec {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let bad = |message: &str| CorpusError::InvalidPrompt {
            prompt_id: self.prompt_id.clone(),
            message: message.to_string(),
        };
        if self.prompt_id.trim().is_empty() {
            return Err(bad("empty prompt id"));
        }
        if !(self.expected_length.is_finite() && self.expected_length > 0.0) {
            return Err(bad("expected_length must be > 0"));
        }
        if !(self.source_length.is_finite() && self.source_length >= 0.0) {
            return Err(bad("source_length must be >= 0"));
        }
        if !(1..=12).contains(&self.grade_level) {
            return Err(bad("grade_level must be in [1, 12]"));
        }
        if self.score_ranges.is_empty() {
            return Err(bad("no score ranges"));
        }
        for (t, r) in &self.score_ranges {
            if !r.is_valid() {
                return Err(bad(&alloc::format!("trait {t}: range needs min < max and step > 0")));
            }
        }
        Ok(())
    }
}

/// Checks one essay against its prompt. `row` is reported in errors.
pub fn validate_essay(row: usize, essay: &EssayRecord, prompt: &PromptSpec) -> Result<(), CorpusError> {
    if essay.text.trim().is_empty() {
        return Err(CorpusError::EmptyText {
            row,
            essay_id: essay.essay_id.clone(),
        });
    }
    for (t, &score) in &essay.trait_scores {
        let Some(range) = prompt.score_ranges.get(t) else {
            return Err(CorpusError::UndeclaredTrait {
                row,
                essay_id: essay.essay_id.clone(),
                trait_name: t.clone(),
                prompt_id: prompt.prompt_id.clone(),
            });
        };
        if !range.contains(score) {
            return Err(CorpusError::ScoreOutOfRange {
                row,
                essay_id: essay.essay_id.clone(),
                trait_name: t.clone(),
                score,
                min: range.min,
                max: range.max,
            });
        }
        if !range.on_grid(score) {
            return Err(CorpusError::OffGrid {
                row,
                essay_id: essay.essay_id.clone(),
                trait_name: t.clone(),
                score,
                step: range.step,
            });
        }
    }
    Ok(())
}

impl Dataset {
    pub fn prompt(&self, prompt_id: &str) -> Option<&PromptSpec> {
        self.prompts.iter().find(|p| p.prompt_id == prompt_id)
    }

    pub fn prompt_ids(&self) -> Vec<String> {
        self.prompts.iter().map(|p| p.prompt_id.clone()).collect()
    }

    /// Every trait with a declared range on some prompt, sorted.
    pub fn traits(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.prompts.iter().flat_map(|p| p.score_ranges.keys()).collect();
        set.into_iter().cloned().collect()
    }

    /// The rubric assessing `trait_name` on `prompt_id`.
    pub fn rubric_for(&self, trait_name: &str, prompt_id: &str) -> Option<&RubricDoc> {
        self.rubrics
            .iter()
            .find(|r| r.trait_name == trait_name && r.prompt_ids.iter().any(|p| p == prompt_id))
    }

    /// Essays scored on `trait_name`, in dataset order.
    pub fn trait_view(&self, trait_name: &str) -> Vec<&EssayRecord> {
        self.essays.iter().filter(|e| e.trait_scores.contains_key(trait_name)).collect()
    }

    /// Distinct grade levels across prompts, ascending.
    pub fn grade_levels(&self) -> Vec<u32> {
        let set: BTreeSet<u32> = self.prompts.iter().map(|p| p.grade_level).collect();
        set.into_iter().collect()
    }

    pub fn essay_counts(&self) -> BTreeMap<String, usize> {
        let mut counts: BTreeMap<String, usize> = self.prompts.iter().map(|p| (p.prompt_id.clone(), 0)).collect();
        for e in &self.essays {
            *counts.entry(e.prompt_id.clone()).or_default() += 1;
        }
        counts
    }

    /// Checks every invariant; `manifest` optionally fixes essay counts per prompt.
    pub fn validate(&self, manifest: Option<&BTreeMap<String, usize>>) -> Result<(), CorpusError> {
        let mut seen = BTreeSet::new();
        for p in &self.prompts {
            p.validate()?;
            if !seen.insert(p.prompt_id.as_str()) {
                return Err(CorpusError::DuplicatePrompt(p.prompt_id.clone()));
            }
        }
        for r in &self.rubrics {
            let bad = |message: &str| CorpusError::InvalidRubric {
                rubric_id: r.rubric_id.clone(),
                message: message.to_string(),
            };
            if r.body.trim().is_empty() {
                return Err(bad("empty body"));
            }
            for pid in &r.prompt_ids {
                if self.prompt(pid).is_none() {
                    return Err(bad(&alloc::format!("unknown prompt {pid}")));
                }
            }
        }
        for p in &self.prompts {
            for t in p.score_ranges.keys() {
                let n = self
                    .rubrics
                    .iter()
                    .filter(|r| &r.trait_name == t && r.prompt_ids.contains(&p.prompt_id))
                    .count();
                match n {
                    0 => {
                        return Err(CorpusError::MissingRubric {
                            trait_name: t.clone(),
                            prompt_id: p.prompt_id.clone(),
                        })
                    }
                    1 => {}
                    _ => {
                        return Err(CorpusError::AmbiguousRubric {
                            trait_name: t.clone(),
                            prompt_id: p.prompt_id.clone(),
                        })
                    }
                }
            }
        }
        let mut ids = BTreeSet::new();
        for (i, e) in self.essays.iter().enumerate() {
            let prompt = self.prompt(&e.prompt_id).ok_or_else(|| CorpusError::UnknownPrompt {
                row: i + 1,
                essay_id: e.essay_id.clone(),
                prompt_id: e.prompt_id.clone(),
            })?;
            validate_essay(i + 1, e, prompt)?;
            if !ids.insert(e.essay_id.as_str()) {
                return Err(CorpusError::DuplicateEssay(e.essay_id.clone()));
            }
        }
        if let Some(manifest) = manifest {
            let counts = self.essay_counts();
            for (pid, &expected) in manifest {
                let found = counts.get(pid).copied().unwrap_or(0);
                if found != expected {
                    return Err(CorpusError::ManifestMismatch {
                        prompt_id: pid.clone(),
                        expected,
                        found,
                    });
                }
            }
        }
        Ok(())
    }

    /// SHA-256 over a canonical length-prefixed encoding of the dataset.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        let mut put = |s: &str| {
            h.update((s.len() as u64).to_le_bytes());
            h.update(s.as_bytes());
        };
        for p in &self.prompts {
            put(&p.prompt_id);
            put(&p.task_description);
            put(p.essay_type.label());
            put(&alloc::format!("{:?}|{:?}|{}", p.expected_length, p.source_length, p.grade_level));
            for (t, r) in &p.score_ranges {
                put(t);
                put(&alloc::format!("{:?}|{:?}|{:?}", r.min, r.max, r.step));
            }
        }
        for r in &self.rubrics {
            put(&r.rubric_id);
            put(&r.trait_name);
            put(&r.body);
            for p in &r.prompt_ids {
                put(p);
            }
        }
        for e in &self.essays {
            put(&e.essay_id);
            put(&e.prompt_id);
            put(&e.text);
            for (t, s) in &e.trait_scores {
                put(t);
                put(&alloc::format!("{s:?}"));
            }
        }
        hex_lower(&h.finalize())
    }
}

pub(crate) fn hex_lower(bytes: &[u8]) -> String {
    const HEX: &[u8; 16] = b"0123456789abcdef";
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push(HEX[usize::from(b >> 4)] as char);
        s.push(HEX[usize::from(b & 15)] as char);
    }
    s
}

pub const PROMPT_FEATURE_NAMES: [&str; 4] = ["essay_type", "expected_length", "source_length", "grade_level"];

/// The prompt feature block: essay-type code (position in [`EssayType::ALL`]),
/// expected length, source length and grade level.
pub fn prompt_feature_vector(prompt: &PromptSpec) -> [f64; 4] {
    [
        prompt.essay_type.code() as f64,
        prompt.expected_length,
        prompt.source_length,
        f64::from(prompt.grade_level),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    pub(crate) fn prompt(id: &str) -> PromptSpec {
        PromptSpec {
            prompt_id: id.into(),
            task_description: "Write a letter.".into(),
            essay_type: EssayType::Persuasive,
            expected_length: 350.0,
            source_length: 0.0,
            grade_level: 8,
            score_ranges: [("CNT".to_string(), ScoreRange::new(1.0, 6.0, 1.0))].into(),
        }
    }

    fn dataset() -> Dataset {
        Dataset {
            prompts: vec![prompt("1")],
            rubrics: vec![RubricDoc {
                rubric_id: "r1".into(),
                trait_name: "CNT".into(),
                body: "Ideas are clear.".into(),
                prompt_ids: vec!["1".into()],
            }],
            essays: vec![EssayRecord {
                essay_id: "e1".into(),
                prompt_id: "1".into(),
                text: "Some text.".into(),
                trait_scores: [("CNT".to_string(), 4.0)].into(),
            }],
        }
    }

    #[test]
    fn valid_dataset_passes() {
        dataset().validate(None).unwrap();
        let manifest = [("1".to_string(), 1)].into();
        dataset().validate(Some(&manifest)).unwrap();
    }

    #[test]
    fn empty_text_names_row() {
        let mut d = dataset();
        d.essays[0].text = "  \n".into();
        assert_eq!(
            d.validate(None),
            Err(CorpusError::EmptyText {
                row: 1,
                essay_id: "e1".into()
            })
        );
    }

    #[test]
    fn out_of_range_and_off_grid() {
        let mut d = dataset();
        d.essays[0].trait_scores.insert("CNT".into(), 7.0);
        assert!(matches!(d.validate(None), Err(CorpusError::ScoreOutOfRange { .. })));
        d.essays[0].trait_scores.insert("CNT".into(), 3.5);
        assert!(matches!(d.validate(None), Err(CorpusError::OffGrid { .. })));
    }

    #[test]
    fn unknown_prompt_and_manifest() {
        let mut d = dataset();
        d.essays[0].prompt_id = "9".into();
        assert!(matches!(d.validate(None), Err(CorpusError::UnknownPrompt { .. })));
        let manifest = [("1".to_string(), 2)].into();
        assert!(matches!(dataset().validate(Some(&manifest)), Err(CorpusError::ManifestMismatch { .. })));
    }

    #[test]
    fn missing_rubric() {
        let mut d = dataset();
        d.rubrics.clear();
        assert!(matches!(d.validate(None), Err(CorpusError::MissingRubric { .. })));
    }

    #[test]
    fn half_step_grid() {
        let r = ScoreRange::new(1.0, 5.0, 0.5);
        assert_eq!(r.levels(), 9);
        assert!(r.on_grid(3.5));
        assert!(!r.on_grid(3.25));
        assert_eq!(r.index_of(5.0), Some(8));
    }

    #[test]
    fn text_normalization() {
        assert_eq!(normalize_text("a\r\nb\rc"), "a\nb\nc");
        assert_eq!(normalize_text("e\u{301}"), "\u{e9}");
    }

    #[test]
    fn prompt_features() {
        let mut p = prompt("1");
        assert_eq!(prompt_feature_vector(&p), [0.0, 350.0, 0.0, 8.0]);
        p.grade_level = 10;
        assert_eq!(prompt_feature_vector(&p), [0.0, 350.0, 0.0, 10.0]);
        p.essay_type = EssayType::SourceDependent;
        assert_eq!(prompt_feature_vector(&p)[0], 2.0);
    }

    #[test]
    fn digest_is_stable_and_sensitive() {
        let a = dataset();
        assert_eq!(a.digest(), dataset().digest());
        let mut b = dataset();
        b.essays[0].text.push('!');
        assert_ne!(a.digest(), b.digest());
    }
}
