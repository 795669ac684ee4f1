//! LLM requests, prompt templates, cache keys and the deterministic mock.
//!
//! Each template is split into an instruction (sent as the system message)
//! and user content (the filled-in fields after the `---` separator).

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{hex_lower, EssayType};

pub const GENERATION_MAX_TOKENS: u32 = 1024;
pub const RATING_MAX_TOKENS: u32 = 16;
pub const DIRECT_MAX_TOKENS: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    QuestionGeneration,
    QuestionAnswering,
    DirectScoring,
}

impl TemplateId {
    pub fn name(self) -> &'static str {
        match self {
            TemplateId::QuestionGeneration => "question_generation",
            TemplateId::QuestionAnswering => "question_answering",
            TemplateId::DirectScoring => "direct_scoring",
        }
    }

    pub fn version(self) -> &'static str {
        "1"
    }
}

/// Digest of model, template and every substitution value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CacheKey(pub String);

impl CacheKey {
    pub fn compute(model_id: &str, template: TemplateId, substitutions: &BTreeMap<String, String>) -> Self {
        let mut h = Sha256::new();
        let mut put = |s: &str| {
            h.update((s.len() as u64).to_le_bytes());
            h.update(s.as_bytes());
        };
        put(model_id);
        put(template.name());
        put(template.version());
        for (k, v) in substitutions {
            put(k);
            put(v);
        }
        CacheKey(hex_lower(&h.finalize()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub model_id: String,
    pub template: TemplateId,
    /// Named inputs; the cache key covers all of them.
    pub substitutions: BTreeMap<String, String>,
    pub instruction: String,
    pub user_content: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl CompletionRequest {
    pub fn key(&self) -> CacheKey {
        CacheKey::compute(&self.model_id, self.template, &self.substitutions)
    }

    pub fn field(&self, name: &str) -> Option<&str> {
        self.substitutions.get(name).map(String::as_str)
    }

    /// Same request marked as retry number `attempt`, which gives it a fresh cache key.
    pub fn retry(&self, attempt: u32) -> Self {
        let mut r = self.clone();
        r.substitutions.insert("attempt".into(), attempt.to_string());
        r
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if self.instruction.trim().is_empty() || self.user_content.trim().is_empty() {
            return Err(LlmError::InvalidRequest("instruction and user content must be non-empty".into()));
        }
        if !(self.temperature >= 0.0) || self.max_tokens == 0 {
            return Err(LlmError::InvalidRequest("temperature must be >= 0 and max_tokens > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LlmError {
    #[error("transport failure after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("backend returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("empty response")]
    EmptyResponse,
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("cache: {0}")]
    Cache(String),
    #[error("{0}")]
    Other(String),
}

/// Anything that turns a request into response text.
pub trait Gateway: Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError>;
}

impl<G: Gateway + ?Sized> Gateway for &G {
    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        (**self).complete(request)
    }
}

fn request(
    model_id: &str,
    template: TemplateId,
    substitutions: BTreeMap<String, String>,
    instruction: String,
    user_content: String,
    max_tokens: u32,
) -> CompletionRequest {
    CompletionRequest {
        model_id: model_id.to_string(),
        template,
        substitutions,
        instruction,
        user_content,
        temperature: 0.0,
        max_tokens,
    }
}

/// Ordinal form of a grade: 1st, 2nd, 3rd, 4th, ...
pub fn ordinal(n: u32) -> String {
    let suffix = match (n % 10, n % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    };
    format!("{n}{suffix}")
}

/// "8th" for one grade, "7th-10th" for a span.
pub fn grade_range(grades: &[u32]) -> String {
    let lo = grades.iter().copied().min().unwrap_or(0);
    let hi = grades.iter().copied().max().unwrap_or(0);
    if lo == hi {
        ordinal(lo)
    } else {
        format!("{}-{}", ordinal(lo), ordinal(hi))
    }
}

pub fn essay_type_text(t: EssayType) -> &'static str {
    t.label()
}

/// Question-generation request for one rubric.
pub fn question_generation_request(model_id: &str, trait_name: &str, grade_range: &str, rubric: &str) -> CompletionRequest {
    let instruction = format!(
        "Your task is to formulate a set of assessment questions from the given rubric to be used to evaluate the {trait_name} of essays written by {grade_range} grade students.\n\n\
Here are some instructions to follow:\n\
- Formulate the questions to rate the essay's aspects as High/Medium/Low\n\
- The questions should start with \"How would you rate ...\".\n\
- Keep the questions short and concise.\n\
- Each question should address only one scoring criterion from the rubric.\n\
- Structure your response in a numbered list from 1 to n, as follows:\n\
1- <question 1?>\n\
n- <question n?>"
    );
    let user_content = format!("Rubric: {rubric}\n\nQuestions: ");
    let subs = [
        ("trait", trait_name),
        ("grade_range", grade_range),
        ("rubric", rubric),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect();
    request(
        model_id,
        TemplateId::QuestionGeneration,
        subs,
        instruction,
        user_content,
        GENERATION_MAX_TOKENS,
    )
}

/// Inputs of one question-answering call.
#[derive(Debug, Clone, Copy)]
pub struct AnswerInputs<'a> {
    pub essay_id: &'a str,
    pub essay_type: EssayType,
    pub grade_level: u32,
    pub trait_name: &'a str,
    pub task_prompt: &'a str,
    pub essay_text: &'a str,
    pub question_id: &'a str,
    pub question: &'a str,
}

pub fn question_answering_request(model_id: &str, a: &AnswerInputs) -> CompletionRequest {
    let instruction = format!(
        "You will be given a {} essay written in response to the given prompt by a student in {}th grade. Your task is to answer an assessment question with high/medium/low to evaluate the {} of the essay.\n\
---\n\n\
Follow the following format.\n\
Prompt: the topic to which the essay responds.\n\
Essay: the essay you need to evaluate.\n\
Assessment Question: the question you need to answer about the essay.\n\
Answer (High, Medium, or Low): your answer to the question.",
        a.essay_type.label(),
        a.grade_level,
        a.trait_name
    );
    let user_content = format!(
        "Prompt: {}\n\nEssay: {}\n\nEvaluation Question: {}\n\nAnswer (High, Medium, or Low):",
        a.task_prompt, a.essay_text, a.question
    );
    let grade = a.grade_level.to_string();
    let subs = [
        ("essay_id", a.essay_id),
        ("essay_type", a.essay_type.label()),
        ("grade_level", grade.as_str()),
        ("trait", a.trait_name),
        ("task_prompt", a.task_prompt),
        ("essay_text", a.essay_text),
        ("question_id", a.question_id),
        ("question", a.question),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect();
    request(
        model_id,
        TemplateId::QuestionAnswering,
        subs,
        instruction,
        user_content,
        RATING_MAX_TOKENS,
    )
}

/// Inputs of one zero-shot scoring call.
#[derive(Debug, Clone, Copy)]
pub struct DirectInputs<'a> {
    pub essay_id: &'a str,
    pub essay_type: EssayType,
    pub trait_name: &'a str,
    pub task_prompt: &'a str,
    pub rubric: &'a str,
    pub essay_text: &'a str,
    pub score_min: f64,
    pub score_max: f64,
}

pub fn direct_scoring_request(model_id: &str, d: &DirectInputs) -> CompletionRequest {
    let instruction = format!(
        "You will be given a {} essay written in response to the given prompt. Your task is to score the {} of the essay as per the given rubric.\n\
---\n\n\
Follow the following format.\n\
Prompt: the topic to which the essay responds.\n\
Rubric: the grading rubric to score the essay.\n\
Essay: the essay you need to evaluate.\n\
Score: the score of the essay as per the given rubric (only one number).",
        d.essay_type.label(),
        d.trait_name
    );
    let user_content = format!(
        "Prompt: {}\n\nRubric: {}\n\nEssay: {}\n\nScore:",
        d.task_prompt, d.rubric, d.essay_text
    );
    let (lo, hi) = (format!("{}", d.score_min), format!("{}", d.score_max));
    let subs = [
        ("essay_id", d.essay_id),
        ("essay_type", d.essay_type.label()),
        ("trait", d.trait_name),
        ("task_prompt", d.task_prompt),
        ("trait_rubric", d.rubric),
        ("essay_text", d.essay_text),
        ("score_min", lo.as_str()),
        ("score_max", hi.as_str()),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect();
    request(
        model_id,
        TemplateId::DirectScoring,
        subs,
        instruction,
        user_content,
        DIRECT_MAX_TOKENS,
    )
}

/// Deterministic stand-in for a chat model.
///
/// Generation requests get a numbered list of questions. Answer requests get
/// a High/Medium/Low rating from a seeded hash of (essay id, question id),
/// unless the essay has a planted latent quality in `[0, 1]`: then question
/// `i` of `n` answers `1 + floor(3 * latent + offset_i)` clamped to 1..3,
/// with offsets spread evenly over `(-1, 1)`, so the summed rating is a
/// staircase in the latent with thresholds across the whole unit interval. Direct-scoring requests map the latent (or the hash) onto the
/// declared score range.
#[derive(Debug, Default)]
pub struct MockLlm {
    pub seed: u64,
    /// Questions per trait; traits not listed get [`MockLlm::default_questions`].
    pub questions: BTreeMap<String, Vec<String>>,
    /// Hidden essay quality by essay id.
    pub planted: BTreeMap<String, f64>,
    /// Traits whose ratings follow the planted latent. Empty means all traits.
    pub planted_traits: Vec<String>,
    /// Generation responses that are returned verbatim, by trait.
    pub raw_generation: BTreeMap<String, String>,
    calls: AtomicUsize,
}

impl Clone for MockLlm {
    fn clone(&self) -> Self {
        MockLlm {
            seed: self.seed,
            questions: self.questions.clone(),
            planted: self.planted.clone(),
            planted_traits: self.planted_traits.clone(),
            raw_generation: self.raw_generation.clone(),
            calls: AtomicUsize::new(self.calls()),
        }
    }
}

impl MockLlm {
    pub fn new(seed: u64) -> Self {
        MockLlm {
            seed,
            ..Default::default()
        }
    }

    pub fn with_planted(mut self, planted: BTreeMap<String, f64>) -> Self {
        self.planted = planted;
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn default_questions(trait_name: &str) -> Vec<String> {
        [
            "How would you rate the overall {t} of the essay?",
            "How would you rate how well the essay's {t} fits the task?",
            "How would you rate the consistency of the {t} across the essay?",
            "How would you rate the {t} in the opening and closing?",
            "How would you rate the {t} relative to grade-level expectations?",
        ]
        .iter()
        .map(|q| q.replace("{t}", trait_name))
        .collect()
    }

    fn hash(&self, parts: &[&str]) -> u64 {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        for p in parts {
            h.update((p.len() as u64).to_le_bytes());
            h.update(p.as_bytes());
        }
        let d = h.finalize();
        u64::from_le_bytes(d[..8].try_into().unwrap())
    }

    fn latent_for(&self, req: &CompletionRequest) -> Option<f64> {
        let trait_name = req.field("trait").unwrap_or("");
        if !self.planted_traits.is_empty() && !self.planted_traits.iter().any(|t| t == trait_name) {
            return None;
        }
        self.planted.get(req.field("essay_id")?).copied()
    }

    fn generation(&self, req: &CompletionRequest) -> String {
        let t = req.field("trait").unwrap_or("quality");
        if let Some(raw) = self.raw_generation.get(t) {
            return raw.clone();
        }
        let qs = self.questions.get(t).cloned().unwrap_or_else(|| Self::default_questions(t));
        let mut out = String::from("Here are the questions:\n");
        for (i, q) in qs.iter().enumerate() {
            out.push_str(&format!("{}- {}\n", i + 1, q));
        }
        out
    }

    fn rating(&self, req: &CompletionRequest) -> String {
        let essay = req.field("essay_id").unwrap_or("");
        let qid = req.field("question_id").unwrap_or("");
        let h = self.hash(&[essay, qid]);
        let level = match self.latent_for(req) {
            Some(latent) => {
                let (i, n) = question_position(qid);
                let offset = 2.0 * (i as f64 + 0.5) / n as f64 - 1.0;
                (libm::floor(3.0 * latent.clamp(0.0, 1.0) + offset) as i64).clamp(0, 2) + 1
            }
            None => (h % 3) as i64 + 1,
        };
        let word = match level {
            3 => "High",
            2 => "Medium",
            _ => "Low",
        };
        match (h >> 8) % 4 {
            0 => String::from(word),
            1 => format!("{word}."),
            2 => format!("Answer: {word}"),
            _ => format!("{}\n", word.to_lowercase()),
        }
    }

    fn direct(&self, req: &CompletionRequest) -> String {
        let lo: f64 = req.field("score_min").and_then(|v| v.parse().ok()).unwrap_or(0.0);
        let hi: f64 = req.field("score_max").and_then(|v| v.parse().ok()).unwrap_or(6.0);
        let essay = req.field("essay_id").unwrap_or("");
        let frac = match self.latent_for(req) {
            Some(latent) => latent.clamp(0.0, 1.0),
            None => (self.hash(&[essay, "direct"]) % 1000) as f64 / 999.0,
        };
        format!("Score: {}", libm::round(lo + frac * (hi - lo)))
    }
}

/// Position and count encoded in a question id of the form `...:i/n` or `...:i`.
fn question_position(qid: &str) -> (usize, usize) {
    let tail = qid.rsplit(':').next().unwrap_or("");
    let mut parts = tail.split('/');
    let i: usize = parts.next().and_then(|v| v.parse().ok()).unwrap_or(1);
    let n: usize = parts.next().and_then(|v| v.parse().ok()).unwrap_or(1);
    (i.saturating_sub(1).min(n.max(1) - 1), n.max(1))
}

impl Gateway for MockLlm {
    fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        req.validate()?;
        self.calls.fetch_add(1, Ordering::SeqCst);
        Ok(match req.template {
            TemplateId::QuestionGeneration => self.generation(req),
            TemplateId::QuestionAnswering => self.rating(req),
            TemplateId::DirectScoring => self.direct(req),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs<'a>(question: &'a str) -> AnswerInputs<'a> {
        AnswerInputs {
            essay_id: "e1",
            essay_type: EssayType::Persuasive,
            grade_level: 8,
            trait_name: "organization",
            task_prompt: "Write a letter.",
            essay_text: "Dear editor.",
            question_id: "r1:1/5",
            question,
        }
    }

    #[test]
    fn keys_track_substitutions() {
        let a = question_answering_request("m", &inputs("How would you rate the flow?"));
        let b = question_answering_request("m", &inputs("How would you rate the flow?"));
        let c = question_answering_request("m", &inputs("How would you rate the tone?"));
        assert_eq!(a.key(), b.key());
        assert_ne!(a.key(), c.key());
        assert_ne!(a.key(), a.retry(1).key());
        assert_ne!(a.key(), question_answering_request("m2", &inputs("How would you rate the flow?")).key());
    }

    #[test]
    fn templates_render_fields() {
        let r = question_generation_request("m", "organization", "7th-10th", "Score 6: strong.");
        assert!(r.instruction.starts_with("Your task is to formulate a set of assessment questions"));
        assert!(r.instruction.contains("evaluate the organization of essays written by 7th-10th grade students."));
        assert_eq!(r.user_content, "Rubric: Score 6: strong.\n\nQuestions: ");
        assert_eq!(r.max_tokens, GENERATION_MAX_TOKENS);
        let a = question_answering_request("m", &inputs("Q?"));
        assert!(a.instruction.contains("by a student in 8th grade"));
        assert!(a.user_content.ends_with("Evaluation Question: Q?\n\nAnswer (High, Medium, or Low):"));
        assert_eq!((a.temperature, a.max_tokens), (0.0, RATING_MAX_TOKENS));
    }

    #[test]
    fn ordinals() {
        assert_eq!(ordinal(1), "1st");
        assert_eq!(ordinal(12), "12th");
        assert_eq!(ordinal(22), "22nd");
        assert_eq!(grade_range(&[10, 7, 8]), "7th-10th");
        assert_eq!(grade_range(&[8]), "8th");
    }

    #[test]
    fn mock_is_pure_and_counts_calls() {
        let m = MockLlm::new(3);
        let r = question_answering_request("m", &inputs("Q?"));
        assert_eq!(m.complete(&r).unwrap(), m.complete(&r).unwrap());
        assert_eq!(m.calls(), 2);
    }

    #[test]
    fn planted_ratings_rise_with_latent() {
        let mut planted = BTreeMap::new();
        planted.insert("good".to_string(), 0.95);
        planted.insert("poor".to_string(), 0.05);
        let m = MockLlm::new(0).with_planted(planted);
        let level = |essay: &str, i: usize| {
            let qid = format!("r:{i}/5");
            let mut a = inputs("Q?");
            a.essay_id = essay;
            a.question_id = &qid;
            let text = m.complete(&question_answering_request("m", &a)).unwrap().to_lowercase();
            if text.contains("high") {
                3
            } else if text.contains("medium") {
                2
            } else {
                1
            }
        };
        for i in 1..=5 {
            assert_eq!(level("good", i), 3);
            assert_eq!(level("poor", i), 1);
        }
    }
}
