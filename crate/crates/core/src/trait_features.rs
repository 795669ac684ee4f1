//! Rubric questions and their High/Medium/Low answers.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Dataset, EssayRecord, PromptSpec, RubricDoc};
use crate::features::{FeatureCategory, FeatureColumn, FeatureMatrix};
use crate::llm::{self, AnswerInputs, CompletionRequest, Gateway, LlmError, TemplateId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Rating {
    Low,
    Medium,
    High,
}

impl Rating {
    pub fn numeric(self) -> u8 {
        match self {
            Rating::High => 3,
            Rating::Medium => 2,
            Rating::Low => 1,
        }
    }

    pub fn from_numeric(v: u8) -> Option<Rating> {
        match v {
            3 => Some(Rating::High),
            2 => Some(Rating::Medium),
            1 => Some(Rating::Low),
            _ => None,
        }
    }

    fn from_word(w: &str) -> Option<Rating> {
        match w.to_ascii_lowercase().as_str() {
            "high" => Some(Rating::High),
            "medium" => Some(Rating::Medium),
            "low" => Some(Rating::Low),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("no high/medium/low answer in {0:?}")]
    NoRating(String),
    #[error("ambiguous answer {0:?}: different levels at the first position")]
    AmbiguousRating(String),
    #[error("unparseable question list")]
    NoQuestions,
    #[error("question number {0} appears twice")]
    DuplicateNumber(u32),
}

/// Words that join alternatives into one answer position ("high/low", "medium or high").
const JOINERS: &[&str] = &["/", "|", "-", "\u{2013}", "or", "to", "and", "&"];

/// Template echoes a model may repeat before answering.
const ECHOES: &[&str] = &["answer (high, medium, or low):", "(high, medium, or low)", "high/medium/low"];

/// First standalone, case-insensitive high/medium/low in `text`.
///
/// Echoes of the answer format are skipped. Levels joined by `/`, `|`, `-`,
/// `or`, `to`, `and` at the first answer position are a tie and an error.
pub fn parse_rating(text: &str) -> Result<Rating, ParseError> {
    let mut lowered = text.to_lowercase();
    for echo in ECHOES {
        while let Some(i) = lowered.find(echo) {
            lowered.replace_range(i..i + echo.len(), &" ".repeat(echo.len()));
        }
    }
    // Word tokens and single punctuation tokens, in order.
    let mut tokens: Vec<&str> = Vec::new();
    let mut start = None;
    for (i, ch) in lowered.char_indices() {
        let word = ch.is_alphanumeric() || ch == '_';
        match (word, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                tokens.push(&lowered[s..i]);
                start = None;
            }
            _ => {}
        }
        if !word && !ch.is_whitespace() {
            tokens.push(&lowered[i..i + ch.len_utf8()]);
        }
    }
    if let Some(s) = start {
        tokens.push(&lowered[s..]);
    }
    let Some(first) = tokens.iter().position(|t| Rating::from_word(t).is_some()) else {
        return Err(ParseError::NoRating(text.to_string()));
    };
    let level = Rating::from_word(tokens[first]).unwrap();
    let mut k = first + 1;
    while k + 1 < tokens.len() && JOINERS.contains(&tokens[k]) {
        match Rating::from_word(tokens[k + 1]) {
            Some(other) if other != level => return Err(ParseError::AmbiguousRating(text.to_string())),
            Some(_) => k += 2,
            None => break,
        }
    }
    Ok(level)
}

/// Numbered lines `1- text` (also `1.`, `1)`, `1:`), in order of appearance.
pub fn parse_question_list(text: &str) -> Result<Vec<String>, ParseError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim().trim_start_matches(['*', '#', '>']).trim_start();
        let digits = line.chars().take_while(char::is_ascii_digit).count();
        if digits == 0 || digits > 3 {
            continue;
        }
        let rest = line[digits..].trim_start();
        let Some(sep) = rest.chars().next().filter(|c| matches!(c, '-' | '.' | ')' | ':' | '\u{2013}')) else {
            continue;
        };
        let body = rest[sep.len_utf8()..].trim().trim_matches('*').trim();
        if body.is_empty() {
            continue;
        }
        let n: u32 = line[..digits].parse().unwrap();
        if !seen.insert(n) {
            return Err(ParseError::DuplicateNumber(n));
        }
        out.push(body.to_string());
    }
    if out.is_empty() {
        return Err(ParseError::NoQuestions);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssessmentQuestion {
    pub question_id: String,
    #[serde(rename = "trait")]
    pub trait_name: String,
    pub rubric_id: String,
    pub ordinal: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionBatch {
    pub model_id: String,
    pub template_version: String,
    pub rubric_id: String,
    #[serde(rename = "trait")]
    pub trait_name: String,
    pub questions: Vec<AssessmentQuestion>,
    pub raw_response: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraitError {
    #[error("rubric {rubric_id}: {source}")]
    Questions { rubric_id: String, source: ParseError },
    #[error("essay {essay_id}, question {question_id}: {source}; raw response {raw:?}")]
    Answer {
        essay_id: String,
        question_id: String,
        raw: String,
        source: ParseError,
    },
    #[error("rubric {rubric_id}: {source}")]
    GatewayQuestions { rubric_id: String, source: LlmError },
    #[error("essay {essay_id}, question {question_id}: {source}")]
    GatewayAnswer {
        essay_id: String,
        question_id: String,
        source: LlmError,
    },
    #[error("essay {essay_id} references unknown prompt {prompt_id}")]
    UnknownPrompt { essay_id: String, prompt_id: String },
}

pub fn question_id(rubric_id: &str, ordinal: usize, n: usize) -> String {
    format!("{rubric_id}:{ordinal}/{n}")
}

/// Grade span of the prompts a rubric covers, as used in the generation template.
pub fn rubric_grade_range(dataset: &Dataset, rubric: &RubricDoc) -> String {
    let grades: Vec<u32> = rubric
        .prompt_ids
        .iter()
        .filter_map(|p| dataset.prompt(p))
        .map(|p| p.grade_level)
        .collect();
    llm::grade_range(&grades)
}

/// Generates and parses one rubric's questions; an unparseable reply is retried once.
pub fn generate_questions(
    gateway: &dyn Gateway,
    model_id: &str,
    rubric: &RubricDoc,
    grade_range: &str,
) -> Result<QuestionBatch, TraitError> {
    let base = llm::question_generation_request(model_id, &rubric.trait_name, grade_range, &rubric.body);
    let call = |req: &CompletionRequest| {
        gateway.complete(req).map_err(|source| TraitError::GatewayQuestions {
            rubric_id: rubric.rubric_id.clone(),
            source,
        })
    };
    let mut raw = call(&base)?;
    let mut parsed = parse_question_list(&raw);
    if parsed == Err(ParseError::NoQuestions) {
        raw = call(&base.retry(1))?;
        parsed = parse_question_list(&raw);
    }
    let texts = parsed.map_err(|source| TraitError::Questions {
        rubric_id: rubric.rubric_id.clone(),
        source,
    })?;
    let n = texts.len();
    let questions = texts
        .into_iter()
        .enumerate()
        .map(|(i, text)| AssessmentQuestion {
            question_id: question_id(&rubric.rubric_id, i + 1, n),
            trait_name: rubric.trait_name.clone(),
            rubric_id: rubric.rubric_id.clone(),
            ordinal: i + 1,
            text,
        })
        .collect();
    Ok(QuestionBatch {
        model_id: model_id.to_string(),
        template_version: TemplateId::QuestionGeneration.version().to_string(),
        rubric_id: rubric.rubric_id.clone(),
        trait_name: rubric.trait_name.clone(),
        questions,
        raw_response: raw,
    })
}

/// What to do with an answer that stays unparseable after one retry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Imputation {
    /// Record Medium (2).
    #[default]
    Medium,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Answer {
    pub rating: Rating,
    pub imputed: bool,
    pub raw: String,
}

pub fn answer_request(model_id: &str, essay: &EssayRecord, prompt: &PromptSpec, q: &AssessmentQuestion) -> CompletionRequest {
    llm::question_answering_request(
        model_id,
        &AnswerInputs {
            essay_id: &essay.essay_id,
            essay_type: prompt.essay_type,
            grade_level: prompt.grade_level,
            trait_name: &q.trait_name,
            task_prompt: &prompt.task_description,
            essay_text: &essay.text,
            question_id: &q.question_id,
            question: &q.text,
        },
    )
}

pub fn answer_question(
    gateway: &dyn Gateway,
    model_id: &str,
    essay: &EssayRecord,
    prompt: &PromptSpec,
    q: &AssessmentQuestion,
    imputation: Imputation,
) -> Result<Answer, TraitError> {
    let req = answer_request(model_id, essay, prompt, q);
    let call = |req: &CompletionRequest| {
        gateway.complete(req).map_err(|source| TraitError::GatewayAnswer {
            essay_id: essay.essay_id.clone(),
            question_id: q.question_id.clone(),
            source,
        })
    };
    let raw = call(&req)?;
    if let Ok(rating) = parse_rating(&raw) {
        return Ok(Answer {
            rating,
            imputed: false,
            raw,
        });
    }
    let raw = call(&req.retry(1))?;
    match parse_rating(&raw) {
        Ok(rating) => Ok(Answer {
            rating,
            imputed: false,
            raw,
        }),
        Err(_) if imputation == Imputation::Medium => Ok(Answer {
            rating: Rating::Medium,
            imputed: true,
            raw,
        }),
        Err(source) => Err(TraitError::Answer {
            essay_id: essay.essay_id.clone(),
            question_id: q.question_id.clone(),
            raw,
            source,
        }),
    }
}

/// Questions from the rubrics that assess `trait_name` on any source prompt,
/// ordered by rubric id then ordinal.
pub fn fold_questions<'a>(
    dataset: &Dataset,
    batches: &'a [QuestionBatch],
    trait_name: &str,
    source_prompts: &[String],
) -> Vec<&'a AssessmentQuestion> {
    let rubric_ids: BTreeSet<&str> = dataset
        .rubrics
        .iter()
        .filter(|r| r.trait_name == trait_name && r.prompt_ids.iter().any(|p| source_prompts.contains(p)))
        .map(|r| r.rubric_id.as_str())
        .collect();
    let mut chosen: Vec<&QuestionBatch> = batches
        .iter()
        .filter(|b| b.trait_name == trait_name && rubric_ids.contains(b.rubric_id.as_str()))
        .collect();
    chosen.sort_by(|a, b| a.rubric_id.cmp(&b.rubric_id));
    chosen.iter().flat_map(|b| b.questions.iter()).collect()
}

pub fn question_column(q: &AssessmentQuestion) -> FeatureColumn {
    FeatureColumn::new(format!("{}:q{}", q.rubric_id, q.ordinal), FeatureCategory::TraitSpecific)
}

/// Per-column count of imputed cells.
pub type ImputationReport = BTreeMap<String, usize>;

/// Assembles a trait block from answers addressed by (row, column).
pub fn assemble_trait_matrix(
    row_ids: &[String],
    questions: &[&AssessmentQuestion],
    answers: &[Answer],
) -> (FeatureMatrix, ImputationReport) {
    let columns: Vec<FeatureColumn> = questions.iter().map(|q| question_column(q)).collect();
    let mut report: ImputationReport = columns.iter().map(|c| (c.name.clone(), 0)).collect();
    let n = questions.len();
    let mut m = FeatureMatrix::new(columns.clone());
    for (r, id) in row_ids.iter().enumerate() {
        let row: Vec<f64> = (0..n)
            .map(|c| {
                let a = &answers[r * n + c];
                if a.imputed {
                    *report.get_mut(&columns[c].name).unwrap() += 1;
                }
                f64::from(a.rating.numeric())
            })
            .collect();
        m.push_row(id.clone(), &row).expect("row width matches question count");
    }
    (m, report)
}

/// Answers every question for every essay, row-major.
pub fn extract_trait_matrix(
    gateway: &dyn Gateway,
    model_id: &str,
    dataset: &Dataset,
    essays: &[&EssayRecord],
    questions: &[&AssessmentQuestion],
    imputation: Imputation,
) -> Result<(FeatureMatrix, ImputationReport), TraitError> {
    let mut answers = Vec::with_capacity(essays.len() * questions.len());
    for e in essays {
        let prompt = dataset.prompt(&e.prompt_id).ok_or_else(|| TraitError::UnknownPrompt {
            essay_id: e.essay_id.clone(),
            prompt_id: e.prompt_id.clone(),
        })?;
        for q in questions {
            answers.push(answer_question(gateway, model_id, e, prompt, q, imputation)?);
        }
    }
    let ids: Vec<String> = essays.iter().map(|e| e.essay_id.clone()).collect();
    Ok(assemble_trait_matrix(&ids, questions, &answers))
}
