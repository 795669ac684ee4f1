//! Extracted features, addressed by essay and question.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::{Dataset, EssayRecord};
use crate::features::{generic_columns, FeatureMatrix};
use crate::llm::Gateway;
use crate::text::GenericExtractor;
use crate::trait_features::{
    answer_question, assemble_trait_matrix, fold_questions, generate_questions, rubric_grade_range, Answer,
    AssessmentQuestion, Imputation, QuestionBatch, Rating,
};

/// Where a fold's feature blocks come from.
pub trait FeatureSource {
    fn question_batches(&self) -> &[QuestionBatch];

    /// One row per essay, one column per question, values in {1, 2, 3}.
    fn trait_block(&self, questions: &[&AssessmentQuestion], essays: &[&EssayRecord]) -> Result<FeatureMatrix, EvalError>;

    /// One row per essay over the generic registry.
    fn generic_block(&self, essays: &[&EssayRecord]) -> Result<FeatureMatrix, EvalError>;
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureStore {
    pub model_id: String,
    pub batches: Vec<QuestionBatch>,
    /// essay id -> question id -> rating (1..3).
    pub answers: BTreeMap<String, BTreeMap<String, u8>>,
    /// question id -> number of imputed answers.
    pub imputed: BTreeMap<String, usize>,
    /// essay id -> generic registry vector.
    pub generic: BTreeMap<String, Vec<f64>>,
}

impl FeatureStore {
    /// Generates questions for every rubric of `traits`.
    pub fn generate_all_questions(
        &mut self,
        dataset: &Dataset,
        gateway: &dyn Gateway,
        traits: &[String],
    ) -> Result<(), EvalError> {
        for rubric in dataset.rubrics.iter().filter(|r| traits.contains(&r.trait_name)) {
            if self.batches.iter().any(|b| b.rubric_id == rubric.rubric_id) {
                continue;
            }
            let batch = generate_questions(gateway, &self.model_id, rubric, &rubric_grade_range(dataset, rubric))?;
            self.batches.push(batch);
        }
        Ok(())
    }

    /// Answers every question of each trait for every essay scored on it.
    pub fn answer_all(
        &mut self,
        dataset: &Dataset,
        gateway: &dyn Gateway,
        traits: &[String],
        imputation: Imputation,
    ) -> Result<(), EvalError> {
        for t in traits {
            let questions: Vec<AssessmentQuestion> =
                self.batches.iter().filter(|b| &b.trait_name == t).flat_map(|b| b.questions.clone()).collect();
            for e in dataset.trait_view(t) {
                let prompt = dataset.prompt(&e.prompt_id).ok_or_else(|| EvalError::UnknownPrompt(e.prompt_id.clone()))?;
                for q in &questions {
                    if self.answers.get(&e.essay_id).is_some_and(|m| m.contains_key(&q.question_id)) {
                        continue;
                    }
                    let a = answer_question(gateway, &self.model_id, e, prompt, q, imputation)?;
                    self.record(&e.essay_id, &q.question_id, &a);
                }
            }
        }
        Ok(())
    }

    pub fn record(&mut self, essay_id: &str, question_id: &str, answer: &Answer) {
        self.answers
            .entry(essay_id.to_string())
            .or_default()
            .insert(question_id.to_string(), answer.rating.numeric());
        if answer.imputed {
            *self.imputed.entry(question_id.to_string()).or_default() += 1;
        }
    }

    pub fn extract_generic(&mut self, dataset: &Dataset, extractor: &GenericExtractor) {
        for e in &dataset.essays {
            if !self.generic.contains_key(&e.essay_id) {
                self.generic.insert(e.essay_id.clone(), extractor.extract(&e.text));
            }
        }
    }

    /// Questions, answers and generic features for `traits`, in one pass.
    pub fn extract(
        dataset: &Dataset,
        gateway: &dyn Gateway,
        model_id: &str,
        traits: &[String],
        extractor: Option<&GenericExtractor>,
        imputation: Imputation,
    ) -> Result<Self, EvalError> {
        let mut s = FeatureStore {
            model_id: model_id.to_string(),
            ..Default::default()
        };
        s.generate_all_questions(dataset, gateway, traits)?;
        s.answer_all(dataset, gateway, traits, imputation)?;
        if let Some(x) = extractor {
            s.extract_generic(dataset, x);
        }
        Ok(s)
    }

    pub fn fold_questions<'a>(
        &'a self,
        dataset: &Dataset,
        trait_name: &str,
        source: &[String],
    ) -> Vec<&'a AssessmentQuestion> {
        fold_questions(dataset, &self.batches, trait_name, source)
    }
}

impl FeatureSource for FeatureStore {
    fn question_batches(&self) -> &[QuestionBatch] {
        &self.batches
    }

    fn trait_block(&self, questions: &[&AssessmentQuestion], essays: &[&EssayRecord]) -> Result<FeatureMatrix, EvalError> {
        let mut answers = Vec::with_capacity(essays.len() * questions.len());
        for e in essays {
            let row = self.answers.get(&e.essay_id);
            for q in questions {
                let v = row.and_then(|r| r.get(&q.question_id)).ok_or_else(|| EvalError::MissingFeatures {
                    what: alloc::format!("answer to {}", q.question_id),
                    essay_id: e.essay_id.clone(),
                })?;
                answers.push(Answer {
                    rating: Rating::from_numeric(*v).unwrap_or(Rating::Medium),
                    imputed: false,
                    raw: String::new(),
                });
            }
        }
        let ids: Vec<String> = essays.iter().map(|e| e.essay_id.clone()).collect();
        Ok(assemble_trait_matrix(&ids, questions, &answers).0)
    }

    fn generic_block(&self, essays: &[&EssayRecord]) -> Result<FeatureMatrix, EvalError> {
        let mut m = FeatureMatrix::new(generic_columns());
        for e in essays {
            let v = self.generic.get(&e.essay_id).ok_or_else(|| EvalError::MissingFeatures {
                what: "generic features".into(),
                essay_id: e.essay_id.clone(),
            })?;
            m.push_row(e.essay_id.clone(), v)?;
        }
        Ok(m)
    }
}
