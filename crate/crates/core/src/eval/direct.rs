//! Zero-shot direct scoring baseline.

use alloc::string::ToString;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::folds::FoldPlan;
use super::harness::{grouped_qwk, CvReport, FoldResult, LeakageCounters, Prediction};
use super::EvalError;
use crate::corpus::{Dataset, EssayRecord, PromptSpec, RubricDoc, ScoreRange};
use crate::llm::{direct_scoring_request, DirectInputs, Gateway};

/// What to do when a reply holds no number after one retry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DirectFallback {
    #[default]
    Fail,
    /// The grid median, ties rounded up.
    Median,
}

/// First decimal number in `text`, with an optional leading minus sign.
pub fn first_number(text: &str) -> Option<f64> {
    let b = text.as_bytes();
    let mut i = 0;
    while i < b.len() {
        if b[i].is_ascii_digit() {
            let mut start = i;
            if start > 0 && b[start - 1] == b'-' {
                start -= 1;
            }
            let mut end = i;
            while end < b.len() && b[end].is_ascii_digit() {
                end += 1;
            }
            if end + 1 < b.len() && b[end] == b'.' && b[end + 1].is_ascii_digit() {
                end += 1;
                while end < b.len() && b[end].is_ascii_digit() {
                    end += 1;
                }
            }
            return text[start..end].parse().ok();
        }
        i += 1;
    }
    None
}

/// Rounds to the nearest grid point (half away from zero) and clamps.
pub fn snap_to_grid(value: f64, grid: &ScoreRange) -> f64 {
    let k = libm::round((value - grid.min) / grid.step);
    grid.min + k.clamp(0.0, (grid.levels() - 1) as f64) * grid.step
}

pub fn grid_median(grid: &ScoreRange) -> f64 {
    let k = libm::round((grid.levels() - 1) as f64 / 2.0);
    grid.min + k * grid.step
}

/// Scores one essay with the zero-shot template; returns (score, imputed).
#[allow(clippy::too_many_arguments)]
pub fn llm_direct_score(
    gateway: &dyn Gateway,
    model_id: &str,
    essay: &EssayRecord,
    prompt: &PromptSpec,
    rubric: &RubricDoc,
    trait_name: &str,
    fallback: DirectFallback,
) -> Result<(f64, bool), EvalError> {
    let grid = *prompt
        .score_ranges
        .get(trait_name)
        .ok_or_else(|| EvalError::UnknownTrait(trait_name.to_string()))?;
    let req = direct_scoring_request(
        model_id,
        &DirectInputs {
            essay_id: &essay.essay_id,
            essay_type: prompt.essay_type,
            trait_name,
            task_prompt: &prompt.task_description,
            rubric: &rubric.body,
            essay_text: &essay.text,
            score_min: grid.min,
            score_max: grid.max,
        },
    );
    let raw = gateway.complete(&req)?;
    if let Some(v) = first_number(&raw) {
        return Ok((snap_to_grid(v, &grid), false));
    }
    let raw = gateway.complete(&req.retry(1))?;
    match (first_number(&raw), fallback) {
        (Some(v), _) => Ok((snap_to_grid(v, &grid), false)),
        (None, DirectFallback::Median) => Ok((grid_median(&grid), true)),
        (None, DirectFallback::Fail) => Err(EvalError::DirectParse {
            essay_id: essay.essay_id.clone(),
            raw,
        }),
    }
}

/// Scores each fold's target essays directly; no training involved.
pub fn run_llm_direct(
    dataset: &Dataset,
    plans: &[FoldPlan],
    trait_name: &str,
    gateway: &dyn Gateway,
    model_id: &str,
    fallback: DirectFallback,
) -> Result<CvReport, EvalError> {
    let grids = dataset
        .prompts
        .iter()
        .filter_map(|p| p.score_ranges.get(trait_name).map(|r| (p.prompt_id.clone(), *r)))
        .collect();
    let mut folds = Vec::new();
    for plan in plans {
        let targets: Vec<&EssayRecord> = dataset
            .trait_view(trait_name)
            .into_iter()
            .filter(|e| plan.target.contains(&e.prompt_id))
            .collect();
        if targets.is_empty() {
            continue;
        }
        let mut predictions = Vec::with_capacity(targets.len());
        for e in &targets {
            let prompt = dataset.prompt(&e.prompt_id).ok_or_else(|| EvalError::UnknownPrompt(e.prompt_id.clone()))?;
            let rubric = dataset.rubric_for(trait_name, &e.prompt_id).ok_or_else(|| EvalError::MissingRubric {
                trait_name: trait_name.to_string(),
                prompt_id: e.prompt_id.clone(),
            })?;
            let (score, _) = llm_direct_score(gateway, model_id, e, prompt, rubric, trait_name, fallback)?;
            predictions.push(Prediction {
                essay_id: e.essay_id.clone(),
                prompt_id: e.prompt_id.clone(),
                scaled: score,
                predicted: score,
                gold: e.trait_scores[trait_name],
            });
        }
        let tp: Vec<&str> = predictions.iter().map(|p| p.prompt_id.as_str()).collect();
        let pred: Vec<f64> = predictions.iter().map(|p| p.predicted).collect();
        let gold: Vec<f64> = predictions.iter().map(|p| p.gold).collect();
        let (q, per_prompt_qwk) = grouped_qwk(&tp, &pred, &gold, &grids)?;
        folds.push(FoldResult {
            fold_id: plan.fold_id.clone(),
            trait_name: trait_name.to_string(),
            target_prompts: plan.target.clone(),
            n_source: 0,
            n_target: targets.len(),
            category_sizes: Default::default(),
            qwk: q,
            per_prompt_qwk,
            hyperparameters: None,
            leakage: LeakageCounters::default(),
            artifacts: None,
            predictions,
        });
    }
    Ok(CvReport::aggregate(trait_name, "llm-d", folds))
}
