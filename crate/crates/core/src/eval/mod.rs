//! Metrics and cross-validation.

pub mod direct;
pub mod folds;
pub mod harness;
pub mod qwk;
pub mod store;

use alloc::format;
use alloc::string::String;

use thiserror::Error;

pub use direct::{first_number, llm_direct_score, run_llm_direct, DirectFallback};
pub use folds::{ellipse_plan, grouped_plan, leave_one_prompt_out, validate_plan, FoldError, FoldPlan};
pub use harness::{
    ablation, run_cross_validation, run_fold, AblationRow, CvReport, FeatureSet, FoldResult, HyperMode,
    LeakageCounters, RunConfig, TrainingArtifacts,
};
pub use qwk::{qwk, qwk_indices, QwkError};
pub use store::{FeatureSource, FeatureStore};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("missing {what} for essay {essay_id}; run `trates extract-features` first")]
    MissingFeatures { what: String, essay_id: String },
    #[error("unknown prompt {0}")]
    UnknownPrompt(String),
    #[error("no prompt declares trait {0}")]
    UnknownTrait(String),
    #[error("no rubric for trait {trait_name} on prompt {prompt_id}")]
    MissingRubric { trait_name: String, prompt_id: String },
    #[error("fold {fold}: too few source essays scored on {trait_name}")]
    NoSourceRows { fold: String, trait_name: String },
    #[error("trait {0}: the configured feature set selects no columns")]
    NoFeatures(String),
    #[error("essay {essay_id}: no number in direct-scoring reply {raw:?}")]
    DirectParse { essay_id: String, raw: String },
    #[error("fold {fold}: {message}")]
    InFold { fold: String, message: String },
    #[error(transparent)]
    Scale(#[from] crate::scaling::ScaleError),
    #[error(transparent)]
    Matrix(#[from] crate::features::MatrixError),
    #[error(transparent)]
    Tune(#[from] crate::tuning::TuneError),
    #[error(transparent)]
    Regressor(#[from] crate::regressor::RegressorError),
    #[error(transparent)]
    Trait(#[from] crate::trait_features::TraitError),
    #[error(transparent)]
    Qwk(#[from] QwkError),
    #[error(transparent)]
    Fold(#[from] FoldError),
    #[error(transparent)]
    Llm(#[from] crate::llm::LlmError),
}

impl EvalError {
    /// Wraps the error with the fold it came from.
    pub fn in_fold(self, fold: &str) -> EvalError {
        match self {
            e @ EvalError::InFold { .. } => e,
            e => EvalError::InFold {
                fold: fold.into(),
                message: format!("{e}"),
            },
        }
    }
}
