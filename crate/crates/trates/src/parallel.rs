//! Thread-pool helpers: parallel training and cache warm-up.

use rayon::prelude::*;
use trates_core::corpus::Dataset;
use trates_core::eval::llm_direct_score;
use trates_core::eval::DirectFallback;
use trates_core::llm::Gateway;
use trates_core::regressor::{self, Hyperparameters, RegressorError, Samples, TrainedRegressor};
use trates_core::trait_features::{answer_question, AssessmentQuestion, Imputation};
use trates_core::tuning::TrainBatch;

/// Trains candidate configurations concurrently on the current rayon pool.
/// Results come back in input order, so outcomes match serial training.
pub struct ParallelTrainer;

impl TrainBatch for ParallelTrainer {
    fn train_all(
        &self,
        configs: &[Hyperparameters],
        train: Samples<'_>,
        val: Samples<'_>,
    ) -> Vec<Result<TrainedRegressor, RegressorError>> {
        configs.par_iter().map(|hp| regressor::train(hp, train, val)).collect()
    }
}

pub fn pool(threads: usize) -> anyhow::Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(threads).build()?)
}

/// Answers every (essay, question) pair through `gateway` so the serial pass
/// afterwards reads from the cache. Failures are left for that pass to report.
pub fn warm_answers(
    pool: &rayon::ThreadPool,
    dataset: &Dataset,
    gateway: &dyn Gateway,
    model_id: &str,
    trait_name: &str,
    questions: &[AssessmentQuestion],
    imputation: Imputation,
    skip: &(dyn Fn(&str, &str) -> bool + Sync),
) -> usize {
    let tasks: Vec<_> = dataset
        .trait_view(trait_name)
        .into_iter()
        .flat_map(|e| questions.iter().map(move |q| (e, q)))
        .filter(|(e, q)| !skip(&e.essay_id, &q.question_id))
        .collect();
    pool.install(|| {
        tasks.par_iter().for_each(|(e, q)| {
            if let Some(prompt) = dataset.prompt(&e.prompt_id) {
                if let Err(err) = answer_question(gateway, model_id, e, prompt, q, imputation) {
                    log::debug!("warm-up: essay {} question {}: {err}", e.essay_id, q.question_id);
                }
            }
        })
    });
    tasks.len()
}

/// Direct-scoring counterpart of [`warm_answers`].
pub fn warm_direct(
    pool: &rayon::ThreadPool,
    dataset: &Dataset,
    gateway: &dyn Gateway,
    model_id: &str,
    trait_name: &str,
    fallback: DirectFallback,
) {
    let essays = dataset.trait_view(trait_name);
    pool.install(|| {
        essays.par_iter().for_each(|e| {
            let (Some(prompt), Some(rubric)) = (dataset.prompt(&e.prompt_id), dataset.rubric_for(trait_name, &e.prompt_id))
            else {
                return;
            };
            let _ = llm_direct_score(gateway, model_id, e, prompt, rubric, trait_name, fallback);
        })
    });
}
