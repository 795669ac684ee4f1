//! Fold runs, cross-validation and ablation.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cell::Cell;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::folds::{compare_ids, FoldPlan};
use super::qwk::qwk;
use super::store::FeatureSource;
use super::EvalError;
use crate::corpus::{prompt_feature_vector, Dataset, EssayRecord, ScoreRange};
use crate::features::{prompt_columns, FeatureCategory, FeatureMatrix};
use crate::regressor::{self, Hyperparameters, Samples, TrainedRegressor};
use crate::scaling::{Normalizer, ScaleSpec, ScalingMode};
use crate::tuning::{sequential_tune, SearchSpace, TrainBatch, TuneOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureSet {
    /// Trait-specific, prompt and generic features.
    Trates,
    /// Trait-specific features only.
    LlmF,
    /// Prompt and generic features.
    GpF,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 3] = [FeatureSet::Trates, FeatureSet::LlmF, FeatureSet::GpF];

    pub fn includes(self, c: FeatureCategory) -> bool {
        match self {
            FeatureSet::Trates => true,
            FeatureSet::LlmF => c == FeatureCategory::TraitSpecific,
            FeatureSet::GpF => c != FeatureCategory::TraitSpecific,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureSet::Trates => "trates",
            FeatureSet::LlmF => "llm-f",
            FeatureSet::GpF => "gp-f",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum HyperMode {
    #[default]
    Tune,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub feature_set: FeatureSet,
    /// Categories removed on top of the feature set (ablation).
    pub exclude: Vec<FeatureCategory>,
    pub trait_name: String,
    pub hyper_mode: HyperMode,
    /// Defaults for tuning, or the fixed configuration. Its seed is replaced per fold.
    pub base: Hyperparameters,
    pub seed: u64,
    pub scaling: ScalingMode,
    pub val_fraction: f64,
}

impl RunConfig {
    pub fn new(trait_name: &str, feature_set: FeatureSet) -> Self {
        RunConfig {
            feature_set,
            exclude: Vec::new(),
            trait_name: trait_name.to_string(),
            hyper_mode: HyperMode::Tune,
            base: Hyperparameters::default(),
            seed: 42,
            scaling: ScalingMode::GradeTiers,
            val_fraction: 0.2,
        }
    }

    pub fn includes(&self, c: FeatureCategory) -> bool {
        self.feature_set.includes(c) && !self.exclude.contains(&c)
    }
}

/// Reads of essay rows, split by phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LeakageCounters {
    /// Target-prompt rows read before the prediction step.
    pub target_reads_before_prediction: usize,
    /// Target-prompt rows read during prediction.
    pub target_reads_at_prediction: usize,
    /// Source-prompt rows read.
    pub source_reads: usize,
    /// Training-matrix rows whose essay belongs to a target prompt.
    pub target_rows_in_training: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingArtifacts {
    pub columns: Vec<String>,
    pub normalizer: Normalizer,
    pub scaled_targets: Vec<f64>,
    pub tuning: Option<TuneOutcome>,
    pub model: TrainedRegressor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub essay_id: String,
    pub prompt_id: String,
    pub scaled: f64,
    pub predicted: f64,
    pub gold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold_id: String,
    #[serde(rename = "trait")]
    pub trait_name: String,
    pub target_prompts: Vec<String>,
    pub n_source: usize,
    pub n_target: usize,
    pub category_sizes: BTreeMap<String, usize>,
    pub qwk: f64,
    pub per_prompt_qwk: BTreeMap<String, f64>,
    pub hyperparameters: Option<Hyperparameters>,
    pub leakage: LeakageCounters,
    pub artifacts: Option<TrainingArtifacts>,
    pub predictions: Vec<Prediction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    #[serde(rename = "trait")]
    pub trait_name: String,
    pub method: String,
    pub folds: Vec<FoldResult>,
    /// Unweighted mean over folds whose target carries the trait.
    pub mean_qwk: f64,
}

impl CvReport {
    pub fn aggregate(trait_name: &str, method: &str, mut folds: Vec<FoldResult>) -> Self {
        folds.sort_by(|a, b| a.fold_id.cmp(&b.fold_id));
        let mean_qwk = if folds.is_empty() {
            f64::NAN
        } else {
            folds.iter().map(|f| f.qwk).sum::<f64>() / folds.len() as f64
        };
        CvReport {
            trait_name: trait_name.to_string(),
            method: method.to_string(),
            folds,
            mean_qwk,
        }
    }

    /// Mean size of a feature category across folds.
    pub fn mean_category_size(&self, c: FeatureCategory) -> f64 {
        if self.folds.is_empty() {
            return 0.0;
        }
        self.folds
            .iter()
            .map(|f| *f.category_sizes.get(c.name()).unwrap_or(&0) as f64)
            .sum::<f64>()
            / self.folds.len() as f64
    }
}

/// Per-fold seed derived from the base seed and the fold id.
pub fn fold_seed(base: u64, fold_id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    h.update(fold_id.as_bytes());
    u64::from_le_bytes(h.finalize()[..8].try_into().unwrap())
}

/// Per-prompt 80/20 split: returns (train, val) indices into `prompts`.
pub fn stratified_split(prompts: &[&str], val_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, p) in prompts.iter().enumerate() {
        groups.entry(p).or_default().push(i);
    }
    let mut keys: Vec<&str> = groups.keys().copied().collect();
    keys.sort_by(|a, b| compare_ids(a, b));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for k in keys {
        let mut idx = groups[k].clone();
        idx.shuffle(&mut rng);
        let n_val = if idx.len() < 2 {
            0
        } else {
            (libm::round(idx.len() as f64 * val_fraction) as usize).clamp(1, idx.len() - 1)
        };
        val.extend_from_slice(&idx[..n_val]);
        train.extend_from_slice(&idx[n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

struct RowReader<'a> {
    targets: &'a [String],
    predicting: Cell<bool>,
    counters: Cell<LeakageCounters>,
}

impl RowReader<'_> {
    fn note(&self, rows: &[&EssayRecord]) {
        let mut c = self.counters.get();
        for e in rows {
            if self.targets.contains(&e.prompt_id) {
                if self.predicting.get() {
                    c.target_reads_at_prediction += 1;
                } else {
                    c.target_reads_before_prediction += 1;
                }
            } else {
                c.source_reads += 1;
            }
        }
        self.counters.set(c);
    }
}

fn build_matrix(
    dataset: &Dataset,
    cfg: &RunConfig,
    features: &dyn FeatureSource,
    questions: &[&crate::trait_features::AssessmentQuestion],
    rows: &[&EssayRecord],
    reader: &RowReader,
) -> Result<FeatureMatrix, EvalError> {
    reader.note(rows);
    let mut m = FeatureMatrix::new(Vec::new());
    let stack = |m: FeatureMatrix, block: FeatureMatrix| -> Result<FeatureMatrix, EvalError> {
        if m.n_cols() == 0 {
            Ok(block)
        } else {
            Ok(m.hstack(&block)?)
        }
    };
    if cfg.includes(FeatureCategory::TraitSpecific) && !questions.is_empty() {
        m = stack(m, features.trait_block(questions, rows)?)?;
    }
    if cfg.includes(FeatureCategory::PromptSpecific) {
        let mut block = FeatureMatrix::new(prompt_columns());
        for e in rows {
            let p = dataset.prompt(&e.prompt_id).ok_or_else(|| EvalError::UnknownPrompt(e.prompt_id.clone()))?;
            block.push_row(e.essay_id.clone(), &prompt_feature_vector(p))?;
        }
        m = stack(m, block)?;
    }
    let generic_needed = [
        FeatureCategory::Length,
        FeatureCategory::Readability,
        FeatureCategory::Complexity,
        FeatureCategory::Variation,
        FeatureCategory::Sentiment,
    ]
    .iter()
    .any(|&c| cfg.includes(c));
    if generic_needed {
        let block = features.generic_block(rows)?.select_categories(|c| cfg.includes(c));
        m = stack(m, block)?;
    }
    if m.n_cols() == 0 {
        return Err(EvalError::NoFeatures(cfg.trait_name.clone()));
    }
    Ok(m)
}

fn scale_specs(dataset: &Dataset, trait_name: &str, mode: ScalingMode) -> Result<BTreeMap<String, ScaleSpec>, EvalError> {
    let grades = dataset.grade_levels();
    let mut out = BTreeMap::new();
    for p in &dataset.prompts {
        if let Some(r) = p.score_ranges.get(trait_name) {
            out.insert(p.prompt_id.clone(), ScaleSpec::new(*r, p.grade_level, &grades, mode));
        }
    }
    if out.is_empty() {
        return Err(EvalError::UnknownTrait(trait_name.to_string()));
    }
    Ok(out)
}

/// QWK pooled over all rows when they share one grid, else the mean of per-prompt values.
pub fn grouped_qwk(
    prompts: &[&str],
    pred: &[f64],
    gold: &[f64],
    grids: &BTreeMap<String, ScoreRange>,
) -> Result<(f64, BTreeMap<String, f64>), EvalError> {
    let mut by_prompt: BTreeMap<&str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for ((p, a), b) in prompts.iter().zip(pred).zip(gold) {
        let e = by_prompt.entry(p).or_default();
        e.0.push(*a);
        e.1.push(*b);
    }
    let mut per = BTreeMap::new();
    for (p, (a, b)) in &by_prompt {
        let grid = grids.get(*p).ok_or_else(|| EvalError::UnknownPrompt(p.to_string()))?;
        per.insert(p.to_string(), qwk(a, b, grid)?);
    }
    let distinct: BTreeSet<(u64, u64, u64)> = by_prompt
        .keys()
        .map(|p| {
            let g = grids[*p];
            (g.min.to_bits(), g.max.to_bits(), g.step.to_bits())
        })
        .collect();
    let overall = if distinct.len() == 1 {
        let grid = grids[*by_prompt.keys().next().unwrap()];
        qwk(pred, gold, &grid)?
    } else {
        per.values().sum::<f64>() / per.len() as f64
    };
    Ok((overall, per))
}

/// Trains on the fold's source prompts and scores its target prompts.
/// Returns `None` when no target essay carries the trait.
pub fn run_fold(
    dataset: &Dataset,
    fold: &FoldPlan,
    cfg: &RunConfig,
    features: &dyn FeatureSource,
    trainer: &dyn TrainBatch,
) -> Result<Option<FoldResult>, EvalError> {
    let t = cfg.trait_name.as_str();
    let view = dataset.trait_view(t);
    let source_rows: Vec<&EssayRecord> = view.iter().copied().filter(|e| fold.source.contains(&e.prompt_id)).collect();
    let target_count = view.iter().filter(|e| fold.target.contains(&e.prompt_id)).count();
    if target_count == 0 {
        return Ok(None);
    }
    if source_rows.len() < 2 {
        return Err(EvalError::NoSourceRows {
            fold: fold.fold_id.clone(),
            trait_name: t.to_string(),
        });
    }
    let reader = RowReader {
        targets: &fold.target,
        predicting: Cell::new(false),
        counters: Cell::new(LeakageCounters::default()),
    };
    let seed = fold_seed(cfg.seed, &fold.fold_id);
    let questions = crate::trait_features::fold_questions(dataset, features.question_batches(), t, &fold.source);
    let specs = scale_specs(dataset, t, cfg.scaling)?;
    let grids: BTreeMap<String, ScoreRange> = specs.iter().map(|(k, s)| (k.clone(), s.range())).collect();

    // Training side: source rows only.
    let x_src = build_matrix(dataset, cfg, features, &questions, &source_rows, &reader)?;
    let mut counters = reader.counters.get();
    counters.target_rows_in_training = source_rows.iter().filter(|e| fold.target.contains(&e.prompt_id)).count();
    reader.counters.set(counters);
    let y_src: Vec<f64> = source_rows
        .iter()
        .map(|e| specs[&e.prompt_id].scale(e.trait_scores[t]))
        .collect::<Result<_, _>>()?;
    let normalizer = Normalizer::fit(&x_src);
    let xn = normalizer.apply(&x_src)?;
    let rows: Vec<Vec<f64>> = xn.rows().map(<[f64]>::to_vec).collect();
    let src_prompts: Vec<&str> = source_rows.iter().map(|e| e.prompt_id.as_str()).collect();
    let (tr, va) = stratified_split(&src_prompts, cfg.val_fraction, seed);
    if va.is_empty() {
        return Err(EvalError::NoSourceRows {
            fold: fold.fold_id.clone(),
            trait_name: t.to_string(),
        });
    }
    let pick = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<f64>) {
        (idx.iter().map(|&i| rows[i].clone()).collect(), idx.iter().map(|&i| y_src[i]).collect())
    };
    let (x_tr, y_tr) = pick(&tr);
    let (x_va, y_va) = pick(&va);
    let va_prompts: Vec<&str> = va.iter().map(|&i| src_prompts[i]).collect();
    let va_gold: Vec<f64> = va.iter().map(|&i| source_rows[i].trait_scores[t]).collect();
    let score = |pred: &[f64]| -> f64 {
        let raw: Vec<f64> = pred.iter().zip(&va_prompts).map(|(v, p)| specs[*p].unscale(*v)).collect();
        grouped_qwk(&va_prompts, &raw, &va_gold, &grids).map(|r| r.0).unwrap_or(f64::NAN)
    };
    let base = Hyperparameters { seed, ..cfg.base };
    let train_s = Samples::new(&x_tr, &y_tr);
    let val_s = Samples::new(&x_va, &y_va);
    let (tuning, best) = match cfg.hyper_mode {
        HyperMode::Tune => {
            let out = sequential_tune(&SearchSpace::standard(base), train_s, val_s, &score, trainer)?;
            let best = out.best;
            (Some(out), best)
        }
        HyperMode::Fixed => (None, base),
    };
    let model = regressor::train(&best, train_s, val_s)?;

    // Prediction side.
    reader.predicting.set(true);
    let target_rows: Vec<&EssayRecord> = view.iter().copied().filter(|e| fold.target.contains(&e.prompt_id)).collect();
    let x_tgt = build_matrix(dataset, cfg, features, &questions, &target_rows, &reader)?;
    let xt = normalizer.apply(&x_tgt)?;
    let mut predictions = Vec::with_capacity(target_rows.len());
    for (i, e) in target_rows.iter().enumerate() {
        let scaled = model.predict(xt.row(i))?;
        predictions.push(Prediction {
            essay_id: e.essay_id.clone(),
            prompt_id: e.prompt_id.clone(),
            scaled,
            predicted: specs[&e.prompt_id].unscale(scaled),
            gold: e.trait_scores[t],
        });
    }
    let tp: Vec<&str> = predictions.iter().map(|p| p.prompt_id.as_str()).collect();
    let pred: Vec<f64> = predictions.iter().map(|p| p.predicted).collect();
    let gold: Vec<f64> = predictions.iter().map(|p| p.gold).collect();
    let (q, per_prompt_qwk) = grouped_qwk(&tp, &pred, &gold, &grids)?;

    let category_sizes = x_src
        .category_counts()
        .into_iter()
        .map(|(c, n)| (c.name().to_string(), n))
        .collect();
    Ok(Some(FoldResult {
        fold_id: fold.fold_id.clone(),
        trait_name: t.to_string(),
        target_prompts: fold.target.clone(),
        n_source: source_rows.len(),
        n_target: target_rows.len(),
        category_sizes,
        qwk: q,
        per_prompt_qwk,
        hyperparameters: Some(best),
        leakage: reader.counters.get(),
        artifacts: Some(TrainingArtifacts {
            columns: x_src.column_names(),
            normalizer,
            scaled_targets: y_src,
            tuning,
            model,
        }),
        predictions,
    }))
}

pub fn method_name(cfg: &RunConfig) -> String {
    let mut name = cfg.feature_set.name().to_string();
    for c in &cfg.exclude {
        name.push_str(&format!(" -{}", c.name()));
    }
    name
}

pub fn run_cross_validation(
    dataset: &Dataset,
    plans: &[FoldPlan],
    cfg: &RunConfig,
    features: &dyn FeatureSource,
    trainer: &dyn TrainBatch,
) -> Result<CvReport, EvalError> {
    let mut folds = Vec::new();
    for plan in plans {
        if let Some(r) = run_fold(dataset, plan, cfg, features, trainer).map_err(|e| e.in_fold(&plan.fold_id))? {
            folds.push(r);
        }
    }
    Ok(CvReport::aggregate(&cfg.trait_name, &method_name(cfg), folds))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub category: FeatureCategory,
    /// Mean number of removed columns per fold.
    pub size: f64,
    #[serde(rename = "trait")]
    pub trait_name: String,
    pub full_qwk: f64,
    pub ablated_qwk: f64,
    /// `full - ablated`, sign kept.
    pub drop: f64,
}

/// Reruns cross-validation without `category` and diffs against `full`.
pub fn ablation(
    dataset: &Dataset,
    plans: &[FoldPlan],
    cfg: &RunConfig,
    category: FeatureCategory,
    full: &CvReport,
    features: &dyn FeatureSource,
    trainer: &dyn TrainBatch,
) -> Result<(AblationRow, CvReport), EvalError> {
    let mut ablated_cfg = cfg.clone();
    if !ablated_cfg.exclude.contains(&category) {
        ablated_cfg.exclude.push(category);
    }
    let ablated = run_cross_validation(dataset, plans, &ablated_cfg, features, trainer)?;
    let row = AblationRow {
        category,
        size: full.mean_category_size(category),
        trait_name: cfg.trait_name.clone(),
        full_qwk: full.mean_qwk,
        ablated_qwk: ablated.mean_qwk,
        drop: full.mean_qwk - ablated.mean_qwk,
    };
    Ok((row, ablated))
}
