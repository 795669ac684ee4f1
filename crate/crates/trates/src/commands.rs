//! The pipeline stages behind each CLI command.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use trates_core::corpus::{prompt_feature_vector, Dataset, PROMPT_FEATURE_NAMES};
use trates_core::eval::{
    ablation, grouped_plan, leave_one_prompt_out, run_cross_validation, run_llm_direct, AblationRow, CvReport,
    FeatureSet, FeatureStore, FoldPlan, RunConfig,
};
use trates_core::features::FeatureCategory;
use trates_core::text::{registry, GenericExtractor};
use trates_core::trait_features::{generate_questions, question_column, rubric_grade_range, QuestionBatch};

use crate::artifacts::{self, slug, Manifest, OutputLock};
use crate::backend::{self, AnyGateway};
use crate::cache::{CachedGateway, Refresh};
use crate::config::{ExperimentConfig, FoldScheme};
use crate::loaders;
use crate::parallel::{self, ParallelTrainer};

/// A loaded configuration: dataset, traits, manifest and worker pool.
pub struct Session {
    pub cfg: ExperimentConfig,
    pub dataset: Dataset,
    pub traits: Vec<String>,
    pub manifest: Manifest,
    pool: rayon::ThreadPool,
    _lock: OutputLock,
}

impl Session {
    pub fn open(cfg: ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let lock = OutputLock::acquire(&cfg.output)?;
        let dataset = loaders::load(cfg.dataset.kind, &cfg.dataset.data, &cfg.dataset.metadata)?;
        let dataset = loaders::restrict(dataset, &cfg.dataset.prompts);
        let declared = dataset.traits();
        let traits = if cfg.run.traits.is_empty() {
            declared.clone()
        } else {
            for t in &cfg.run.traits {
                if !declared.contains(t) {
                    bail!("trait {t:?} is not declared by any prompt (declared: {})", declared.join(", "));
                }
            }
            cfg.run.traits.clone()
        };
        let manifest = Manifest::new(&cfg, &dataset.digest())?;
        let pool = parallel::pool(cfg.run.threads)?;
        Ok(Session {
            cfg,
            dataset,
            traits,
            manifest,
            pool,
            _lock: lock,
        })
    }

    fn model_dir(&self, stage: &str) -> PathBuf {
        self.cfg.output.join(stage).join(slug(&self.cfg.llm.model_id))
    }

    pub fn question_path(&self, rubric_id: &str) -> PathBuf {
        self.model_dir("questions").join(format!("{}.json", slug(rubric_id)))
    }

    pub fn store_path(&self) -> PathBuf {
        self.model_dir("features").join("store.json")
    }

    pub fn report_dir(&self, method: &str) -> PathBuf {
        self.cfg.output.join("reports").join(slug(method))
    }

    pub fn gateway(&self) -> Result<CachedGateway<AnyGateway>> {
        backend::build(&self.cfg.llm)
    }

    /// Gateway requests run on a pool bounded by `max_in_flight`.
    fn request_pool(&self) -> Result<rayon::ThreadPool> {
        parallel::pool(self.cfg.llm.max_in_flight)
    }

    pub fn feature_set(&self) -> &str {
        &self.cfg.run.feature_set
    }

    pub fn plans(&self) -> Result<Vec<FoldPlan>> {
        let prompts = self.dataset.prompt_ids();
        let plans = match self.cfg.run.folds {
            FoldScheme::LeaveOnePromptOut => leave_one_prompt_out(&prompts)?,
            FoldScheme::Grouped => {
                let seed = (self.cfg.run.fold_shuffle_seed != 0).then_some(self.cfg.run.fold_shuffle_seed);
                grouped_plan(&prompts, self.cfg.run.group_size, seed)?
            }
        };
        Ok(plans)
    }

    pub fn run_config(&self, trait_name: &str, fs: FeatureSet) -> RunConfig {
        let mut rc = RunConfig::new(trait_name, fs);
        rc.hyper_mode = self.cfg.run.tuning;
        rc.seed = self.cfg.run.seed;
        rc.scaling = self.cfg.run.scaling;
        rc.val_fraction = self.cfg.run.val_fraction;
        rc
    }
}

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct GenerateSummary {
    pub generated: Vec<String>,
    pub skipped: Vec<String>,
    pub archived: Vec<PathBuf>,
    pub gateway_calls: usize,
}

/// One question batch per rubric of the configured traits.
pub fn generate(session: &Session, force: bool) -> Result<GenerateSummary> {
    let gw = session.gateway()?;
    let mut summary = GenerateSummary::default();
    for rubric in session.dataset.rubrics.iter().filter(|r| session.traits.contains(&r.trait_name)) {
        let path = session.question_path(&rubric.rubric_id);
        if path.exists() && !force {
            summary.skipped.push(rubric.rubric_id.clone());
            continue;
        }
        let range = rubric_grade_range(&session.dataset, rubric);
        let batch = if force {
            generate_questions(&Refresh(&gw), &session.cfg.llm.model_id, rubric, &range)
        } else {
            generate_questions(&gw, &session.cfg.llm.model_id, rubric, &range)
        }
        .with_context(|| format!("rubric {}", rubric.rubric_id))?;
        if path.exists() {
            summary.archived.push(artifacts::archive(&path, &path.parent().unwrap().join("archive"))?);
        }
        artifacts::write_json(&path, &session.manifest, &batch)?;
        summary.generated.push(rubric.rubric_id.clone());
    }
    summary.gateway_calls = gw.backend_calls();
    Ok(summary)
}

fn load_batches(session: &Session, allow_mixed: bool) -> Result<Vec<QuestionBatch>> {
    let mut out = Vec::new();
    for rubric in session.dataset.rubrics.iter().filter(|r| session.traits.contains(&r.trait_name)) {
        let path = session.question_path(&rubric.rubric_id);
        if !path.exists() {
            bail!(
                "no questions for rubric {} ({}); run `trates generate-questions` first",
                rubric.rubric_id,
                path.display()
            );
        }
        out.push(artifacts::read_json(&path, &session.manifest, allow_mixed)?);
    }
    Ok(out)
}

fn load_store(session: &Session, allow_mixed: bool) -> Result<Option<FeatureStore>> {
    let path = session.store_path();
    if !path.exists() {
        return Ok(None);
    }
    Ok(Some(artifacts::read_json(&path, &session.manifest, allow_mixed)?))
}

fn needs_llm_features(fs: &str) -> bool {
    matches!(fs, "trates" | "llm-f")
}

fn needs_generic(fs: &str) -> bool {
    matches!(fs, "trates" | "gp-f")
}

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct ExtractSummary {
    pub answers: usize,
    pub imputed: usize,
    pub generic_rows: usize,
    pub cache_hits: usize,
    pub gateway_calls: usize,
    pub files: Vec<PathBuf>,
}

/// Answers, generic features and the tabular blocks. Progress is saved even on failure.
pub fn extract(session: &Session, allow_mixed: bool) -> Result<ExtractSummary> {
    let fs = session.feature_set().to_string();
    if fs == "llm-d" {
        bail!("feature_set llm-d scores essays directly; there are no features to extract");
    }
    let mut store = load_store(session, allow_mixed)?.unwrap_or_else(|| FeatureStore {
        model_id: session.cfg.llm.model_id.clone(),
        ..Default::default()
    });
    let mut summary = ExtractSummary::default();

    if needs_llm_features(&fs) {
        let gw = session.gateway()?;
        for batch in load_batches(session, allow_mixed)? {
            sync_batch(&mut store, batch);
        }
        let requests = session.request_pool()?;
        let result = (|| -> Result<()> {
            for t in &session.traits {
                let questions: Vec<_> = store
                    .batches
                    .iter()
                    .filter(|b| &b.trait_name == t)
                    .flat_map(|b| b.questions.clone())
                    .collect();
                let answered = &store.answers;
                let skip = |essay: &str, q: &str| answered.get(essay).is_some_and(|m| m.contains_key(q));
                parallel::warm_answers(
                    &requests,
                    &session.dataset,
                    &gw,
                    &session.cfg.llm.model_id,
                    t,
                    &questions,
                    session.cfg.run.on_unparseable,
                    &skip,
                );
                store
                    .answer_all(&session.dataset, &gw, std::slice::from_ref(t), session.cfg.run.on_unparseable)
                    .map_err(|e| anyhow!("trait {t}: {e}"))?;
            }
            Ok(())
        })();
        summary.cache_hits = gw.hits();
        summary.gateway_calls = gw.backend_calls();
        if let Err(e) = result {
            artifacts::write_json(&session.store_path(), &session.manifest, &store)?;
            return Err(e.context("feature extraction stopped; answers so far are saved and cached, rerun to resume"));
        }
    }
    if needs_generic(&fs) {
        let extractor = GenericExtractor::bundled();
        let missing: Vec<_> = session.dataset.essays.iter().filter(|e| !store.generic.contains_key(&e.essay_id)).collect();
        let rows: Vec<(String, Vec<f64>)> =
            session.pool.install(|| missing.par_iter().map(|e| (e.essay_id.clone(), extractor.extract(&e.text))).collect());
        store.generic.extend(rows);
        summary.generic_rows = store.generic.len();
    }
    summary.answers = store.answers.values().map(|m| m.len()).sum();
    summary.imputed = store.imputed.values().sum();
    artifacts::write_json(&session.store_path(), &session.manifest, &store)?;
    summary.files.push(session.store_path());
    summary.files.extend(write_blocks(session, &store, &fs)?);
    Ok(summary)
}

/// Replaces a stored batch whose questions changed and drops its stale answers.
fn sync_batch(store: &mut FeatureStore, batch: QuestionBatch) {
    match store.batches.iter().position(|b| b.rubric_id == batch.rubric_id) {
        Some(i) if store.batches[i].questions == batch.questions => {}
        Some(i) => {
            let old = std::mem::replace(&mut store.batches[i], batch);
            for q in &old.questions {
                for answers in store.answers.values_mut() {
                    answers.remove(&q.question_id);
                }
                store.imputed.remove(&q.question_id);
            }
        }
        None => store.batches.push(batch),
    }
}

fn fmt_num(v: f64) -> String {
    format!("{v}")
}

fn write_blocks(session: &Session, store: &FeatureStore, fs: &str) -> Result<Vec<PathBuf>> {
    let dir = session.model_dir("features");
    let m = &session.manifest;
    let mut files = Vec::new();
    if needs_llm_features(fs) {
        for t in &session.traits {
            let questions: Vec<_> = store.batches.iter().filter(|b| &b.trait_name == t).flat_map(|b| &b.questions).collect();
            let mut header = vec!["essay_id".to_string(), "prompt_id".to_string()];
            header.extend(questions.iter().map(|q| question_column(q).name));
            let rows: Vec<Vec<String>> = session
                .dataset
                .trait_view(t)
                .into_iter()
                .map(|e| {
                    let answers = store.answers.get(&e.essay_id);
                    let mut row = vec![e.essay_id.clone(), e.prompt_id.clone()];
                    row.extend(questions.iter().map(|q| {
                        answers.and_then(|a| a.get(&q.question_id)).map(|v| v.to_string()).unwrap_or_default()
                    }));
                    row
                })
                .collect();
            let path = dir.join(format!("trait_{}.csv", slug(t)));
            artifacts::write_csv(&path, m, &header, &rows)?;
            files.push(path);
        }
    }
    let mut header = vec!["essay_id".to_string(), "prompt_id".to_string()];
    header.extend(PROMPT_FEATURE_NAMES.iter().map(|s| s.to_string()));
    let rows: Vec<Vec<String>> = session
        .dataset
        .essays
        .iter()
        .map(|e| {
            let p = session.dataset.prompt(&e.prompt_id).expect("validated dataset");
            let mut row = vec![e.essay_id.clone(), e.prompt_id.clone()];
            row.extend(prompt_feature_vector(p).iter().map(|v| fmt_num(*v)));
            row
        })
        .collect();
    let path = dir.join("prompt.csv");
    artifacts::write_csv(&path, m, &header, &rows)?;
    files.push(path);
    if needs_generic(fs) {
        let mut header = vec!["essay_id".to_string()];
        header.extend(registry().iter().map(|r| r.name.to_string()));
        let rows: Vec<Vec<String>> = session
            .dataset
            .essays
            .iter()
            .filter_map(|e| {
                store.generic.get(&e.essay_id).map(|v| {
                    let mut row = vec![e.essay_id.clone()];
                    row.extend(v.iter().map(|x| fmt_num(*x)));
                    row
                })
            })
            .collect();
        let path = dir.join("generic.csv");
        artifacts::write_csv(&path, m, &header, &rows)?;
        files.push(path);
    }
    Ok(files)
}

/// Report payload: cross-validation results without model weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub method: String,
    pub config: ExperimentConfig,
    pub reports: Vec<CvReport>,
}

impl EvaluationReport {
    pub fn average(&self) -> f64 {
        mean(self.reports.iter().map(|r| r.mean_qwk))
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

pub fn evaluate(session: &Session, allow_mixed: bool) -> Result<EvaluationReport> {
    let fs = session.feature_set().to_string();
    let plans = session.plans()?;
    let mut reports = Vec::new();
    let started = Instant::now();
    if fs == "llm-d" {
        let gw = session.gateway()?;
        let requests = session.request_pool()?;
        for t in &session.traits {
            parallel::warm_direct(&requests, &session.dataset, &gw, &session.cfg.llm.model_id, t, session.cfg.run.direct_fallback);
            let r = run_llm_direct(&session.dataset, &plans, t, &gw, &session.cfg.llm.model_id, session.cfg.run.direct_fallback)
                .map_err(|e| anyhow!("trait {t}: {e}"))?;
            reports.push(r);
        }
    } else {
        let feature_set = FeatureSet::parse(&fs).ok_or_else(|| anyhow!("unknown feature set {fs}"))?;
        let store = load_store(session, allow_mixed)?
            .ok_or_else(|| anyhow!("no extracted features at {}; run `trates extract-features` first", session.store_path().display()))?;
        for t in &session.traits {
            let rc = session.run_config(t, feature_set);
            let r = session
                .pool
                .install(|| run_cross_validation(&session.dataset, &plans, &rc, &store, &ParallelTrainer))
                .map_err(|e| anyhow!("trait {t}: {e}"))?;
            reports.push(r);
        }
    }
    log::info!("evaluation of {fs} took {:.1?}", started.elapsed());
    let report = EvaluationReport {
        method: fs.clone(),
        config: session.cfg.clone(),
        reports,
    };
    write_evaluation(session, &report)?;
    Ok(report)
}

fn strip_models(mut r: CvReport) -> (CvReport, Vec<(String, serde_json::Value)>) {
    let mut models = Vec::new();
    for f in &mut r.folds {
        if let Some(a) = f.artifacts.take() {
            models.push((f.fold_id.clone(), serde_json::to_value(a).expect("artifacts serialize")));
        }
    }
    (r, models)
}

fn write_evaluation(session: &Session, report: &EvaluationReport) -> Result<()> {
    let dir = session.report_dir(&report.method);
    let m = &session.manifest;
    let mut stripped = report.clone();
    stripped.reports.clear();
    for r in &report.reports {
        let (r, models) = strip_models(r.clone());
        for (fold, value) in models {
            let path = session
                .cfg
                .output
                .join("models")
                .join(slug(&report.method))
                .join(slug(&r.trait_name))
                .join(format!("{}.json", slug(&fold)));
            artifacts::write_json(&path, m, &value)?;
        }
        stripped.reports.push(r);
    }
    artifacts::write_json(&dir.join("report.json"), m, &stripped)?;

    let header: Vec<String> = ["method", "trait", "fold_id", "target_prompts", "n_source", "n_target", "qwk", "hyperparameters"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut rows = Vec::new();
    for r in &stripped.reports {
        for f in &r.folds {
            rows.push(vec![
                report.method.clone(),
                r.trait_name.clone(),
                f.fold_id.clone(),
                f.target_prompts.join(" "),
                f.n_source.to_string(),
                f.n_target.to_string(),
                format!("{:.6}", f.qwk),
                f.hyperparameters.map(|h| hp_label(&h)).unwrap_or_default(),
            ]);
        }
    }
    artifacts::write_csv(&dir.join("folds.csv"), m, &header, &rows)?;
    artifacts::write_text(&dir.join("summary.md"), m, &table1(&[stripped.clone()]))?;
    write_overall_summary(session)
}

fn hp_label(h: &trates_core::regressor::Hyperparameters) -> String {
    format!(
        "{:?} lr={} {}x{} {:?} l2={} dropout={}",
        h.loss, h.learning_rate, h.hidden_layers, h.neurons_per_layer, h.activation, h.l2, h.dropout
    )
}

fn fmt_qwk(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.3}")
    } else {
        "-".into()
    }
}

/// Methods as rows, traits as columns, plus the average.
pub fn table1(reports: &[EvaluationReport]) -> String {
    let mut traits: Vec<String> = reports.iter().flat_map(|r| r.reports.iter().map(|c| c.trait_name.clone())).collect();
    traits.sort();
    traits.dedup();
    let mut out = String::from("# Cross-prompt QWK\n\n| Method |");
    for t in &traits {
        out.push_str(&format!(" {t} |"));
    }
    out.push_str(" AVG |\n|---|");
    out.push_str(&"---|".repeat(traits.len() + 1));
    out.push('\n');
    for r in reports {
        out.push_str(&format!("| {} |", r.method));
        for t in &traits {
            let v = r.reports.iter().find(|c| &c.trait_name == t).map(|c| c.mean_qwk).unwrap_or(f64::NAN);
            out.push_str(&format!(" {} |", fmt_qwk(v)));
        }
        out.push_str(&format!(" {} |\n", fmt_qwk(r.average())));
    }
    out
}

/// Rebuilds `summary.md` at the output root from every report with the current digest.
pub fn write_overall_summary(session: &Session) -> Result<()> {
    let root = session.cfg.output.join("reports");
    let mut reports = Vec::new();
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(&root)?.filter_map(|e| e.ok().map(|e| e.path())).collect();
    dirs.sort();
    for d in dirs {
        let p = d.join("report.json");
        if !p.exists() {
            continue;
        }
        match artifacts::read_json::<EvaluationReport>(&p, &session.manifest, false) {
            Ok(r) => reports.push(r),
            Err(e) => log::warn!("summary skips {}: {e:#}", p.display()),
        }
    }
    let order = |m: &str| crate::config::FEATURE_SETS.iter().position(|f| *f == m).unwrap_or(usize::MAX);
    reports.sort_by(|a, b| order(&a.method).cmp(&order(&b.method)).then(a.method.cmp(&b.method)));
    artifacts::write_text(&session.cfg.output.join("summary.md"), &session.manifest, &table1(&reports))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub base_method: String,
    pub rows: Vec<AblationRow>,
}

pub fn ablate(session: &Session, categories: &[FeatureCategory], allow_mixed: bool) -> Result<AblationReport> {
    let fs = session.feature_set().to_string();
    let feature_set = FeatureSet::parse(&fs).ok_or_else(|| anyhow!("ablation needs a regression feature set, not {fs}"))?;
    let base_path = session.report_dir(&fs).join("report.json");
    if !base_path.exists() {
        bail!("missing base run {}; run `trates evaluate` with feature_set {fs} first", base_path.display());
    }
    let base: EvaluationReport = artifacts::read_json(&base_path, &session.manifest, allow_mixed)?;
    let store = load_store(session, allow_mixed)?
        .ok_or_else(|| anyhow!("no extracted features; run `trates extract-features` first"))?;
    let plans = session.plans()?;
    let mut rows = Vec::new();
    for &category in categories {
        for t in &session.traits {
            let full = base
                .reports
                .iter()
                .find(|r| &r.trait_name == t)
                .ok_or_else(|| anyhow!("base run has no result for trait {t}"))?;
            let rc = session.run_config(t, feature_set);
            let (row, _) = session
                .pool
                .install(|| ablation(&session.dataset, &plans, &rc, category, full, &store, &ParallelTrainer))
                .map_err(|e| anyhow!("ablating {} on {t}: {e}", category.name()))?;
            rows.push(row);
        }
    }
    let report = AblationReport { base_method: fs.clone(), rows };
    let dir = session.cfg.output.join("ablation").join(slug(&fs));
    let m = &session.manifest;
    artifacts::write_json(&dir.join("ablation.json"), m, &report)?;
    let header: Vec<String> =
        ["category", "size", "trait", "full_qwk", "ablated_qwk", "drop"].iter().map(|s| s.to_string()).collect();
    let csv_rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.category.name().to_string(),
                format!("{}", r.size),
                r.trait_name.clone(),
                format!("{:.6}", r.full_qwk),
                format!("{:.6}", r.ablated_qwk),
                format!("{:.6}", r.drop),
            ]
        })
        .collect();
    artifacts::write_csv(&dir.join("ablation.csv"), m, &header, &csv_rows)?;
    artifacts::write_text(&dir.join("summary.md"), m, &table3(&report))?;
    Ok(report)
}

/// Categories as rows; QWK drop ×100 per trait and on average.
pub fn table3(report: &AblationReport) -> String {
    let mut traits: Vec<String> = report.rows.iter().map(|r| r.trait_name.clone()).collect();
    traits.sort();
    traits.dedup();
    let mut cats: Vec<FeatureCategory> = report.rows.iter().map(|r| r.category).collect();
    cats.dedup();
    let mut out = format!("# Ablation of {} (QWK drop x100, full minus ablated)\n\n| Category | Size |", report.base_method);
    for t in &traits {
        out.push_str(&format!(" {t} |"));
    }
    out.push_str(" AVG |\n|---|---|");
    out.push_str(&"---|".repeat(traits.len() + 1));
    out.push('\n');
    for c in cats {
        let rows: Vec<&AblationRow> = report.rows.iter().filter(|r| r.category == c).collect();
        let size = mean(rows.iter().map(|r| r.size));
        out.push_str(&format!("| {} | {} |", c.name(), if size.is_finite() { format!("{size:.0}") } else { "-".into() }));
        let by_trait: BTreeMap<&str, f64> = rows.iter().map(|r| (r.trait_name.as_str(), r.drop)).collect();
        for t in &traits {
            let v = by_trait.get(t.as_str()).copied().unwrap_or(f64::NAN);
            out.push_str(&format!(" {} |", if v.is_finite() { format!("{:.2}", v * 100.0) } else { "-".into() }));
        }
        let avg = mean(rows.iter().map(|r| r.drop));
        out.push_str(&format!(" {} |\n", if avg.is_finite() { format!("{:.2}", avg * 100.0) } else { "-".into() }));
    }
    out
}

/// Writes the generic registry as CSV: name, category, description.
pub fn export_registry(path: Option<&Path>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["name", "category", "description"])?;
    for r in registry() {
        w.write_record([r.name, FeatureCategory::from(r.category).name(), r.description])?;
    }
    let text = String::from_utf8(w.into_inner()?)?;
    if let Some(p) = path {
        artifacts::write_atomic(p, text.as_bytes())?;
    }
    Ok(text)
}
