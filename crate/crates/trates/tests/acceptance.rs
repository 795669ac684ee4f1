//! Acceptance suite: one pass/fail line per criterion.
//!
//! Run with `cargo test -p trates --test acceptance`.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trates::commands::{self, Session};
use trates::config::ExperimentConfig;
use trates::parallel::ParallelTrainer;
use trates_core::corpus::ScoreRange;
use trates_core::eval::{
    ablation, leave_one_prompt_out, qwk, run_cross_validation, CvReport, FeatureSet, FeatureStore, FoldResult,
    HyperMode, RunConfig,
};
use trates_core::features::FeatureCategory;
use trates_core::llm::MockLlm;
use trates_core::regressor::{
    loss, train, Activation, Hyperparameters, LossKind, Network, RegressorError, SampleWeights, Samples,
    TrainedRegressor, LR_FACTOR, LR_PATIENCE,
};
use trates_core::scaling::{ScaleSpec, ScalingMode};
use trates_core::synthetic::{two_prompt_corpus, SyntheticCorpus};
use trates_core::text::{readability_scores, tokenize, GenericExtractor, TextCounts, TextResources, READABILITY_NAMES};
use trates_core::trait_features::{parse_question_list, parse_rating, Imputation, Rating};
use trates_core::tuning::{sequential_tune, SearchSpace, Serial, Stage, TrainBatch};

type Outcome = Result<String, String>;

macro_rules! check {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn within(t0: Instant, limit: Duration) -> Outcome {
    let took = t0.elapsed();
    check!(took < limit, "took {took:.1?}, limit {limit:?}");
    Ok(format!("{took:.1?}"))
}

// 1. QWK

fn brute_force_qwk(pred: &[f64], gold: &[f64], grid: &[f64]) -> Option<f64> {
    let k = grid.len();
    if pred.iter().all(|&v| v == pred[0]) && gold.iter().all(|&v| v == gold[0]) {
        return Some(if pred[0] == gold[0] { 1.0 } else { -1.0 });
    }
    let pos = |v: f64| grid.iter().position(|&g| (g - v).abs() < 1e-9).unwrap();
    let mut confusion = vec![vec![0u64; k]; k];
    for (&p, &g) in pred.iter().zip(gold) {
        confusion[pos(p)][pos(g)] += 1;
    }
    let n = pred.len() as f64;
    let row: Vec<f64> = (0..k).map(|i| confusion[i].iter().sum::<u64>() as f64).collect();
    let col: Vec<f64> = (0..k).map(|j| (0..k).map(|i| confusion[i][j]).sum::<u64>() as f64).collect();
    let span = grid[k - 1] - grid[0];
    let (mut observed, mut expected) = (0.0, 0.0);
    for i in 0..k {
        for j in 0..k {
            let w = ((grid[i] - grid[j]) / span).powi(2);
            observed += w * confusion[i][j] as f64 / n;
            expected += w * row[i] * col[j] / (n * n);
        }
    }
    (expected > 0.0).then(|| 1.0 - observed / expected)
}

fn criterion_1() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    while checked < 1000 {
        let step = [1.0, 0.5, 2.0][rng.random_range(0..3)];
        let min = rng.random_range(-2..3) as f64;
        let levels = rng.random_range(2..9);
        let range = ScoreRange::new(min, min + step * (levels - 1) as f64, step);
        let grid = range.grid();
        let n = rng.random_range(2..80);
        let mut draw = || -> Vec<f64> { (0..n).map(|_| grid[rng.random_range(0..grid.len())]).collect() };
        let (pred, gold) = (draw(), draw());
        let Some(expected) = brute_force_qwk(&pred, &gold, &grid) else {
            continue;
        };
        let got = qwk(&pred, &gold, &range).map_err(|e| e.to_string())?;
        worst = worst.max((got - expected).abs());
        checked += 1;
    }
    check!(worst <= 1e-12, "max deviation {worst:e}");
    let g = ScoreRange::new(0.0, 2.0, 1.0);
    check!(qwk(&[0.0, 1.0, 2.0], &[0.0, 1.0, 2.0], &g) == Ok(1.0), "identical ratings");
    check!(qwk(&[0.0, 2.0], &[2.0, 0.0], &g) == Ok(-1.0), "[0,2] vs [2,0]");
    let t = within(t0, Duration::from_secs(5))?;
    Ok(format!("1000 pairs, max deviation {worst:.1e}, {t}"))
}

// 2. Gradients

fn max_rel_error(net: &Network, x: &[Vec<f64>], y: &[f64], w: Option<&[f64]>, l2: f64) -> f64 {
    let (_, analytic) = net.objective_and_gradient(x, y, w, l2);
    let params = net.parameters();
    let h = 1e-5;
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for i in 0..params.len() {
        let mut p = params.clone();
        p[i] += h;
        probe.set_parameters(&p);
        let up = probe.objective_and_gradient(x, y, w, l2).0;
        p[i] -= 2.0 * h;
        probe.set_parameters(&p);
        let down = probe.objective_and_gradient(x, y, w, l2).0;
        let numeric = (up - down) / (2.0 * h);
        let denom = analytic[i].abs().max(numeric.abs()).max(1e-5);
        worst = worst.max((analytic[i] - numeric).abs() / denom);
    }
    worst
}

fn criterion_2() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checks = 0;
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let dim = rng.random_range(2..6);
        let hp = Hyperparameters {
            hidden_layers: 1 + k % 3,
            neurons_per_layer: rng.random_range(3..7),
            seed: k as u64,
            ..Default::default()
        };
        let x: Vec<Vec<f64>> = (0..8).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let y: Vec<f64> = (0..8).map(|_| rng.random_range(0.0..6.0)).collect();
        let mut net = Network::new(&hp, dim);
        let p: Vec<f64> = net.parameters().iter().map(|v| v + rng.random_range(-0.3..0.3)).collect();
        net.set_parameters(&p);
        let weights = SampleWeights::fit(&y).weights(&y);
        for act in Activation::ALL {
            net.activation = act;
            for kind in [LossKind::MSE, LossKind::WeightedMSE] {
                let w = (kind == LossKind::WeightedMSE).then_some(weights.as_slice());
                for l2 in [0.0, 1e-3] {
                    let e = max_rel_error(&net, &x, &y, w, l2);
                    check!(e < 1e-4, "net {k} {act:?} {kind:?} l2={l2}: relative error {e:e}");
                    worst = worst.max(e);
                    checks += 1;
                }
            }
        }
    }
    check!(checks == 400, "ran {checks} configurations");
    let t = within(t0, Duration::from_secs(30))?;
    Ok(format!("400 configurations, max relative error {worst:.1e}, {t}"))
}

// 3. Readability

type Fixture = (&'static str, [usize; 8], [f64; 11]);

// counts: words, sentences, letters, syllables, complex, long, difficult, misspelled
const READABILITY: [Fixture; 5] = [
    ("The cat sat on the mat.", [6, 1, 17, 6, 0, 0, 0, 0], [0.0, -5.085000000000001, 2.0, -1.4499999999999975, -4.073333333333338, 116.14500000000001, 2.4000000000000004, 6.0, 3.1291, 0.0, 0.2976]),
    ("The quick brown fox jumps over the lazy dog. It was not amused.", [13, 2, 49, 16, 0, 0, 1, 0], [0.0, -0.42692307692307807, 2.25, 1.468076923076925, 1.8092307692307692, 96.11442307692309, 2.6, 6.5, 3.1291, 0.0, 5.173515384615385]),
    ("Information technology changes our lives. Modern computers are powerful machines. People communicate instantly.", [13, 3, 96, 32, 6, 8, 5, 0], [0.0, 15.518205128205125, 3.166666666666667, 15.146153846153851, 20.790769230769232, -5.809487179487178, 20.194871794871798, 65.87179487179488, 11.20814326018867, 2.6666666666666665, 9.924510256410258]),
    ("Yes! No? Stop.", [3, 3, 9, 3, 0, 0, 0, 0], [0.0, -6.799999999999999, -0.5, -3.399999999999997, -27.759999999999998, 121.22000000000003, 0.4, 1.0, 3.1291, 0.0, 0.0496]),
    ("My teacher said that reading every night improves vocabulary. I did not recieve the chores list. However, reading interesting novels in 2023 was enjoyable.", [24, 3, 128, 44, 5, 9, 5, 1], [1.0, 7.690000000000001, 4.666666666666667, 9.163333333333338, 11.860000000000003, 43.61500000000001, 11.533333333333333, 45.5, 10.504223727775692, 3.0, 7.322883333333333]),
];

fn criterion_3() -> Outcome {
    let r = TextResources::bundled();
    let mut worst: f64 = 0.0;
    for (text, counts, expected) in READABILITY {
        let c = TextCounts::from_essay(&tokenize(text), &r.familiar, &r.dictionary);
        let got = [
            c.words,
            c.sentences,
            c.letters,
            c.syllables,
            c.complex_words,
            c.long_words,
            c.difficult_words,
            c.spelling_errors,
        ];
        check!(got == counts, "{text:?}: counts {got:?}, expected {counts:?}");
        let v = readability_scores(&c);
        for (k, name) in READABILITY_NAMES.iter().enumerate() {
            let d = (v[k] - expected[k]).abs();
            check!(d < 1e-9, "{name} on {text:?}: {} vs {}", v[k], expected[k]);
            worst = worst.max(d);
        }
    }
    let six = TextCounts::from_essay(&tokenize(READABILITY[0].0), &r.familiar, &r.dictionary);
    let v = readability_scores(&six);
    check!((v[3] + 1.45).abs() < 1e-9, "Kincaid {}", v[3]);
    check!((v[5] - 116.145).abs() < 1e-9, "Flesch {}", v[5]);
    Ok(format!("5 fixtures x {} indices, max deviation {worst:.1e}", READABILITY_NAMES.len()))
}

// 4. Scaling

fn criterion_4() -> Outcome {
    let grades = [7, 8, 10];
    let r = |a, b| ScoreRange::new(a, b, 1.0);
    let asap = [
        (r(1.0, 6.0), 8),
        (r(1.0, 6.0), 10),
        (r(0.0, 3.0), 10),
        (r(0.0, 3.0), 10),
        (r(0.0, 4.0), 8),
        (r(0.0, 4.0), 10),
        (r(0.0, 3.0), 7),
        (r(1.0, 6.0), 10),
    ];
    let mut specs: Vec<ScaleSpec> = Vec::new();
    for (range, _) in asap {
        for g in grades {
            specs.push(ScaleSpec::new(range, g, &grades, ScalingMode::GradeTiers));
        }
    }
    specs.push(ScaleSpec::new(ScoreRange::new(1.0, 5.0, 0.5), 10, &[8, 9, 10, 11, 12], ScalingMode::Uniform));
    let mut scores = 0;
    for spec in &specs {
        for s in spec.range().grid() {
            let scaled = spec.scale(s).map_err(|e| e.to_string())?;
            check!((0.0..=spec.target_max).contains(&scaled), "{spec:?}: {s} -> {scaled}");
            check!(spec.unscale(scaled) == s, "{spec:?}: {s} -> {scaled} -> {}", spec.unscale(scaled));
            scores += 1;
        }
    }
    let g7 = ScaleSpec::new(r(0.0, 3.0), 7, &grades, ScalingMode::GradeTiers);
    check!(g7.target_max == 4.0 && g7.scale(3.0) == Ok(4.0), "grade 7 maps 3 to {:?}", g7.scale(3.0));
    Ok(format!("{} range/grade combinations, {scores} grid scores", specs.len()))
}

// 5 and 8. Mock pipeline

const TRAIT: &str = "organization";

fn store_for(corpus: &SyntheticCorpus) -> FeatureStore {
    let llm = MockLlm::new(7).with_planted(corpus.latent.clone());
    let extractor = GenericExtractor::bundled();
    FeatureStore::extract(&corpus.dataset, &llm, "mock", &[TRAIT.to_string()], Some(&extractor), Imputation::Medium)
        .unwrap()
}

fn cv(corpus: &SyntheticCorpus, store: &FeatureStore, fs: FeatureSet, mode: HyperMode) -> (RunConfig, CvReport) {
    let plans = leave_one_prompt_out(&corpus.dataset.prompt_ids()).unwrap();
    let mut cfg = RunConfig::new(TRAIT, fs);
    cfg.hyper_mode = mode;
    let report = run_cross_validation(&corpus.dataset, &plans, &cfg, store, &ParallelTrainer).unwrap();
    (cfg, report)
}

fn criterion_5() -> Outcome {
    let clean = two_prompt_corpus(TRAIT, 60, 5);
    let noise = two_prompt_corpus(TRAIT, 60, 99);
    let mut noisy = clean.clone();
    let replacement: BTreeMap<&str, _> =
        noise.dataset.essays.iter().filter(|e| e.prompt_id == "2").map(|e| (e.essay_id.as_str(), e)).collect();
    for e in noisy.dataset.essays.iter_mut().filter(|e| e.prompt_id == "2") {
        let n = replacement[e.essay_id.as_str()];
        e.text = n.text.clone();
        e.trait_scores = n.trait_scores.clone();
        noisy.latent.insert(e.essay_id.clone(), noise.latent[&e.essay_id]);
    }
    check!(clean.dataset.digest() != noisy.dataset.digest(), "noise did not change the dataset");

    let (_, a) = cv(&clean, &store_for(&clean), FeatureSet::Trates, HyperMode::Tune);
    let (_, b) = cv(&noisy, &store_for(&noisy), FeatureSet::Trates, HyperMode::Tune);
    for f in a.folds.iter().chain(&b.folds) {
        let l = &f.leakage;
        check!(l.target_reads_before_prediction == 0, "fold {}: {} target reads", f.fold_id, l.target_reads_before_prediction);
        check!(l.target_rows_in_training == 0, "fold {}: {} target rows trained on", f.fold_id, l.target_rows_in_training);
        check!(l.source_reads > 0, "fold {}: counters never incremented", f.fold_id);
    }
    let pick = |r: &CvReport| -> FoldResult { r.folds.iter().find(|f| f.target_prompts == ["2"]).unwrap().clone() };
    let (fa, fb) = (pick(&a), pick(&b));
    let bytes = |f: &FoldResult| serde_json::to_vec(f.artifacts.as_ref().unwrap()).unwrap();
    let (ba, bb) = (bytes(&fa), bytes(&fb));
    check!(ba == bb, "training artifacts differ after replacing target rows");
    check!(fa.predictions != fb.predictions, "predictions ignore the target essays");
    Ok(format!("{} folds with zero target reads; {} artifact bytes identical under noise", a.folds.len() * 2, ba.len()))
}

fn criterion_8() -> Outcome {
    let t0 = Instant::now();
    let corpus = two_prompt_corpus(TRAIT, 150, 3);
    let store = store_for(&corpus);
    let (cfg, full) = cv(&corpus, &store, FeatureSet::Trates, HyperMode::Tune);
    let (_, llm_f) = cv(&corpus, &store, FeatureSet::LlmF, HyperMode::Tune);
    let plans = leave_one_prompt_out(&corpus.dataset.prompt_ids()).unwrap();
    let (row, _) = ablation(&corpus.dataset, &plans, &cfg, FeatureCategory::TraitSpecific, &full, &store, &ParallelTrainer)
        .map_err(|e| e.to_string())?;
    let line = format!("TRATES {:.3}, LLM-F {:.3}, trait-specific ablation drop {:.3}", full.mean_qwk, llm_f.mean_qwk, row.drop);
    check!(full.mean_qwk >= 0.9, "{line}");
    check!(llm_f.mean_qwk >= 0.9, "{line}");
    check!(row.drop > 0.3, "{line}");
    let t = within(t0, Duration::from_secs(300))?;
    Ok(format!("{line}, {t}"))
}

// 6. Training protocol

fn planted(n: usize, dim: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
    let y = x.iter().map(|r| r.iter().zip(&w).map(|(a, b)| a * b).sum()).collect();
    (x, y)
}

fn criterion_6() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let x: Vec<Vec<f64>> = (0..200).map(|_| vec![rng.random_range(0.0..1.0)]).collect();
    let y: Vec<f64> = (0..200).map(|_| rng.random_range(0.0..6.0)).collect();
    let hp = Hyperparameters {
        learning_rate: 0.01,
        seed: 5,
        ..Default::default()
    };
    let m = train(&hp, Samples::new(&x[..150], &y[..150]), Samples::new(&x[150..], &y[150..])).map_err(|e| e.to_string())?;
    check!(m.epochs_run() <= m.best_epoch + 11, "stopped at {} with best {}", m.epochs_run(), m.best_epoch);
    let h = &m.history;
    let drop = (1..h.len()).find(|&i| h[i].learning_rate != h[i - 1].learning_rate).ok_or("learning rate never dropped")?;
    check!(h[drop].learning_rate == h[drop - 1].learning_rate * LR_FACTOR, "lr {} -> {}", h[drop - 1].learning_rate, h[drop].learning_rate);
    let (mut best, mut wait) = (f64::INFINITY, 0);
    for r in &h[..drop] {
        if r.val_loss < best - 1e-6 {
            best = r.val_loss;
            wait = 0;
        } else {
            wait += 1;
        }
    }
    check!(wait == LR_PATIENCE, "lr dropped after {wait} stagnant epochs");

    let (x, y) = planted(500, 5, 1);
    let (vx, vy) = planted(100, 5, 1);
    let hp = Hyperparameters {
        learning_rate: 0.01,
        max_epochs: 500,
        seed: 3,
        ..Default::default()
    };
    let fit = train(&hp, Samples::new(&x, &y), Samples::new(&vx, &vy)).map_err(|e| e.to_string())?;
    let mse = loss(&fit.predict_many(&x).map_err(|e| e.to_string())?, &y, None).map_err(|e| e.to_string())?;
    check!(mse < 1e-3, "planted train MSE {mse:e}");

    let hp = Hyperparameters {
        dropout: 0.2,
        max_epochs: 30,
        seed: 9,
        ..Default::default()
    };
    let bits = |m: &TrainedRegressor| -> Vec<u64> { m.network.parameters().iter().map(|v| v.to_bits()).collect() };
    let a = train(&hp, Samples::new(&x[..400], &y[..400]), Samples::new(&x[400..], &y[400..])).map_err(|e| e.to_string())?;
    let b = train(&hp, Samples::new(&x[..400], &y[..400]), Samples::new(&x[400..], &y[400..])).map_err(|e| e.to_string())?;
    check!(bits(&a) == bits(&b), "same seed, different weights");
    let t = within(t0, Duration::from_secs(60))?;
    Ok(format!("stop at best+{}, lr x{LR_FACTOR} after {LR_PATIENCE}, planted MSE {mse:.1e}, {t}", m.epochs_run() - m.best_epoch))
}

// 7. Tuner

struct Counting(AtomicUsize);

impl TrainBatch for Counting {
    fn train_all(&self, configs: &[Hyperparameters], train: Samples<'_>, val: Samples<'_>) -> Vec<Result<TrainedRegressor, RegressorError>> {
        self.0.fetch_add(configs.len(), Ordering::SeqCst);
        Serial.train_all(configs, train, val)
    }
}

fn linear(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..4).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
    let y = x.iter().map(|r| 1.0 + 2.0 * r[0] - r[1] + 0.5 * r[2]).collect();
    (x, y)
}

fn criterion_7() -> Outcome {
    let base = |epochs| Hyperparameters {
        max_epochs: epochs,
        batch_size: 16,
        seed: 11,
        ..Hyperparameters::default()
    };
    let neg_mse = |y: &[f64]| {
        let y = y.to_vec();
        move |p: &[f64]| -p.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64
    };

    let space = SearchSpace::standard(base(5));
    let (x, y) = linear(40, 3);
    let (xv, yv) = linear(10, 4);
    let out = sequential_tune(&space, Samples::new(&x, &y), Samples::new(&xv, &yv), &|_: &[f64]| 0.5, &Serial)
        .map_err(|e| e.to_string())?;
    let mut stages: Vec<Stage> = out.trials.iter().map(|t| t.stage).collect();
    stages.dedup();
    check!(stages == Stage::ORDER, "stage order {stages:?}");

    let (x, y) = linear(80, 1);
    let (xv, yv) = linear(20, 2);
    let counter = Counting(AtomicUsize::new(0));
    let fixed = sequential_tune(&SearchSpace::fixed(base(30)), Samples::new(&x, &y), Samples::new(&xv, &yv), &neg_mse(&yv), &counter)
        .map_err(|e| e.to_string())?;
    let trainings = counter.0.load(Ordering::SeqCst);
    check!(trainings == 6, "{trainings} trainings");
    check!(fixed.best == base(30), "degenerate space changed the defaults");

    let (x, y) = linear(200, 5);
    let (xv, yv) = linear(50, 6);
    let mut space = SearchSpace::fixed(base(15));
    space.learning_rate = vec![0.01, 0.001, 0.0001];
    let lr = sequential_tune(&space, Samples::new(&x, &y), Samples::new(&xv, &yv), &neg_mse(&yv), &Serial)
        .map_err(|e| e.to_string())?;
    check!(lr.best.learning_rate == 0.01, "picked lr {}", lr.best.learning_rate);
    Ok(format!("{} stages in order, 6 trainings on a degenerate space, planted lr 0.01 found", Stage::ORDER.len()))
}

// 9. Ratings and parsing

const RATING_FIXTURES: &[(&str, Option<Rating>)] = &[
    ("High", Some(Rating::High)),
    ("medium", Some(Rating::Medium)),
    ("LOW", Some(Rating::Low)),
    ("  High.\n", Some(Rating::High)),
    ("**Medium**", Some(Rating::Medium)),
    ("Answer: Low", Some(Rating::Low)),
    ("Answer (High, Medium, or Low): High", Some(Rating::High)),
    ("(High, Medium, or Low) medium", Some(Rating::Medium)),
    ("I would rate this as Medium because the structure is uneven.", Some(Rating::Medium)),
    ("Medium. The essay is not high quality.", Some(Rating::Medium)),
    ("High - the thesis is clear", Some(Rating::High)),
    ("\"Low\"", Some(Rating::Low)),
    ("The answer is: HIGH!", Some(Rating::High)),
    ("Medium-high", None),
    ("High/Low", None),
    ("medium or high", None),
    ("low to medium", None),
    ("highly organized", None),
    ("lowercase letters are fine", None),
    ("", None),
    ("N/A", None),
    ("3", None),
];

fn criterion_9() -> Outcome {
    for r in [Rating::Low, Rating::Medium, Rating::High] {
        check!(Rating::from_numeric(r.numeric()) == Some(r), "{r:?} does not round-trip");
    }
    check!([Rating::Low, Rating::Medium, Rating::High].map(Rating::numeric) == [1, 2, 3], "numeric mapping");
    check!(Rating::from_numeric(0).is_none() && Rating::from_numeric(4).is_none(), "out-of-range numerics accepted");
    for (text, expected) in RATING_FIXTURES {
        let got = parse_rating(text).ok();
        check!(got == *expected, "{text:?}: {got:?}, expected {expected:?}");
    }
    let mut lists = 0;
    for n in 1..=15 {
        for sep in ["-", ".", ")", ":", " -"] {
            let text: String = (1..=n).map(|i| format!("{i}{sep} How would you rate aspect {i}?\n")).collect();
            let qs = parse_question_list(&text).map_err(|e| format!("n={n} {sep:?}: {e}"))?;
            check!(qs.len() == n, "n={n} {sep:?}: recovered {}", qs.len());
            lists += 1;
        }
    }
    Ok(format!("bijection holds, {} rating fixtures, {lists} numbered lists", RATING_FIXTURES.len()))
}

// 10. Integration mode

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = trates::demo::write_demo(dir.path(), 40, 3).map_err(|e| e.to_string())?;
    let mut cfg = ExperimentConfig::load(&config).map_err(|e| e.to_string())?;
    cfg.run.tuning = HyperMode::Fixed;
    let mut methods = Vec::new();
    for fs in ["trates", "llm-f", "gp-f", "llm-d"] {
        let mut c = cfg.clone();
        c.run.feature_set = fs.into();
        let session = Session::open(c).map_err(|e| format!("{e:#}"))?;
        if fs == "trates" {
            commands::generate(&session, false).map_err(|e| format!("{e:#}"))?;
            commands::extract(&session, false).map_err(|e| format!("{e:#}"))?;
        }
        let report = commands::evaluate(&session, false).map_err(|e| format!("{e:#}"))?;
        methods.push((fs, report.average()));
    }
    let summary = std::fs::read_to_string(cfg.output.join("summary.md")).map_err(|e| e.to_string())?;
    check!(summary.contains("| Method | organization | AVG |"), "summary header missing:\n{summary}");
    for (fs, _) in &methods {
        check!(summary.contains(&format!("| {fs} |")), "summary lacks a {fs} row:\n{summary}");
    }
    let got: Vec<String> = methods.iter().map(|(m, v)| format!("{m} {v:.3}")).collect();
    Ok(format!(
        "methods-by-traits QWK report emitted on the mock corpus ({}); reference avg QWK, ungated: Starling 0.595, Gemma 0.586, Llama 0.566",
        got.join(", ")
    ))
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome); 10] = [
        (1, "QWK oracle", criterion_1),
        (2, "gradient check", criterion_2),
        (3, "readability oracle", criterion_3),
        (4, "scaling round trip", criterion_4),
        (5, "leakage guards", criterion_5),
        (6, "training protocol", criterion_6),
        (7, "sequential tuner", criterion_7),
        (8, "mock end-to-end", criterion_8),
        (9, "rating mapping and parsing", criterion_9),
        (10, "integration mode", criterion_10),
    ];
    let filter: Option<u32> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (n, name, run) in criteria {
        if filter.is_some_and(|f| f != n) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("criterion {n}: PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {n}: FAIL {name}: {why}");
            }
        }
    }
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
