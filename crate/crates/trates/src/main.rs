use std::io::{BufRead, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use trates::commands::{self, Session};
use trates::config::{ExperimentConfig, FEATURE_SETS};
use trates_core::eval::HyperMode;
use trates_core::features::FeatureCategory;
use trates_core::text::{tokenize, PosTagger, TaggedSentence};
use trates_core::trait_features::Imputation;

#[derive(Parser)]
#[command(name = "trates", version, about = "Trait-based cross-prompt essay scoring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by the pipeline commands; flags override the config file.
#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long, short)]
    config: PathBuf,
    /// Restrict to a trait; repeatable.
    #[arg(long = "trait")]
    traits: Vec<String>,
    #[arg(long, value_parser = FEATURE_SETS)]
    feature_set: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// `tune` runs the sequential search; `fixed` trains the defaults once.
    #[arg(long, value_parser = ["tune", "fixed"])]
    tuning: Option<String>,
    /// Unparseable rating replies: impute `medium` or `fail`.
    #[arg(long, value_parser = ["medium", "fail"])]
    on_unparseable: Option<String>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if !self.traits.is_empty() {
            cfg.run.traits = self.traits.clone();
        }
        if let Some(fs) = &self.feature_set {
            cfg.run.feature_set = fs.clone();
        }
        if let Some(s) = self.seed {
            cfg.run.seed = s;
        }
        if let Some(t) = &self.tuning {
            cfg.run.tuning = if t == "tune" { HyperMode::Tune } else { HyperMode::Fixed };
        }
        if let Some(u) = &self.on_unparseable {
            cfg.run.on_unparseable = if u == "fail" { Imputation::Fail } else { Imputation::Medium };
        }
        if let Some(o) = &self.output {
            let cache_inside = cfg.llm.cache_dir.starts_with(&cfg.output);
            let rel = cfg.llm.cache_dir.strip_prefix(&cfg.output).map(|p| p.to_path_buf()).ok();
            cfg.output = o.clone();
            if let (true, Some(rel)) = (cache_inside, rel) {
                cfg.llm.cache_dir = cfg.output.join(rel);
            }
        }
        if let Some(t) = self.threads {
            cfg.run.threads = t;
        }
        Ok(cfg)
    }

    fn session(&self) -> Result<Session> {
        Session::open(self.load()?)
    }
}

fn parse_category(s: &str) -> Result<FeatureCategory, String> {
    FeatureCategory::parse(s).ok_or_else(|| {
        let names: Vec<&str> = FeatureCategory::ALL.iter().map(|c| c.name()).collect();
        format!("unknown category {s:?}; valid names: {}", names.join(", "))
    })
}

#[derive(Subcommand)]
enum Command {
    /// Generate assessment questions for every rubric of the configured traits.
    GenerateQuestions {
        #[command(flatten)]
        common: Common,
        /// Regenerate existing batches; old files move to `archive/`.
        #[arg(long)]
        force: bool,
    },
    /// Answer every question for every essay and compute generic features.
    ExtractFeatures {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        allow_mixed: bool,
    },
    /// Run the configured cross-validation and write reports.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        allow_mixed: bool,
    },
    /// Rerun evaluation without one feature category at a time.
    Ablate {
        #[command(flatten)]
        common: Common,
        /// Category to remove; repeatable. Defaults to all seven.
        #[arg(long = "category", value_parser = parse_category)]
        categories: Vec<FeatureCategory>,
        #[arg(long)]
        allow_mixed: bool,
    },
    /// Print the generic feature registry as CSV.
    Registry {
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write a synthetic dataset and a mock-backend config into a directory.
    Demo {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = 150)]
        essays_per_prompt: usize,
        #[arg(long, default_value_t = 3)]
        seed: u64,
    },
    /// Tokenize stdin line by line; prints one sentence per line, tokens space-separated.
    Tokenize,
    /// Train the POS tagger from a two-column (word, tag) file with blank lines between sentences.
    TrainTagger {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 5)]
        iterations: usize,
        #[arg(long, default_value_t = 0.01)]
        min_weight: f32,
        #[arg(long, default_value_t = 13)]
        seed: u64,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::GenerateQuestions { common, force } => {
            let s = common.session()?;
            let r = commands::generate(&s, force)?;
            eprintln!(
                "generated {} batches, kept {} existing, archived {}; {} gateway calls",
                r.generated.len(),
                r.skipped.len(),
                r.archived.len(),
                r.gateway_calls
            );
        }
        Command::ExtractFeatures { common, allow_mixed } => {
            let s = common.session()?;
            let r = commands::extract(&s, allow_mixed)?;
            eprintln!(
                "{} answers ({} imputed), {} generic rows; {} cache hits, {} gateway calls",
                r.answers, r.imputed, r.generic_rows, r.cache_hits, r.gateway_calls
            );
            for f in r.files {
                println!("{}", f.display());
            }
        }
        Command::Evaluate { common, allow_mixed } => {
            let s = common.session()?;
            let started = std::time::Instant::now();
            let r = commands::evaluate(&s, allow_mixed)?;
            print!("{}", commands::table1(std::slice::from_ref(&r)));
            eprintln!("wall-clock {:.1?}", started.elapsed());
        }
        Command::Ablate { common, categories, allow_mixed } => {
            let s = common.session()?;
            let categories = if categories.is_empty() { FeatureCategory::ALL.to_vec() } else { categories };
            let r = commands::ablate(&s, &categories, allow_mixed)?;
            print!("{}", commands::table3(&r));
        }
        Command::Registry { output } => {
            let text = commands::export_registry(output.as_deref())?;
            if output.is_none() {
                print!("{text}");
            }
        }
        Command::Demo { dir, essays_per_prompt, seed } => {
            let cfg = trates::demo::write_demo(&dir, essays_per_prompt, seed)?;
            println!("{}", cfg.display());
        }
        Command::Tokenize => {
            let stdin = std::io::stdin();
            let mut out = std::io::BufWriter::new(std::io::stdout());
            for line in stdin.lock().lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                for s in tokenize(&line).sentences {
                    writeln!(out, "{}", s.surfaces().join(" "))?;
                }
            }
        }
        Command::TrainTagger { input, output, iterations, min_weight, seed } => {
            let text = std::fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
            let mut sentences = Vec::new();
            let mut cur = TaggedSentence { words: Vec::new(), tags: Vec::new() };
            for line in text.lines() {
                if line.is_empty() {
                    if !cur.words.is_empty() {
                        sentences.push(std::mem::replace(&mut cur, TaggedSentence { words: Vec::new(), tags: Vec::new() }));
                    }
                    continue;
                }
                let (w, t) = line.split_once('\t').context("expected word<TAB>tag")?;
                cur.words.push(w.to_string());
                cur.tags.push(t.to_string());
            }
            if !cur.words.is_empty() {
                sentences.push(cur);
            }
            eprintln!("training on {} sentences", sentences.len());
            let tagger = PosTagger::train(&sentences, iterations, seed);
            std::fs::write(&output, tagger.to_model_string(min_weight))?;
        }
    }
    Ok(())
}
