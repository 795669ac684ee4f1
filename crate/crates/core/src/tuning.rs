//! One-at-a-time hyperparameter search.
//!
//! Stages run in a fixed order. Each stage trains one model per candidate
//! with every other parameter at its current value (the winner of earlier
//! stages, the default for later ones), scores it on validation QWK and keeps
//! the best. Ties go to the default value, then to the earlier candidate.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::regressor::{self, Activation, Hyperparameters, LossKind, RegressorError, Samples, TrainedRegressor};

/// Scores closer than this count as tied.
pub const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Loss,
    LearningRate,
    Architecture,
    Activation,
    L2,
    Dropout,
}

impl Stage {
    pub const ORDER: [Stage; 6] = [
        Stage::Loss,
        Stage::LearningRate,
        Stage::Architecture,
        Stage::Activation,
        Stage::L2,
        Stage::Dropout,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Loss => "loss",
            Stage::LearningRate => "learning_rate",
            Stage::Architecture => "hidden_layers x neurons",
            Stage::Activation => "activation",
            Stage::L2 => "l2",
            Stage::Dropout => "dropout",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Candidate {
    Loss(LossKind),
    LearningRate(f64),
    Architecture { layers: usize, neurons: usize },
    Activation(Activation),
    L2(f64),
    Dropout(f64),
}

impl Candidate {
    pub fn stage(&self) -> Stage {
        match self {
            Candidate::Loss(_) => Stage::Loss,
            Candidate::LearningRate(_) => Stage::LearningRate,
            Candidate::Architecture { .. } => Stage::Architecture,
            Candidate::Activation(_) => Stage::Activation,
            Candidate::L2(_) => Stage::L2,
            Candidate::Dropout(_) => Stage::Dropout,
        }
    }

    pub fn apply(&self, hp: &mut Hyperparameters) {
        match *self {
            Candidate::Loss(v) => hp.loss = v,
            Candidate::LearningRate(v) => hp.learning_rate = v,
            Candidate::Architecture { layers, neurons } => {
                hp.hidden_layers = layers;
                hp.neurons_per_layer = neurons;
            }
            Candidate::Activation(v) => hp.activation = v,
            Candidate::L2(v) => hp.l2 = v,
            Candidate::Dropout(v) => hp.dropout = v,
        }
    }

    /// The candidate this stage would pick out of `hp`.
    pub fn from_hp(stage: Stage, hp: &Hyperparameters) -> Candidate {
        match stage {
            Stage::Loss => Candidate::Loss(hp.loss),
            Stage::LearningRate => Candidate::LearningRate(hp.learning_rate),
            Stage::Architecture => Candidate::Architecture {
                layers: hp.hidden_layers,
                neurons: hp.neurons_per_layer,
            },
            Stage::Activation => Candidate::Activation(hp.activation),
            Stage::L2 => Candidate::L2(hp.l2),
            Stage::Dropout => Candidate::Dropout(hp.dropout),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Candidate::Loss(v) => format!("{v:?}"),
            Candidate::LearningRate(v) | Candidate::L2(v) | Candidate::Dropout(v) => format!("{v}"),
            Candidate::Architecture { layers, neurons } => format!("{layers}x{neurons}"),
            Candidate::Activation(v) => format!("{v:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub defaults: Hyperparameters,
    pub loss: Vec<LossKind>,
    pub learning_rate: Vec<f64>,
    pub architecture: Vec<(usize, usize)>,
    pub activation: Vec<Activation>,
    pub l2: Vec<f64>,
    pub dropout: Vec<f64>,
}

impl SearchSpace {
    /// The full grid with its standard defaults.
    pub fn standard(base: Hyperparameters) -> Self {
        let defaults = Hyperparameters {
            loss: LossKind::MSE,
            learning_rate: 0.001,
            hidden_layers: 1,
            neurons_per_layer: 32,
            activation: Activation::ReLU,
            l2: 0.0,
            dropout: 0.0,
            ..base
        };
        SearchSpace {
            defaults,
            loss: alloc::vec![LossKind::MSE, LossKind::WeightedMSE],
            learning_rate: alloc::vec![0.01, 0.001, 0.0001],
            architecture: alloc::vec![(1, 16), (1, 32), (2, 16), (2, 32), (3, 16), (3, 32)],
            activation: Activation::ALL.to_vec(),
            l2: alloc::vec![0.0, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 0.1],
            dropout: alloc::vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
        }
    }

    /// Every stage holds only the default.
    pub fn fixed(defaults: Hyperparameters) -> Self {
        SearchSpace {
            defaults,
            loss: alloc::vec![defaults.loss],
            learning_rate: alloc::vec![defaults.learning_rate],
            architecture: alloc::vec![(defaults.hidden_layers, defaults.neurons_per_layer)],
            activation: alloc::vec![defaults.activation],
            l2: alloc::vec![defaults.l2],
            dropout: alloc::vec![defaults.dropout],
        }
    }

    pub fn candidates(&self, stage: Stage) -> Vec<Candidate> {
        match stage {
            Stage::Loss => self.loss.iter().map(|&v| Candidate::Loss(v)).collect(),
            Stage::LearningRate => self.learning_rate.iter().map(|&v| Candidate::LearningRate(v)).collect(),
            Stage::Architecture => self
                .architecture
                .iter()
                .map(|&(layers, neurons)| Candidate::Architecture { layers, neurons })
                .collect(),
            Stage::Activation => self.activation.iter().map(|&v| Candidate::Activation(v)).collect(),
            Stage::L2 => self.l2.iter().map(|&v| Candidate::L2(v)).collect(),
            Stage::Dropout => self.dropout.iter().map(|&v| Candidate::Dropout(v)).collect(),
        }
    }

    pub fn total_candidates(&self) -> usize {
        Stage::ORDER.iter().map(|&s| self.candidates(s).len()).sum()
    }

    pub fn validate(&self) -> Result<(), TuneError> {
        for stage in Stage::ORDER {
            let c = self.candidates(stage);
            if c.is_empty() {
                return Err(TuneError::EmptyStage(stage));
            }
            if !c.contains(&Candidate::from_hp(stage, &self.defaults)) {
                return Err(TuneError::DefaultMissing(stage));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub stage: Stage,
    pub candidate: Candidate,
    pub hyperparameters: Hyperparameters,
    pub val_qwk: f64,
    pub best_val_loss: f64,
    pub epochs_run: usize,
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneOutcome {
    pub best: Hyperparameters,
    pub trials: Vec<Trial>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TuneError {
    #[error("stage {0:?} has no candidates")]
    EmptyStage(Stage),
    #[error("stage {0:?} does not list its default value")]
    DefaultMissing(Stage),
    #[error("stage {stage:?}, candidate {candidate}: {source}")]
    Training {
        stage: Stage,
        candidate: String,
        source: RegressorError,
    },
}

/// Trains a batch of configurations on the same data; results keep input order.
pub trait TrainBatch {
    fn train_all(
        &self,
        configs: &[Hyperparameters],
        train: Samples<'_>,
        val: Samples<'_>,
    ) -> Vec<Result<TrainedRegressor, RegressorError>>;
}

/// Trains configurations one after another.
pub struct Serial;

impl TrainBatch for Serial {
    fn train_all(
        &self,
        configs: &[Hyperparameters],
        train: Samples<'_>,
        val: Samples<'_>,
    ) -> Vec<Result<TrainedRegressor, RegressorError>> {
        configs.iter().map(|hp| regressor::train(hp, train, val)).collect()
    }
}

/// Runs the search. `score` maps scaled validation predictions to a QWK.
pub fn sequential_tune(
    space: &SearchSpace,
    train: Samples<'_>,
    val: Samples<'_>,
    score: &dyn Fn(&[f64]) -> f64,
    trainer: &dyn TrainBatch,
) -> Result<TuneOutcome, TuneError> {
    space.validate()?;
    let mut current = space.defaults;
    let mut trials = Vec::with_capacity(space.total_candidates());
    for stage in Stage::ORDER {
        let candidates = space.candidates(stage);
        let default = Candidate::from_hp(stage, &space.defaults);
        let configs: Vec<Hyperparameters> = candidates
            .iter()
            .map(|c| {
                let mut hp = current;
                c.apply(&mut hp);
                hp
            })
            .collect();
        let results = trainer.train_all(&configs, train, val);
        let first = trials.len();
        let mut best: Option<(usize, f64)> = None;
        for (k, (cand, result)) in candidates.iter().zip(results).enumerate() {
            let model = result.map_err(|source| TuneError::Training {
                stage,
                candidate: cand.label(),
                source,
            })?;
            let pred: Vec<f64> = val.x.iter().map(|r| model.network.predict(r).unwrap_or(f64::NAN)).collect();
            let q = score(&pred);
            let q = if q.is_finite() { q } else { f64::NEG_INFINITY };
            trials.push(Trial {
                stage,
                candidate: *cand,
                hyperparameters: configs[k],
                val_qwk: q,
                best_val_loss: model.best_val_loss,
                epochs_run: model.epochs_run(),
                selected: false,
            });
            best = match best {
                None => Some((k, q)),
                Some((bk, bq)) => {
                    if q > bq + TIE_EPS {
                        Some((k, q))
                    } else if (q - bq).abs() <= TIE_EPS && *cand == default && candidates[bk] != default {
                        Some((k, q))
                    } else {
                        Some((bk, bq))
                    }
                }
            };
        }
        let (winner, _) = best.expect("stage has candidates");
        trials[first + winner].selected = true;
        current = configs[winner];
    }
    Ok(TuneOutcome { best: current, trials })
}
