//! Shallow feed-forward regression network.
//!
//! Dense hidden layers with a shared activation feed a linear output unit.
//! Training minimizes the configured loss plus `l2 * sum(W^2)` over weight
//! matrices (biases are not penalized) with Adam, mini-batches of 128 rows
//! shuffled per epoch, inverted dropout on hidden activations, a plateau
//! scheduler and early stopping. The best validation epoch is restored.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const BATCH_SIZE: usize = 128;
pub const EARLY_STOP_PATIENCE: usize = 10;
pub const LR_PATIENCE: usize = 5;
pub const LR_FACTOR: f64 = 0.1;
/// Minimum absolute decrease of validation loss that counts as improvement.
pub const MIN_DELTA: f64 = 1e-6;
pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;
pub const LEAKY_SLOPE: f64 = 0.01;
pub const ELU_ALPHA: f64 = 1.0;
const SELU_ALPHA: f64 = 1.673_263_242_354_377_3;
const SELU_SCALE: f64 = 1.050_700_987_355_480_5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Activation {
    ReLU,
    SELU,
    LeakyReLU,
    Tanh,
    ELU,
}

impl Activation {
    pub const ALL: [Activation; 5] = [
        Activation::ReLU,
        Activation::SELU,
        Activation::LeakyReLU,
        Activation::Tanh,
        Activation::ELU,
    ];

    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::ReLU => z.max(0.0),
            Activation::LeakyReLU => {
                if z > 0.0 {
                    z
                } else {
                    LEAKY_SLOPE * z
                }
            }
            Activation::Tanh => libm::tanh(z),
            Activation::ELU => {
                if z > 0.0 {
                    z
                } else {
                    ELU_ALPHA * libm::expm1(z)
                }
            }
            Activation::SELU => {
                if z > 0.0 {
                    SELU_SCALE * z
                } else {
                    SELU_SCALE * SELU_ALPHA * libm::expm1(z)
                }
            }
        }
    }

    /// Derivative with respect to the pre-activation `z`.
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::ReLU => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyReLU => {
                if z > 0.0 {
                    1.0
                } else {
                    LEAKY_SLOPE
                }
            }
            Activation::Tanh => {
                let t = libm::tanh(z);
                1.0 - t * t
            }
            Activation::ELU => {
                if z > 0.0 {
                    1.0
                } else {
                    ELU_ALPHA * libm::exp(z)
                }
            }
            Activation::SELU => {
                if z > 0.0 {
                    SELU_SCALE
                } else {
                    SELU_SCALE * SELU_ALPHA * libm::exp(z)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LossKind {
    MSE,
    WeightedMSE,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub loss: LossKind,
    pub learning_rate: f64,
    pub hidden_layers: usize,
    pub neurons_per_layer: usize,
    pub activation: Activation,
    pub l2: f64,
    pub dropout: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            loss: LossKind::MSE,
            learning_rate: 0.001,
            hidden_layers: 1,
            neurons_per_layer: 32,
            activation: Activation::ReLU,
            l2: 0.0,
            dropout: 0.0,
            batch_size: BATCH_SIZE,
            max_epochs: 500,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegressorError {
    #[error("input has {found} features, model expects {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("{what}: lengths {left} and {right} differ")]
    Length { what: &'static str, left: usize, right: usize },
    #[error("empty {0} set")]
    Empty(&'static str),
    #[error("non-finite loss at epoch {epoch}, batch {batch} (learning rate {learning_rate}, last finite loss {last_finite})")]
    NonFinite {
        epoch: usize,
        batch: usize,
        learning_rate: f64,
        last_finite: f64,
    },
    #[error("invalid hyperparameters: {0}")]
    Invalid(String),
}

/// Weighted mean squared error; `weights = None` is plain MSE.
pub fn loss(pred: &[f64], target: &[f64], weights: Option<&[f64]>) -> Result<f64, RegressorError> {
    if pred.len() != target.len() {
        return Err(RegressorError::Length {
            what: "pred/target",
            left: pred.len(),
            right: target.len(),
        });
    }
    if let Some(w) = weights {
        if w.len() != pred.len() {
            return Err(RegressorError::Length {
                what: "pred/weights",
                left: pred.len(),
                right: w.len(),
            });
        }
    }
    if pred.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = pred
        .iter()
        .zip(target)
        .enumerate()
        .map(|(i, (p, t))| weights.map_or(1.0, |w| w[i]) * (p - t) * (p - t))
        .sum();
    Ok(sum / pred.len() as f64)
}

/// Inverse-frequency weights keyed by the rounded scaled target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleWeights {
    /// Rounded target bin and its weight, normalized to mean 1 over the fitted rows.
    pub bins: BTreeMap<i64, f64>,
    /// Weight for bins absent from the fitted rows (the largest fitted weight).
    pub unseen: f64,
}

impl SampleWeights {
    pub fn fit(targets: &[f64]) -> Self {
        let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
        for &t in targets {
            *counts.entry(libm::round(t) as i64).or_default() += 1;
        }
        let raw: BTreeMap<i64, f64> = counts.iter().map(|(&b, &c)| (b, 1.0 / c as f64)).collect();
        let mean = if targets.is_empty() {
            1.0
        } else {
            targets.iter().map(|&t| raw[&(libm::round(t) as i64)]).sum::<f64>() / targets.len() as f64
        };
        let bins: BTreeMap<i64, f64> = raw.into_iter().map(|(b, w)| (b, w / mean)).collect();
        let unseen = bins.values().copied().fold(1.0, f64::max);
        SampleWeights { bins, unseen }
    }

    pub fn weight(&self, target: f64) -> f64 {
        *self.bins.get(&(libm::round(target) as i64)).unwrap_or(&self.unseen)
    }

    pub fn weights(&self, targets: &[f64]) -> Vec<f64> {
        targets.iter().map(|&t| self.weight(t)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs x inputs`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn init(inputs: usize, outputs: usize, rng: &mut ChaCha8Rng) -> Self {
        let limit = 1.0 / libm::sqrt(inputs as f64);
        let weights = (0..inputs * outputs).map(|_| rng.random_range(-limit..limit)).collect();
        Dense {
            inputs,
            outputs,
            weights,
            bias: vec![0.0; outputs],
        }
    }

    fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.outputs {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            let mut s = self.bias[o];
            for (w, v) in row.iter().zip(x) {
                s += w * v;
            }
            out.push(s);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    /// Learning rate used during this epoch.
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub activation: Activation,
    pub layers: Vec<Dense>,
}

/// Activations kept for backpropagation of one sample.
struct Trace {
    /// Input of each layer (post-dropout for hidden layers).
    inputs: Vec<Vec<f64>>,
    /// Pre-activations of hidden layers.
    pre: Vec<Vec<f64>>,
    /// Dropout multipliers per hidden layer (empty when dropout is off).
    masks: Vec<Vec<f64>>,
    output: f64,
}

impl Network {
    pub fn new(hp: &Hyperparameters, input_dim: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
        let mut layers = Vec::with_capacity(hp.hidden_layers + 1);
        let mut fan_in = input_dim;
        for _ in 0..hp.hidden_layers {
            layers.push(Dense::init(fan_in, hp.neurons_per_layer, &mut rng));
            fan_in = hp.neurons_per_layer;
        }
        layers.push(Dense::init(fan_in, 1, &mut rng));
        Network {
            activation: hp.activation,
            layers,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn shapes(&self) -> Vec<(usize, usize)> {
        self.layers.iter().map(|l| (l.inputs, l.outputs)).collect()
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64, RegressorError> {
        if x.len() != self.input_dim() {
            return Err(RegressorError::Dimension {
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        Ok(self.forward_plain(x))
    }

    fn forward_plain(&self, x: &[f64]) -> f64 {
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            layer.forward(&cur, &mut next);
            if k < last {
                for v in next.iter_mut() {
                    *v = self.activation.apply(*v);
                }
            }
            core::mem::swap(&mut cur, &mut next);
        }
        cur[0]
    }

    fn forward_trace(&self, x: &[f64], dropout: f64, rng: Option<&mut ChaCha8Rng>) -> Trace {
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(last);
        let mut masks = Vec::with_capacity(last);
        let mut cur = x.to_vec();
        let mut rng = rng;
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::new();
            layer.forward(&cur, &mut z);
            inputs.push(core::mem::take(&mut cur));
            if k == last {
                return Trace {
                    inputs,
                    pre,
                    masks,
                    output: z[0],
                };
            }
            let mut a: Vec<f64> = z.iter().map(|&v| self.activation.apply(v)).collect();
            let mut mask = Vec::new();
            if dropout > 0.0 {
                if let Some(r) = rng.as_deref_mut() {
                    let keep = 1.0 - dropout;
                    mask = (0..a.len())
                        .map(|_| if r.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                        .collect();
                    for (v, m) in a.iter_mut().zip(&mask) {
                        *v *= m;
                    }
                }
            }
            pre.push(z);
            masks.push(mask);
            cur = a;
        }
        unreachable!()
    }

    fn zero_grads(&self) -> Vec<Dense> {
        self.layers
            .iter()
            .map(|l| Dense {
                inputs: l.inputs,
                outputs: l.outputs,
                weights: vec![0.0; l.weights.len()],
                bias: vec![0.0; l.bias.len()],
            })
            .collect()
    }

    /// Adds `d_out * d(output)/d(params)` for one traced sample into `grads`.
    fn backward(&self, trace: &Trace, d_out: f64, grads: &mut [Dense]) {
        let mut delta = vec![d_out];
        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            let input = &trace.inputs[k];
            let g = &mut grads[k];
            for o in 0..layer.outputs {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                g.bias[o] += d;
                let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (gw, v) in row.iter_mut().zip(input) {
                    *gw += d * v;
                }
            }
            if k == 0 {
                break;
            }
            let mut prev = vec![0.0; layer.inputs];
            for o in 0..layer.outputs {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (p, w) in prev.iter_mut().zip(row) {
                    *p += d * w;
                }
            }
            let z = &trace.pre[k - 1];
            let mask = &trace.masks[k - 1];
            for (i, p) in prev.iter_mut().enumerate() {
                *p *= self.activation.derivative(z[i]);
                if !mask.is_empty() {
                    *p *= mask[i];
                }
            }
            delta = prev;
        }
    }

    /// Objective `loss(batch) + l2 * sum(W^2)` and its gradient, without dropout.
    pub fn objective_and_gradient(
        &self,
        x: &[Vec<f64>],
        y: &[f64],
        weights: Option<&[f64]>,
        l2: f64,
    ) -> (f64, Vec<f64>) {
        let mut grads = self.zero_grads();
        let n = x.len().max(1) as f64;
        let mut total = 0.0;
        for (i, row) in x.iter().enumerate() {
            let trace = self.forward_trace(row, 0.0, None);
            let w = weights.map_or(1.0, |w| w[i]);
            let r = trace.output - y[i];
            total += w * r * r;
            self.backward(&trace, 2.0 * w * r / n, &mut grads);
        }
        let mut obj = total / n;
        for (layer, g) in self.layers.iter().zip(grads.iter_mut()) {
            for (gw, w) in g.weights.iter_mut().zip(&layer.weights) {
                obj += l2 * w * w;
                *gw += 2.0 * l2 * w;
            }
        }
        (obj, flatten(&grads))
    }

    pub fn parameters(&self) -> Vec<f64> {
        flatten(&self.layers)
    }

    pub fn set_parameters(&mut self, params: &[f64]) {
        let mut k = 0;
        for l in &mut self.layers {
            for w in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *w = params[k];
                k += 1;
            }
        }
    }

    pub fn weight_norm_sq(&self) -> f64 {
        self.layers.iter().flat_map(|l| &l.weights).map(|w| w * w).sum()
    }
}

fn flatten(layers: &[Dense]) -> Vec<f64> {
    layers
        .iter()
        .flat_map(|l| l.weights.iter().chain(&l.bias))
        .copied()
        .collect()
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - libm::pow(ADAM_BETA1, f64::from(self.t));
        let c2 = 1.0 - libm::pow(ADAM_BETA2, f64::from(self.t));
        for i in 0..params.len() {
            self.m[i] = ADAM_BETA1 * self.m[i] + (1.0 - ADAM_BETA1) * grads[i];
            self.v[i] = ADAM_BETA2 * self.v[i] + (1.0 - ADAM_BETA2) * grads[i] * grads[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= lr * m_hat / (libm::sqrt(v_hat) + ADAM_EPS);
        }
    }
}

/// Rows and scaled targets for training or validation.
#[derive(Debug, Clone, Copy)]
pub struct Samples<'a> {
    pub x: &'a [Vec<f64>],
    pub y: &'a [f64],
}

impl<'a> Samples<'a> {
    pub fn new(x: &'a [Vec<f64>], y: &'a [f64]) -> Self {
        Samples { x, y }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedRegressor {
    pub hyperparameters: Hyperparameters,
    pub network: Network,
    pub sample_weights: Option<SampleWeights>,
    pub history: Vec<EpochRecord>,
    /// 1-based epoch whose weights were restored.
    pub best_epoch: usize,
    pub best_val_loss: f64,
}

impl TrainedRegressor {
    pub fn epochs_run(&self) -> usize {
        self.history.len()
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64, RegressorError> {
        self.network.predict(x)
    }

    pub fn predict_many(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>, RegressorError> {
        rows.iter().map(|r| self.predict(r)).collect()
    }
}

fn check(hp: &Hyperparameters, train: &Samples, val: &Samples) -> Result<usize, RegressorError> {
    if train.x.is_empty() {
        return Err(RegressorError::Empty("training"));
    }
    if val.x.is_empty() {
        return Err(RegressorError::Empty("validation"));
    }
    for (what, s) in [("train x/y", train), ("val x/y", val)] {
        if s.x.len() != s.y.len() {
            return Err(RegressorError::Length {
                what,
                left: s.x.len(),
                right: s.y.len(),
            });
        }
    }
    let dim = train.x[0].len();
    for row in train.x.iter().chain(val.x) {
        if row.len() != dim {
            return Err(RegressorError::Dimension {
                expected: dim,
                found: row.len(),
            });
        }
    }
    let invalid = |m: &str| Err(RegressorError::Invalid(m.into()));
    if dim == 0 {
        return invalid("no input features");
    }
    if !(1..=3).contains(&hp.hidden_layers) {
        return invalid("hidden_layers must be 1, 2 or 3");
    }
    if hp.neurons_per_layer == 0 || hp.batch_size == 0 || hp.max_epochs == 0 {
        return invalid("neurons, batch size and max epochs must be positive");
    }
    if !(hp.learning_rate > 0.0 && hp.learning_rate.is_finite()) {
        return invalid("learning rate must be positive");
    }
    if !(hp.l2 >= 0.0) || !(0.0..=0.5).contains(&hp.dropout) {
        return invalid("l2 must be >= 0 and dropout in [0, 0.5]");
    }
    Ok(dim)
}

fn evaluate(net: &Network, s: &Samples, weights: Option<&[f64]>) -> f64 {
    let pred: Vec<f64> = s.x.iter().map(|r| net.forward_plain(r)).collect();
    loss(&pred, s.y, weights).unwrap_or(f64::NAN)
}

/// Trains a fresh network and returns it with the best validation epoch restored.
pub fn train(hp: &Hyperparameters, train: Samples, val: Samples) -> Result<TrainedRegressor, RegressorError> {
    let dim = check(hp, &train, &val)?;
    let mut net = Network::new(hp, dim);
    let sample_weights = (hp.loss == LossKind::WeightedMSE).then(|| SampleWeights::fit(train.y));
    let train_w = sample_weights.as_ref().map(|s| s.weights(train.y));
    let val_w = sample_weights.as_ref().map(|s| s.weights(val.y));

    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed ^ 0x5eed_0f_7a11);
    let mut params = net.parameters();
    let mut adam = Adam::new(params.len());
    let mut lr = hp.learning_rate;
    let mut order: Vec<usize> = (0..train.x.len()).collect();
    let mut history = Vec::new();
    let mut best = (f64::INFINITY, 0usize, params.clone());
    let mut lr_best = f64::INFINITY;
    let mut lr_wait = 0usize;
    let mut stop_wait = 0usize;
    let mut last_finite = f64::NAN;

    for epoch in 1..=hp.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (b, chunk) in order.chunks(hp.batch_size).enumerate() {
            let mut grads = net.zero_grads();
            let n = chunk.len() as f64;
            let mut batch_loss = 0.0;
            for &i in chunk {
                let trace = net.forward_trace(&train.x[i], hp.dropout, Some(&mut rng));
                let w = train_w.as_ref().map_or(1.0, |w| w[i]);
                let r = trace.output - train.y[i];
                batch_loss += w * r * r;
                net.backward(&trace, 2.0 * w * r / n, &mut grads);
            }
            let mut g = flatten(&grads);
            if hp.l2 > 0.0 {
                let mut k = 0;
                for l in &net.layers {
                    for w in &l.weights {
                        g[k] += 2.0 * hp.l2 * w;
                        k += 1;
                    }
                    k += l.bias.len();
                }
            }
            if !batch_loss.is_finite() || g.iter().any(|v| !v.is_finite()) {
                return Err(RegressorError::NonFinite {
                    epoch,
                    batch: b,
                    learning_rate: lr,
                    last_finite,
                });
            }
            epoch_loss += batch_loss;
            adam.step(&mut params, &g, lr);
            net.set_parameters(&params);
        }
        let train_loss = epoch_loss / train.x.len() as f64;
        let val_loss = evaluate(&net, &val, val_w.as_deref());
        if !val_loss.is_finite() {
            return Err(RegressorError::NonFinite {
                epoch,
                batch: usize::MAX,
                learning_rate: lr,
                last_finite,
            });
        }
        last_finite = val_loss;
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            learning_rate: lr,
        });

        if val_loss < best.0 - MIN_DELTA {
            best = (val_loss, epoch, params.clone());
            stop_wait = 0;
        } else {
            stop_wait += 1;
        }
        if val_loss < lr_best - MIN_DELTA {
            lr_best = val_loss;
            lr_wait = 0;
        } else {
            lr_wait += 1;
            if lr_wait >= LR_PATIENCE {
                lr *= LR_FACTOR;
                lr_wait = 0;
            }
        }
        if stop_wait >= EARLY_STOP_PATIENCE {
            break;
        }
    }
    net.set_parameters(&best.2);
    Ok(TrainedRegressor {
        hyperparameters: *hp,
        network: net,
        sample_weights,
        history,
        best_epoch: best.1,
        best_val_loss: best.0,
    })
}
