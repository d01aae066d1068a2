//! P(Mental | word) over feature vectors.
//!
//! The model is a sigmoid head on either the raw features (`hidden_dim == 0`)
//! or a single tanh hidden layer with inverted dropout during training.
//! Training is mini-batch gradient descent with decoupled weight decay, a
//! step learning-rate drop and per-epoch dev-accuracy model selection.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::FeatureVector;
use crate::error::{Error, Result};
use crate::label::Label;

pub const DEFAULT_THRESHOLD: f64 = 0.5;
const CHECKPOINT_FORMAT: &str = "lexloop-classifier";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub word: String,
    pub features: FeatureVector,
    pub label: Label,
}

impl LabeledExample {
    pub fn new(word: impl Into<String>, features: FeatureVector, label: Label) -> Self {
        Self {
            word: word.into(),
            features,
            label,
        }
    }
}

/// Model parameters; gradients share the same shape.
///
/// `hidden_weights` is row-major `hidden_dim x input_dim`. Without a hidden
/// layer it and `hidden_bias` are empty and `output_weights` has
/// `input_dim` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub hidden_weights: Vec<f64>,
    pub hidden_bias: Vec<f64>,
    pub output_weights: Vec<f64>,
    pub output_bias: f64,
}

impl Params {
    fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        let out = if hidden_dim == 0 { input_dim } else { hidden_dim };
        Self {
            hidden_weights: vec![0.0; hidden_dim * input_dim],
            hidden_bias: vec![0.0; hidden_dim],
            output_weights: vec![0.0; out],
            output_bias: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.hidden_weights.len() + self.hidden_bias.len() + self.output_weights.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat view in the order hidden weights, hidden bias, output weights,
    /// output bias.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.len());
        flat.extend_from_slice(&self.hidden_weights);
        flat.extend_from_slice(&self.hidden_bias);
        flat.extend_from_slice(&self.output_weights);
        flat.push(self.output_bias);
        flat
    }

    /// Inverse of [`Params::to_flat`] for a shape taken from `self`.
    pub fn with_flat(&self, flat: &[f64]) -> Self {
        assert_eq!(flat.len(), self.len(), "flat parameter length");
        let (hw, rest) = flat.split_at(self.hidden_weights.len());
        let (hb, rest) = rest.split_at(self.hidden_bias.len());
        let (ow, ob) = rest.split_at(self.output_weights.len());
        Self {
            hidden_weights: hw.to_vec(),
            hidden_bias: hb.to_vec(),
            output_weights: ow.to_vec(),
            output_bias: ob[0],
        }
    }

    fn weight_norm_sq(&self) -> f64 {
        self.hidden_weights
            .iter()
            .chain(&self.output_weights)
            .map(|w| w * w)
            .sum()
    }

    fn all_finite(&self) -> bool {
        self.to_flat().iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    input_dim: usize,
    hidden_dim: usize,
    params: Params,
    threshold: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of `sigmoid(z)` against `y`, computed from the logit.
fn bce_from_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p() - y * z
}

impl ClassifierModel {
    /// All parameters zero; the model outputs 0.5 everywhere.
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_dim,
            params: Params::zeros(input_dim, hidden_dim),
            threshold: DEFAULT_THRESHOLD,
        }
    }

    /// Zero for the logistic head; Xavier-uniform weights for a hidden layer.
    pub fn initialized<R: Rng>(input_dim: usize, hidden_dim: usize, rng: &mut R) -> Self {
        let mut model = Self::zeros(input_dim, hidden_dim);
        if hidden_dim > 0 {
            let limit = (6.0 / (input_dim + hidden_dim) as f64).sqrt();
            for w in &mut model.params.hidden_weights {
                *w = rng.gen_range(-limit..limit);
            }
            let limit = (6.0 / (hidden_dim + 1) as f64).sqrt();
            for w in &mut model.params.output_weights {
                *w = rng.gen_range(-limit..limit);
            }
        }
        model
    }

    pub fn from_params(input_dim: usize, hidden_dim: usize, params: Params, threshold: f64) -> Result<Self> {
        let shape = Params::zeros(input_dim, hidden_dim);
        if params.hidden_weights.len() != shape.hidden_weights.len()
            || params.hidden_bias.len() != shape.hidden_bias.len()
            || params.output_weights.len() != shape.output_weights.len()
        {
            return Err(Error::Config("parameter shapes do not match dimensions".into()));
        }
        if !params.all_finite() {
            return Err(Error::NonFinite);
        }
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::Config(format!("threshold {threshold} outside (0, 1)")));
        }
        Ok(Self {
            input_dim,
            hidden_dim,
            params,
            threshold,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                actual: x.len(),
            });
        }
        Ok(())
    }

    fn hidden_activations(&self, x: &[f64]) -> Vec<f64> {
        let p = &self.params;
        (0..self.hidden_dim)
            .map(|j| {
                let row = &p.hidden_weights[j * self.input_dim..(j + 1) * self.input_dim];
                let a: f64 = row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + p.hidden_bias[j];
                a.tanh()
            })
            .collect()
    }

    fn logit_unchecked(&self, x: &[f64]) -> f64 {
        let p = &self.params;
        if self.hidden_dim == 0 {
            p.output_weights.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + p.output_bias
        } else {
            let h = self.hidden_activations(x);
            p.output_weights.iter().zip(&h).map(|(w, hi)| w * hi).sum::<f64>() + p.output_bias
        }
    }

    /// The pre-sigmoid score.
    pub fn logit(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.logit_unchecked(x))
    }

    /// P(Mental | x). Dropout is never applied here.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.logit(x)?))
    }

    /// Mental iff the probability is strictly greater than the threshold.
    pub fn predict_class(&self, x: &[f64]) -> Result<Label> {
        let p = self.forward(x)?;
        Ok(if p > self.threshold {
            Label::Mental
        } else {
            Label::Physical
        })
    }

    pub fn accuracy(&self, examples: &[LabeledExample]) -> Result<f64> {
        if examples.is_empty() {
            return Ok(0.0);
        }
        let mut correct = 0usize;
        for ex in examples {
            if self.predict_class(&ex.features)? == ex.label {
                correct += 1;
            }
        }
        Ok(correct as f64 / examples.len() as f64)
    }

    /// Adds one example's cross-entropy gradient into `grad` and returns its
    /// loss. `mask` holds per-hidden-unit dropout multipliers.
    fn accumulate(&self, x: &[f64], y: f64, mask: Option<&[f64]>, grad: &mut Params) -> f64 {
        let p = &self.params;
        if self.hidden_dim == 0 {
            let z = self.logit_unchecked(x);
            let dz = sigmoid(z) - y;
            for (g, xi) in grad.output_weights.iter_mut().zip(x) {
                *g += dz * xi;
            }
            grad.output_bias += dz;
            return bce_from_logit(z, y);
        }

        let h = self.hidden_activations(x);
        let dropped: Vec<f64> = match mask {
            Some(m) => h.iter().zip(m).map(|(hi, mi)| hi * mi).collect(),
            None => h.clone(),
        };
        let z = p.output_weights.iter().zip(&dropped).map(|(w, d)| w * d).sum::<f64>() + p.output_bias;
        let dz = sigmoid(z) - y;
        for (g, d) in grad.output_weights.iter_mut().zip(&dropped) {
            *g += dz * d;
        }
        grad.output_bias += dz;
        for j in 0..self.hidden_dim {
            let m = mask.map_or(1.0, |m| m[j]);
            let da = dz * p.output_weights[j] * m * (1.0 - h[j] * h[j]);
            if da == 0.0 {
                continue;
            }
            let row = &mut grad.hidden_weights[j * self.input_dim..(j + 1) * self.input_dim];
            for (g, xi) in row.iter_mut().zip(x) {
                *g += da * xi;
            }
            grad.hidden_bias[j] += da;
        }
        bce_from_logit(z, y)
    }

    fn batch_objective(
        &self,
        batch: &[&LabeledExample],
        weight_decay: f64,
        mut dropout: Option<(f64, &mut ChaCha8Rng)>,
    ) -> Result<(f64, Params)> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let mut grad = Params::zeros(self.input_dim, self.hidden_dim);
        let mut loss = 0.0;
        let mut mask = vec![1.0; self.hidden_dim];
        for ex in batch {
            self.check_dim(&ex.features)?;
            let mask_ref = match dropout.as_mut() {
                Some((prob, rng)) if self.hidden_dim > 0 => {
                    let keep = 1.0 - *prob;
                    for m in mask.iter_mut() {
                        *m = if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 };
                    }
                    Some(mask.as_slice())
                }
                _ => None,
            };
            loss += self.accumulate(&ex.features, ex.label.target(), mask_ref, &mut grad);
        }
        let n = batch.len() as f64;
        loss /= n;
        for g in grad
            .hidden_weights
            .iter_mut()
            .chain(grad.hidden_bias.iter_mut())
            .chain(grad.output_weights.iter_mut())
        {
            *g /= n;
        }
        grad.output_bias /= n;

        loss += 0.5 * weight_decay * self.params.weight_norm_sq();
        for (g, w) in grad.hidden_weights.iter_mut().zip(&self.params.hidden_weights) {
            *g += weight_decay * w;
        }
        for (g, w) in grad.output_weights.iter_mut().zip(&self.params.output_weights) {
            *g += weight_decay * w;
        }
        Ok((loss, grad))
    }

    /// Mean binary cross-entropy plus `weight_decay * ||W||^2 / 2` over the
    /// weights (biases are not decayed), and its gradient.
    pub fn loss_and_gradient(&self, batch: &[LabeledExample], weight_decay: f64) -> Result<(f64, Params)> {
        let refs: Vec<&LabeledExample> = batch.iter().collect();
        self.batch_objective(&refs, weight_decay, None)
    }

    fn apply_step(&mut self, data_grad: &Params, lr: f64, weight_decay: f64) {
        let p = &mut self.params;
        for (w, g) in p.hidden_weights.iter_mut().zip(&data_grad.hidden_weights) {
            *w -= lr * g + lr * weight_decay * *w;
        }
        for (b, g) in p.hidden_bias.iter_mut().zip(&data_grad.hidden_bias) {
            *b -= lr * g;
        }
        for (w, g) in p.output_weights.iter_mut().zip(&data_grad.output_weights) {
            *w -= lr * g + lr * weight_decay * *w;
        }
        p.output_bias -= lr * data_grad.output_bias;
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_checkpoint()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_checkpoint(&text)
    }

    pub fn to_checkpoint(&self) -> Result<String> {
        let ckpt = Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            model: self.clone(),
        };
        Ok(serde_json::to_string_pretty(&ckpt)? + "\n")
    }

    pub fn from_checkpoint(text: &str) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_str(text)?;
        if ckpt.format != CHECKPOINT_FORMAT || ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::Config(format!(
                "unsupported checkpoint {} v{}",
                ckpt.format, ckpt.version
            )));
        }
        let m = ckpt.model;
        Self::from_params(m.input_dim, m.hidden_dim, m.params, m.threshold)
    }
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    model: ClassifierModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    /// Epoch index from which the learning rate is divided by `lr_drop_factor`.
    pub lr_drop_epoch: usize,
    pub lr_drop_factor: f64,
    pub batch_size: usize,
    pub weight_decay: f64,
    pub dev_fraction: f64,
    pub seed: u64,
    pub hidden_dim: usize,
    pub dropout_prob: f64,
    pub threshold: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            lr: 0.1,
            lr_drop_epoch: 10,
            lr_drop_factor: 10.0,
            batch_size: 32,
            weight_decay: 0.001,
            dev_fraction: 0.2,
            seed: 0,
            hidden_dim: 0,
            dropout_prob: 0.3,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.epochs == 0 {
            return fail("epochs must be at least 1");
        }
        if self.lr_drop_epoch > self.epochs {
            return fail("lr_drop_epoch must not exceed epochs");
        }
        if !(self.dev_fraction > 0.0 && self.dev_fraction < 1.0) {
            return fail("dev_fraction must lie in (0, 1)");
        }
        if self.lr.is_nan() || self.lr <= 0.0 || self.lr_drop_factor.is_nan() || self.lr_drop_factor <= 0.0 {
            return fail("learning rate and drop factor must be positive");
        }
        if self.batch_size == 0 {
            return fail("batch_size must be positive");
        }
        if self.weight_decay.is_nan() || self.weight_decay < 0.0 {
            return fail("weight_decay must be nonnegative");
        }
        if !(0.0..1.0).contains(&self.dropout_prob) {
            return fail("dropout_prob must lie in [0, 1)");
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return fail("threshold must lie in (0, 1)");
        }
        Ok(())
    }

    pub fn lr_at(&self, epoch: usize) -> f64 {
        if epoch >= self.lr_drop_epoch {
            self.lr / self.lr_drop_factor
        } else {
            self.lr
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub dev_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub model: ClassifierModel,
    pub best_epoch: usize,
    pub best_dev_accuracy: f64,
    pub train_size: usize,
    pub dev_size: usize,
    pub history: Vec<EpochStats>,
}

/// Stratified split: each class with at least two members sends
/// `round(n * dev_fraction)` of them (at least one, never all) to dev.
/// Returns (train, dev) indices.
pub fn stratified_split(labels: &[Label], dev_fraction: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut dev = Vec::new();
    for class in [Label::Mental, Label::Physical] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(rng);
        let n = idx.len();
        let n_dev = if n < 2 {
            0
        } else {
            ((n as f64 * dev_fraction).round() as usize).clamp(1, n - 1)
        };
        dev.extend_from_slice(&idx[..n_dev]);
        train.extend_from_slice(&idx[n_dev..]);
    }
    (train, dev)
}

/// Trains from a fresh initialization.
pub fn train(data: &[LabeledExample], cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_from(None, data, cfg)
}

/// Trains starting from `init` when given (warm start), otherwise from a
/// fresh initialization. Identical inputs give bit-identical outcomes.
pub fn train_from(init: Option<&ClassifierModel>, data: &[LabeledExample], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let has = |l: Label| data.iter().any(|e| e.label == l);
    if !has(Label::Mental) || !has(Label::Physical) {
        return Err(Error::NeedsBothClasses);
    }
    let input_dim = data[0].features.dim();
    if let Some(bad) = data.iter().find(|e| e.features.dim() != input_dim) {
        return Err(Error::DimensionMismatch {
            expected: input_dim,
            actual: bad.features.dim(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let labels: Vec<Label> = data.iter().map(|e| e.label).collect();
    let (mut train_idx, dev_idx) = stratified_split(&labels, cfg.dev_fraction, &mut rng);
    let dev: Vec<LabeledExample> = dev_idx.iter().map(|&i| data[i].clone()).collect();

    let mut model = match init {
        Some(m) if m.input_dim == input_dim && m.hidden_dim == cfg.hidden_dim => m.clone(),
        Some(_) => return Err(Error::Config("warm-start model shape does not match".into())),
        None => ClassifierModel::initialized(input_dim, cfg.hidden_dim, &mut rng),
    };
    model.threshold = cfg.threshold;

    let all_train: Vec<&LabeledExample> = train_idx.iter().map(|&i| &data[i]).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(usize, f64, ClassifierModel)> = None;

    for epoch in 0..cfg.epochs {
        let lr = cfg.lr_at(epoch);
        train_idx.shuffle(&mut rng);
        for chunk in train_idx.chunks(cfg.batch_size) {
            let batch: Vec<&LabeledExample> = chunk.iter().map(|&i| &data[i]).collect();
            let dropout = (cfg.hidden_dim > 0 && cfg.dropout_prob > 0.0).then_some((cfg.dropout_prob, &mut rng));
            let (_, grad) = model.batch_objective(&batch, 0.0, dropout)?;
            model.apply_step(&grad, lr, cfg.weight_decay);
        }
        if !model.params.all_finite() {
            return Err(Error::NonFinite);
        }

        let (train_loss, _) = model.batch_objective(&all_train, cfg.weight_decay, None)?;
        // With no dev examples, fall back to training accuracy for selection.
        let dev_accuracy = if dev.is_empty() {
            let train_set: Vec<LabeledExample> = all_train.iter().map(|e| (*e).clone()).collect();
            model.accuracy(&train_set)?
        } else {
            model.accuracy(&dev)?
        };
        history.push(EpochStats {
            epoch,
            lr,
            train_loss,
            dev_accuracy,
        });
        if best.as_ref().is_none_or(|(_, acc, _)| dev_accuracy > *acc) {
            best = Some((epoch, dev_accuracy, model.clone()));
        }
    }

    let (best_epoch, best_dev_accuracy, model) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        model,
        best_epoch,
        best_dev_accuracy,
        train_size: train_idx.len(),
        dev_size: dev.len(),
        history,
    })
}
