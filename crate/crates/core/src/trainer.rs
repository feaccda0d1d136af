//! Soft-label linear classifier over hashed unigram and bigram counts.
//!
//! This is a small stand-in for a fine-tuned encoder. It exists to exercise
//! the merged objective
//!
//! ```text
//! L = mean_orig[-y . log softmax(Wx + b)] + gamma * mean_aug[-y . log softmax(Wx + b)]
//! ```
//!
//! with soft labels end to end, using plain minibatch SGD.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::{argmax, slot_rng};
use crate::dataset::{CorpusRecord, MergedTrainingSet};

pub const DEFAULT_HASH_DIM: usize = 1 << 18;

// Separates the two sentences of a pair so bigrams never straddle them.
const PAIR_SEPARATOR: &str = "\u{1f}SEP";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("label dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),
}

/// Sparse count vector, sorted by index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureVector {
    pub dim: usize,
    pub entries: Vec<(usize, u32)>,
}

impl FeatureVector {
    pub fn get(&self, index: usize) -> u32 {
        self.entries
            .binary_search_by_key(&index, |e| e.0)
            .map(|i| self.entries[i].1)
            .unwrap_or(0)
    }
}

// 64-bit FNV-1a over a tagged byte sequence, followed by the murmur3
// finalizer so that the low bits used for bucketing are well mixed.
fn feature_hash(tag: u8, parts: &[&str]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    let mut eat = |b: u8| {
        h ^= u64::from(b);
        h = h.wrapping_mul(PRIME);
    };
    eat(tag);
    for (i, p) in parts.iter().enumerate() {
        if i > 0 {
            eat(0x1f);
        }
        p.bytes().for_each(&mut eat);
    }
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
    h ^= h >> 33;
    h = h.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    h ^ (h >> 33)
}

pub fn unigram_index(token: &str, dim: usize) -> usize {
    (feature_hash(b'u', &[token]) % dim as u64) as usize
}

pub fn bigram_index(a: &str, b: &str, dim: usize) -> usize {
    (feature_hash(b'b', &[a, b]) % dim as u64) as usize
}

/// Hashed unigram + bigram counts.
pub fn featurize<S: AsRef<str>>(tokens: &[S], dim: usize) -> FeatureVector {
    assert!(dim > 0, "feature dimension must be positive");
    let mut idx: Vec<usize> = Vec::with_capacity(tokens.len() * 2);
    for t in tokens {
        if t.as_ref() != PAIR_SEPARATOR {
            idx.push(unigram_index(t.as_ref(), dim));
        }
    }
    for w in tokens.windows(2) {
        let (a, b) = (w[0].as_ref(), w[1].as_ref());
        if a != PAIR_SEPARATOR && b != PAIR_SEPARATOR {
            idx.push(bigram_index(a, b, dim));
        }
    }
    idx.sort_unstable();
    let mut entries: Vec<(usize, u32)> = Vec::new();
    for i in idx {
        match entries.last_mut() {
            Some((j, c)) if *j == i => *c += 1,
            _ => entries.push((i, 1)),
        }
    }
    FeatureVector { dim, entries }
}

/// Features plus target distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: FeatureVector,
    pub label: Vec<f64>,
}

impl Sample {
    pub fn from_tokens<S: AsRef<str>>(tokens: &[S], label: Vec<f64>, dim: usize) -> Self {
        Sample {
            features: featurize(tokens, dim),
            label,
        }
    }

    pub fn from_record(record: &CorpusRecord, dim: usize) -> Self {
        let mut tokens: Vec<&str> = record.tokens.iter().map(String::as_str).collect();
        if let Some(t2) = &record.tokens2 {
            tokens.push(PAIR_SEPARATOR);
            tokens.extend(t2.iter().map(String::as_str));
        }
        Sample::from_tokens(&tokens, record.label.clone(), dim)
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
    let s: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / s).collect()
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
    logits.iter().map(|z| z - lse).collect()
}

/// `-sum_c y_c log softmax(logits)_c`
pub fn soft_cross_entropy(logits: &[f64], y: &[f64]) -> f64 {
    log_softmax(logits).iter().zip(y).map(|(l, t)| -t * l).sum()
}

/// Gradient of [`soft_cross_entropy`] with respect to the logits.
pub fn soft_cross_entropy_grad(logits: &[f64], y: &[f64]) -> Vec<f64> {
    let mass: f64 = y.iter().sum();
    softmax(logits).iter().zip(y).map(|(p, t)| p * mass - t).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub classes: usize,
    pub dim: usize,
    /// Row-major `classes x dim`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LinearModel {
    pub fn zeros(classes: usize, dim: usize) -> Self {
        LinearModel {
            classes,
            dim,
            weights: vec![0.0; classes * dim],
            bias: vec![0.0; classes],
        }
    }

    pub fn logits(&self, x: &FeatureVector) -> Vec<f64> {
        (0..self.classes)
            .map(|c| {
                let row = &self.weights[c * self.dim..(c + 1) * self.dim];
                self.bias[c] + x.entries.iter().map(|&(i, n)| row[i] * f64::from(n)).sum::<f64>()
            })
            .collect()
    }

    pub fn predict_proba(&self, x: &FeatureVector) -> Vec<f64> {
        softmax(&self.logits(x))
    }

    /// Argmax class; ties go to the lowest index.
    pub fn predict(&self, x: &FeatureVector) -> usize {
        argmax(&self.logits(x))
    }

    pub fn loss(&self, sample: &Sample) -> f64 {
        soft_cross_entropy(&self.logits(&sample.features), &sample.label)
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|w| w.is_finite())
    }
}

fn mean_loss(model: &LinearModel, batch: &[&Sample]) -> f64 {
    if batch.is_empty() {
        return 0.0;
    }
    batch.iter().map(|s| model.loss(s)).sum::<f64>() / batch.len() as f64
}

/// Mean original loss plus `gamma` times mean augmented loss. An empty
/// augmented batch, or `gamma == 0`, contributes nothing.
pub fn merged_loss(orig: &[&Sample], aug: &[&Sample], model: &LinearModel, gamma: f64) -> f64 {
    let base = mean_loss(model, orig);
    if aug.is_empty() || gamma == 0.0 {
        return base;
    }
    base + gamma * mean_loss(model, aug)
}

/// Per-sample scaled logit gradients `(sample, dL/dlogits)` of [`merged_loss`].
fn logit_grads<'a>(orig: &[&'a Sample], aug: &[&'a Sample], model: &LinearModel, gamma: f64) -> Vec<(&'a Sample, Vec<f64>)> {
    let mut out = Vec::with_capacity(orig.len() + aug.len());
    let mut push = |batch: &[&'a Sample], scale: f64| {
        for s in batch {
            let g = soft_cross_entropy_grad(&model.logits(&s.features), &s.label);
            out.push((*s, g.into_iter().map(|v| v * scale).collect()));
        }
    };
    if !orig.is_empty() {
        push(orig, 1.0 / orig.len() as f64);
    }
    if !aug.is_empty() && gamma != 0.0 {
        push(aug, gamma / aug.len() as f64);
    }
    out
}

/// Dense gradient of [`merged_loss`]: `(weights, bias)`.
pub fn merged_gradient(orig: &[&Sample], aug: &[&Sample], model: &LinearModel, gamma: f64) -> (Vec<f64>, Vec<f64>) {
    let mut gw = vec![0.0; model.weights.len()];
    let mut gb = vec![0.0; model.classes];
    for (s, g) in logit_grads(orig, aug, model, gamma) {
        for c in 0..model.classes {
            gb[c] += g[c];
            for &(i, n) in &s.features.entries {
                gw[c * model.dim + i] += g[c] * f64::from(n);
            }
        }
    }
    (gw, gb)
}

/// One SGD step on the merged objective. Returns the squared gradient norm
/// of the step.
pub fn sgd_step(model: &mut LinearModel, orig: &[&Sample], aug: &[&Sample], gamma: f64, lr: f64) -> f64 {
    let grads = logit_grads(orig, aug, model, gamma);
    // Accumulate before touching the weights: every sample sees the same model.
    let mut touched: Vec<(usize, f64)> = Vec::new();
    let mut gb = vec![0.0; model.classes];
    for (s, g) in &grads {
        for c in 0..model.classes {
            gb[c] += g[c];
            for &(i, n) in &s.features.entries {
                touched.push((c * model.dim + i, g[c] * f64::from(n)));
            }
        }
    }
    touched.sort_by_key(|t| t.0);
    let mut norm2 = 0.0;
    let mut k = 0;
    while k < touched.len() {
        let idx = touched[k].0;
        let mut sum = 0.0;
        while k < touched.len() && touched[k].0 == idx {
            sum += touched[k].1;
            k += 1;
        }
        norm2 += sum * sum;
        model.weights[idx] -= lr * sum;
    }
    for (b, g) in model.bias.iter_mut().zip(&gb) {
        norm2 += g * g;
        *b -= lr * g;
    }
    norm2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub gamma: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub hash_dim: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            gamma: 0.5,
            epochs: 5,
            learning_rate: 0.5,
            batch_size: 32,
            seed: 0,
            hash_dim: DEFAULT_HASH_DIM,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.epochs < 1 {
            return Err(TrainError::InvalidConfig("epochs must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(TrainError::InvalidConfig("learning rate must be positive".into()));
        }
        if self.batch_size < 1 {
            return Err(TrainError::InvalidConfig("batch size must be at least 1".into()));
        }
        if self.hash_dim < 1 {
            return Err(TrainError::InvalidConfig("hash dimension must be positive".into()));
        }
        if !self.gamma.is_finite() {
            return Err(TrainError::InvalidConfig("gamma must be finite".into()));
        }
        Ok(())
    }
}

/// Per-dataset settings: epochs, batch size, augmented batch size, gamma.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub epochs: usize,
    pub batch_size: usize,
    pub aug_batch_size: usize,
    pub gamma: f64,
}

pub const PRESETS: &[Preset] = &[
    Preset { name: "sst2", epochs: 5, batch_size: 96, aug_batch_size: 96, gamma: 0.5 },
    Preset { name: "trec-fine", epochs: 20, batch_size: 96, aug_batch_size: 96, gamma: 0.5 },
    Preset { name: "trec-coarse", epochs: 20, batch_size: 96, aug_batch_size: 96, gamma: 0.5 },
    Preset { name: "imdb", epochs: 5, batch_size: 8, aug_batch_size: 8, gamma: 0.5 },
    Preset { name: "agnews", epochs: 5, batch_size: 96, aug_batch_size: 96, gamma: 0.5 },
    Preset { name: "mrpc", epochs: 10, batch_size: 32, aug_batch_size: 32, gamma: 0.2 },
    Preset { name: "rte", epochs: 5, batch_size: 32, aug_batch_size: 32, gamma: -0.2 },
    Preset { name: "qnli", epochs: 5, batch_size: 96, aug_batch_size: 96, gamma: 0.2 },
    Preset { name: "qqp", epochs: 5, batch_size: 96, aug_batch_size: 96, gamma: 0.2 },
    Preset { name: "mnli", epochs: 5, batch_size: 96, aug_batch_size: 96, gamma: 0.2 },
];

pub fn preset(name: &str) -> Option<&'static Preset> {
    let key = name.to_ascii_lowercase().replace('_', "-");
    PRESETS.iter().find(|p| p.name == key)
}

/// Default gamma: 0.5 for single sentences, 0.2 for pairs.
pub fn default_gamma(pair: bool) -> f64 {
    if pair {
        0.2
    } else {
        0.5
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean merged loss over the epoch's batches, measured before each step.
    pub loss: f64,
    pub train_accuracy: f64,
    pub test_accuracy: Option<f64>,
    pub max_grad_norm: f64,
}

impl EpochLog {
    pub fn to_line(&self) -> String {
        let mut s = format!(
            "epoch={} loss={:.6} train_acc={:.4}",
            self.epoch, self.loss, self.train_accuracy
        );
        if let Some(t) = self.test_accuracy {
            s.push_str(&format!(" test_acc={t:.4}"));
        }
        s
    }
}

/// Encoded original and augmented streams of a merged set.
pub struct EncodedSet {
    pub originals: Vec<Sample>,
    pub augmented: Vec<Sample>,
}

impl EncodedSet {
    pub fn new(merged: &MergedTrainingSet, dim: usize) -> Self {
        EncodedSet {
            originals: merged.originals().map(|r| Sample::from_record(r, dim)).collect(),
            augmented: merged.augmented().map(|r| Sample::from_record(r, dim)).collect(),
        }
    }
}

pub fn train(merged: &MergedTrainingSet, config: &TrainConfig) -> Result<LinearModel, TrainError> {
    let set = EncodedSet::new(merged, config.hash_dim);
    train_encoded(&set, config, None).map(|(m, _)| m)
}

/// Minibatch SGD over the original stream; batch `k` of an epoch pairs the
/// `k`-th slice of shuffled originals with the `k`-th slice of shuffled
/// augmented samples. The two streams are shuffled from separate seeded
/// generators, so the original batches do not depend on the augmented set.
pub fn train_encoded(
    set: &EncodedSet,
    config: &TrainConfig,
    test: Option<&[Sample]>,
) -> Result<(LinearModel, Vec<EpochLog>), TrainError> {
    config.validate()?;
    let first = set.originals.first().ok_or(TrainError::EmptyTrainingSet)?;
    let classes = first.label.len();
    for s in set.originals.iter().chain(&set.augmented) {
        if s.label.len() != classes {
            return Err(TrainError::DimensionMismatch(classes, s.label.len()));
        }
        if s.features.dim != config.hash_dim {
            return Err(TrainError::InvalidConfig("feature dimension differs from hash_dim".into()));
        }
    }
    let mut model = LinearModel::zeros(classes, config.hash_dim);
    let mut orig_rng: ChaCha8Rng = slot_rng(config.seed, 0);
    let mut aug_rng: ChaCha8Rng = slot_rng(config.seed, 1);
    let mut orig_order: Vec<usize> = (0..set.originals.len()).collect();
    let mut aug_order: Vec<usize> = (0..set.augmented.len()).collect();
    let bs = config.batch_size;
    let mut logs = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        orig_order.shuffle(&mut orig_rng);
        aug_order.shuffle(&mut aug_rng);
        let mut total = 0.0;
        let mut batches = 0usize;
        let mut max_norm: f64 = 0.0;
        for (k, chunk) in orig_order.chunks(bs).enumerate() {
            let orig: Vec<&Sample> = chunk.iter().map(|&i| &set.originals[i]).collect();
            let lo = (k * bs).min(aug_order.len());
            let hi = ((k + 1) * bs).min(aug_order.len());
            let aug: Vec<&Sample> = aug_order[lo..hi].iter().map(|&i| &set.augmented[i]).collect();
            total += merged_loss(&orig, &aug, &model, config.gamma);
            batches += 1;
            let n2 = sgd_step(&mut model, &orig, &aug, config.gamma, config.learning_rate);
            max_norm = max_norm.max(n2.sqrt());
        }
        logs.push(EpochLog {
            epoch,
            loss: total / batches as f64,
            train_accuracy: evaluate(&model, &set.originals),
            test_accuracy: test.map(|t| evaluate(&model, t)),
            max_grad_norm: max_norm,
        });
    }
    Ok((model, logs))
}

/// Fraction of samples whose predicted class equals the argmax of the label.
/// Returns 0 on an empty slice.
pub fn evaluate(model: &LinearModel, test: &[Sample]) -> f64 {
    if test.is_empty() {
        return 0.0;
    }
    let hits = test
        .iter()
        .filter(|s| model.predict(&s.features) == argmax(&s.label))
        .count();
    hits as f64 / test.len() as f64
}

/// On-disk model: JSON with sparse non-zero weights as `[class, index, value]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub dim: usize,
    pub classes: usize,
    pub weights: Vec<(usize, usize, f64)>,
    pub bias: Vec<f64>,
    pub config: TrainConfig,
}

pub const CHECKPOINT_FORMAT: &str = "treemix-linear";
pub const CHECKPOINT_VERSION: u32 = 1;

impl Checkpoint {
    pub fn from_model(model: &LinearModel, config: &TrainConfig) -> Self {
        let weights = model
            .weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w != 0.0)
            .map(|(k, w)| (k / model.dim, k % model.dim, *w))
            .collect();
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            dim: model.dim,
            classes: model.classes,
            weights,
            bias: model.bias.clone(),
            config: config.clone(),
        }
    }

    pub fn to_model(&self) -> Result<LinearModel, TrainError> {
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(TrainError::BadCheckpoint(format!("{} v{}", self.format, self.version)));
        }
        if self.bias.len() != self.classes {
            return Err(TrainError::BadCheckpoint("bias length differs from class count".into()));
        }
        let mut model = LinearModel::zeros(self.classes, self.dim);
        model.bias.clone_from(&self.bias);
        for &(c, i, w) in &self.weights {
            if c >= self.classes || i >= self.dim {
                return Err(TrainError::BadCheckpoint(format!("weight ({c}, {i}) out of range")));
            }
            model.weights[c * self.dim + i] = w;
        }
        Ok(model)
    }
}
