//! TreeMix augmentation: swap a length-constrained constituent of one
//! sentence for a constituent of another and mix the labels in proportion to
//! how many tokens each donor contributes.
//!
//! For a recipient of length `l_i` losing a subtree of `|t_i|` tokens and
//! receiving `|t_j|` tokens from the donor, the mixed label is
//!
//! ```text
//! y = ((l_i - |t_i|) * y_i + |t_j| * y_j) / (l_i - |t_i| + |t_j|)
//! ```
//!
//! Pair tasks swap one subtree in each of the two sentences and pool the
//! kept/inserted counts of both before normalising.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tree::{collect_subtrees_with, ConstituencyTree, Span, SubtreeRef, SubtreeRule};

/// Labels must sum to one within this tolerance.
pub const LABEL_TOLERANCE: f64 = 1e-9;

/// Upper bound of the span-to-sentence ratio drawn by RandMix.
pub const RANDMIX_MAX_RATIO: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AugmentError {
    #[error("invalid lambda interval [{lower}, {upper}]: need 0 <= lower <= upper <= 1")]
    InvalidLambda { lower: f64, upper: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("label dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("bad label: {0}")]
    BadLabel(String),
    #[error("empty sentence in example `{0}`")]
    EmptySentence(String),
    #[error("could not form a valid pair after {attempts} attempts")]
    InsufficientData { attempts: usize },
}

/// Allowed range of subtree length over sentence length.
///
/// A ratio `r` qualifies when `lower < r <= upper`. With the usual
/// `[0.1, 0.3]` and `[0.3, 0.5]` settings a ratio sitting exactly on a shared
/// boundary therefore belongs to one interval only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaInterval {
    lower: f64,
    upper: f64,
}

impl LambdaInterval {
    pub fn new(lower: f64, upper: f64) -> Result<Self, AugmentError> {
        let ok = lower.is_finite() && upper.is_finite() && 0.0 <= lower && lower <= upper && upper <= 1.0;
        if !ok {
            return Err(AugmentError::InvalidLambda { lower, upper });
        }
        Ok(LambdaInterval { lower, upper })
    }

    /// `[0, 1]`: every subtree qualifies.
    pub fn unconstrained() -> Self {
        LambdaInterval { lower: 0.0, upper: 1.0 }
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn admits(&self, subtree_len: usize, sentence_len: usize) -> bool {
        if sentence_len == 0 {
            return false;
        }
        let ratio = subtree_len as f64 / sentence_len as f64;
        ratio > self.lower && ratio <= self.upper
    }
}

impl Default for LambdaInterval {
    fn default() -> Self {
        LambdaInterval { lower: 0.1, upper: 0.3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairingMode {
    #[default]
    CrossClass,
    SameClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubtreeConstraint {
    #[default]
    None,
    SamePhraseLabel,
    SameLength,
}

impl SubtreeConstraint {
    pub fn compatible(self, removed: &SubtreeRef, inserted: &SubtreeRef) -> bool {
        match self {
            SubtreeConstraint::None => true,
            SubtreeConstraint::SamePhraseLabel => removed.label == inserted.label,
            SubtreeConstraint::SameLength => removed.len() == inserted.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mixer {
    #[default]
    TreeMix,
    RandMix,
}

/// Everything that decides which subtrees may be swapped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubtreeSelector {
    pub lambda: LambdaInterval,
    pub constraint: SubtreeConstraint,
    pub rule: SubtreeRule,
    pub max_retries: usize,
}

impl SubtreeSelector {
    pub fn new(lambda: LambdaInterval) -> Self {
        SubtreeSelector {
            lambda,
            constraint: SubtreeConstraint::None,
            rule: SubtreeRule::MultiChild,
            max_retries: 10,
        }
    }

    pub fn with_constraint(mut self, constraint: SubtreeConstraint) -> Self {
        self.constraint = constraint;
        self
    }

    pub fn with_rule(mut self, rule: SubtreeRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn with_max_retries(mut self, max_retries: usize) -> Self {
        self.max_retries = max_retries;
        self
    }

    pub fn candidates(&self, tree: &ConstituencyTree) -> Vec<SubtreeRef> {
        eligible_subtrees_with(tree, self.lambda, self.rule)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationConfig {
    pub lambda: LambdaInterval,
    pub beta: usize,
    pub pairing: PairingMode,
    pub constraint: SubtreeConstraint,
    pub max_retries: usize,
    pub seed: u64,
    #[serde(default)]
    pub mixer: Mixer,
    #[serde(default)]
    pub subtree_rule: SubtreeRule,
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        AugmentationConfig {
            lambda: LambdaInterval::default(),
            beta: 2,
            pairing: PairingMode::CrossClass,
            constraint: SubtreeConstraint::None,
            max_retries: 10,
            seed: 0,
            mixer: Mixer::TreeMix,
            subtree_rule: SubtreeRule::MultiChild,
        }
    }
}

impl AugmentationConfig {
    pub fn validate(&self) -> Result<(), AugmentError> {
        LambdaInterval::new(self.lambda.lower, self.lambda.upper)?;
        if self.beta < 1 {
            return Err(AugmentError::InvalidConfig("beta must be at least 1".into()));
        }
        if self.max_retries < 1 {
            return Err(AugmentError::InvalidConfig("max_retries must be at least 1".into()));
        }
        Ok(())
    }

    pub fn selector(&self) -> SubtreeSelector {
        SubtreeSelector {
            lambda: self.lambda,
            constraint: self.constraint,
            rule: self.subtree_rule,
            max_retries: self.max_retries,
        }
    }
}

pub fn validate_label(label: &[f64]) -> Result<(), AugmentError> {
    if label.is_empty() {
        return Err(AugmentError::BadLabel("empty label vector".into()));
    }
    if let Some(v) = label.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(AugmentError::BadLabel(format!("entry {v} is not a probability")));
    }
    let sum: f64 = label.iter().sum();
    if (sum - 1.0).abs() > LABEL_TOLERANCE {
        return Err(AugmentError::BadLabel(format!("entries sum to {sum}")));
    }
    Ok(())
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// A parsed sentence with a probability-vector label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub id: String,
    pub tree: ConstituencyTree,
    pub label: Vec<f64>,
}

impl LabeledExample {
    pub fn new(id: impl Into<String>, tree: ConstituencyTree, label: Vec<f64>) -> Result<Self, AugmentError> {
        let id = id.into();
        validate_label(&label)?;
        if tree.is_empty() {
            return Err(AugmentError::EmptySentence(id));
        }
        Ok(LabeledExample { id, tree, label })
    }

    pub fn tokens(&self) -> &[String] {
        self.tree.tokens()
    }
}

/// Two parsed sentences sharing one label.
#[derive(Debug, Clone, PartialEq)]
pub struct PairExample {
    pub id: String,
    pub first: ConstituencyTree,
    pub second: ConstituencyTree,
    pub label: Vec<f64>,
}

impl PairExample {
    pub fn new(
        id: impl Into<String>,
        first: ConstituencyTree,
        second: ConstituencyTree,
        label: Vec<f64>,
    ) -> Result<Self, AugmentError> {
        let id = id.into();
        validate_label(&label)?;
        if first.is_empty() || second.is_empty() {
            return Err(AugmentError::EmptySentence(id));
        }
        Ok(PairExample { id, first, second, label })
    }
}

/// One span replacement: `removed` in the recipient, `inserted` from the donor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splice {
    pub recipient_len: usize,
    pub removed: Span,
    pub inserted: Span,
    /// Child-index paths of the swapped subtrees; absent for RandMix spans.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub removed_path: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inserted_path: Option<Vec<usize>>,
}

impl Splice {
    pub fn kept(&self) -> usize {
        self.recipient_len - self.removed.len()
    }

    pub fn output_len(&self) -> usize {
        self.kept() + self.inserted.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub mixer: Mixer,
    pub donor_i: String,
    pub donor_j: String,
    /// One entry for single-sentence tasks, two for pairs.
    pub splices: Vec<Splice>,
}

impl Provenance {
    /// Token weights `(from x_i, from x_j)` pooled over all splices.
    pub fn weights(&self) -> (usize, usize) {
        self.splices
            .iter()
            .fold((0, 0), |(k, n), s| (k + s.kept(), n + s.inserted.len()))
    }

    /// Re-derives the mixed label from the donors' labels.
    pub fn mixed_label(&self, y_i: &[f64], y_j: &[f64]) -> Vec<f64> {
        let (kept, inserted) = self.weights();
        mix_labels(y_i, kept, y_j, inserted)
    }
}

/// Convex combination weighted by token counts.
pub fn mix_labels(y_i: &[f64], kept: usize, y_j: &[f64], inserted: usize) -> Vec<f64> {
    let total = (kept + inserted) as f64;
    let (a, b) = (kept as f64, inserted as f64);
    y_i.iter().zip(y_j).map(|(p, q)| (a * p + b * q) / total).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedExample {
    pub tokens: Vec<String>,
    /// Mixed tree; `None` for RandMix output, whose spans need not be constituents.
    pub parse: Option<ConstituencyTree>,
    pub tokens2: Option<Vec<String>>,
    pub parse2: Option<ConstituencyTree>,
    pub label: Vec<f64>,
    pub provenance: Provenance,
}

/// Subtrees of `tree` whose length ratio lies in `lambda`, by the multi-child rule.
pub fn eligible_subtrees(tree: &ConstituencyTree, lambda: LambdaInterval) -> Vec<SubtreeRef> {
    eligible_subtrees_with(tree, lambda, SubtreeRule::MultiChild)
}

pub fn eligible_subtrees_with(tree: &ConstituencyTree, lambda: LambdaInterval, rule: SubtreeRule) -> Vec<SubtreeRef> {
    let n = tree.len();
    collect_subtrees_with(tree, rule)
        .into_iter()
        .filter(|s| lambda.admits(s.len(), n))
        .collect()
}

pub fn sample_subtree<'a, R: Rng + ?Sized>(candidates: &'a [SubtreeRef], rng: &mut R) -> Option<&'a SubtreeRef> {
    candidates.choose(rng)
}

fn check_dims(a: &[f64], b: &[f64]) -> Result<(), AugmentError> {
    if a.len() != b.len() {
        return Err(AugmentError::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

fn draw_subtree_pair<'a, R: Rng + ?Sized>(
    removable: &'a [SubtreeRef],
    insertable: &'a [SubtreeRef],
    selector: &SubtreeSelector,
    rng: &mut R,
) -> Option<(&'a SubtreeRef, &'a SubtreeRef)> {
    if removable.is_empty() || insertable.is_empty() {
        return None;
    }
    if selector.constraint == SubtreeConstraint::None {
        let a = sample_subtree(removable, rng)?;
        let b = sample_subtree(insertable, rng)?;
        return Some((a, b));
    }
    for _ in 0..selector.max_retries.max(1) {
        let a = sample_subtree(removable, rng)?;
        let compatible: Vec<&SubtreeRef> = insertable
            .iter()
            .filter(|b| selector.constraint.compatible(a, b))
            .collect();
        if let Some(b) = compatible.choose(rng) {
            return Some((a, b));
        }
    }
    None
}

pub fn splice_tokens(recipient: &[String], removed: Span, donor: &[String], inserted: Span) -> Vec<String> {
    let mut out = Vec::with_capacity(recipient.len() - removed.len() + inserted.len());
    out.extend_from_slice(&recipient[..removed.start]);
    out.extend_from_slice(&donor[inserted.start..=inserted.end]);
    out.extend_from_slice(&recipient[removed.end + 1..]);
    out
}

struct MixedTree {
    tokens: Vec<String>,
    parse: ConstituencyTree,
    splice: Splice,
}

fn splice_trees(recipient: &ConstituencyTree, removed: &SubtreeRef, donor: &ConstituencyTree, inserted: &SubtreeRef) -> MixedTree {
    let donor_node = donor
        .node_at(&inserted.path)
        .expect("subtree reference must point into the donor tree");
    let parse = recipient
        .replace_subtree(&removed.path, donor_node)
        .expect("subtree reference must point into the recipient tree");
    let tokens = parse.tokens().to_vec();
    debug_assert_eq!(tokens, splice_tokens(recipient.tokens(), removed.span, donor.tokens(), inserted.span));
    MixedTree {
        tokens,
        parse,
        splice: Splice {
            recipient_len: recipient.len(),
            removed: removed.span,
            inserted: inserted.span,
            removed_path: Some(removed.path.clone()),
            inserted_path: Some(inserted.path.clone()),
        },
    }
}

/// Replaces the designated subtree of `x_i` with the designated subtree of `x_j`.
pub fn splice_single(
    x_i: &LabeledExample,
    removed: &SubtreeRef,
    x_j: &LabeledExample,
    inserted: &SubtreeRef,
) -> Result<AugmentedExample, AugmentError> {
    check_dims(&x_i.label, &x_j.label)?;
    let mixed = splice_trees(&x_i.tree, removed, &x_j.tree, inserted);
    let provenance = Provenance {
        mixer: Mixer::TreeMix,
        donor_i: x_i.id.clone(),
        donor_j: x_j.id.clone(),
        splices: vec![mixed.splice],
    };
    let label = provenance.mixed_label(&x_i.label, &x_j.label);
    Ok(AugmentedExample {
        tokens: mixed.tokens,
        parse: Some(mixed.parse),
        tokens2: None,
        parse2: None,
        label,
        provenance,
    })
}

/// TreeMix for single sentences. `Ok(None)` when no admissible subtree pair
/// exists within the retry budget.
pub fn mix_single<R: Rng + ?Sized>(
    x_i: &LabeledExample,
    x_j: &LabeledExample,
    selector: &SubtreeSelector,
    rng: &mut R,
) -> Result<Option<AugmentedExample>, AugmentError> {
    check_dims(&x_i.label, &x_j.label)?;
    let removable = selector.candidates(&x_i.tree);
    let insertable = selector.candidates(&x_j.tree);
    match draw_subtree_pair(&removable, &insertable, selector, rng) {
        Some((a, b)) => splice_single(x_i, a, x_j, b).map(Some),
        None => Ok(None),
    }
}

/// Designated-subtree version of [`mix_pair`]: `removed[0]`/`inserted[0]`
/// apply to the first sentences, index 1 to the second.
pub fn splice_pair(
    p_i: &PairExample,
    removed: [&SubtreeRef; 2],
    p_j: &PairExample,
    inserted: [&SubtreeRef; 2],
) -> Result<AugmentedExample, AugmentError> {
    check_dims(&p_i.label, &p_j.label)?;
    let first = splice_trees(&p_i.first, removed[0], &p_j.first, inserted[0]);
    let second = splice_trees(&p_i.second, removed[1], &p_j.second, inserted[1]);
    let provenance = Provenance {
        mixer: Mixer::TreeMix,
        donor_i: p_i.id.clone(),
        donor_j: p_j.id.clone(),
        splices: vec![first.splice, second.splice],
    };
    let label = provenance.mixed_label(&p_i.label, &p_j.label);
    Ok(AugmentedExample {
        tokens: first.tokens,
        parse: Some(first.parse),
        tokens2: Some(second.tokens),
        parse2: Some(second.parse),
        label,
        provenance,
    })
}

/// TreeMix for sentence pairs: both sentences receive a swap.
pub fn mix_pair<R: Rng + ?Sized>(
    p_i: &PairExample,
    p_j: &PairExample,
    selector: &SubtreeSelector,
    rng: &mut R,
) -> Result<Option<AugmentedExample>, AugmentError> {
    check_dims(&p_i.label, &p_j.label)?;
    let (ri, ij) = (selector.candidates(&p_i.first), selector.candidates(&p_j.first));
    let (ri2, ij2) = (selector.candidates(&p_i.second), selector.candidates(&p_j.second));
    let Some((a, b)) = draw_subtree_pair(&ri, &ij, selector, rng) else {
        return Ok(None);
    };
    let Some((a2, b2)) = draw_subtree_pair(&ri2, &ij2, selector, rng) else {
        return Ok(None);
    };
    splice_pair(p_i, [a, a2], p_j, [b, b2]).map(Some)
}

/// Random contiguous span covering `max(1, floor(r * len))` tokens with
/// `r ~ U(0, 0.3]` and a uniform start.
pub fn random_span<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Span {
    assert!(len > 0, "random_span on an empty sentence");
    // gen::<f64>() is in [0, 1), so this is in (0, RANDMIX_MAX_RATIO]
    let ratio = RANDMIX_MAX_RATIO * (1.0 - rng.gen::<f64>());
    let width = ((ratio * len as f64).floor() as usize).clamp(1, len);
    let start = rng.gen_range(0..=len - width);
    Span::new(start, start + width - 1)
}

fn random_splice<R: Rng + ?Sized>(recipient: &[String], donor: &[String], rng: &mut R) -> (Vec<String>, Splice) {
    let removed = random_span(recipient.len(), rng);
    let inserted = random_span(donor.len(), rng);
    let tokens = splice_tokens(recipient, removed, donor, inserted);
    (
        tokens,
        Splice {
            recipient_len: recipient.len(),
            removed,
            inserted,
            removed_path: None,
            inserted_path: None,
        },
    )
}

/// RandMix baseline: random spans instead of constituents, same label rule.
pub fn rand_mix<R: Rng + ?Sized>(
    x_i: &LabeledExample,
    x_j: &LabeledExample,
    rng: &mut R,
) -> Result<AugmentedExample, AugmentError> {
    check_dims(&x_i.label, &x_j.label)?;
    let (tokens, splice) = random_splice(x_i.tokens(), x_j.tokens(), rng);
    let provenance = Provenance {
        mixer: Mixer::RandMix,
        donor_i: x_i.id.clone(),
        donor_j: x_j.id.clone(),
        splices: vec![splice],
    };
    let label = provenance.mixed_label(&x_i.label, &x_j.label);
    Ok(AugmentedExample {
        tokens,
        parse: None,
        tokens2: None,
        parse2: None,
        label,
        provenance,
    })
}

pub fn rand_mix_pair<R: Rng + ?Sized>(
    p_i: &PairExample,
    p_j: &PairExample,
    rng: &mut R,
) -> Result<AugmentedExample, AugmentError> {
    check_dims(&p_i.label, &p_j.label)?;
    let (tokens, s1) = random_splice(p_i.first.tokens(), p_j.first.tokens(), rng);
    let (tokens2, s2) = random_splice(p_i.second.tokens(), p_j.second.tokens(), rng);
    let provenance = Provenance {
        mixer: Mixer::RandMix,
        donor_i: p_i.id.clone(),
        donor_j: p_j.id.clone(),
        splices: vec![s1, s2],
    };
    let label = provenance.mixed_label(&p_i.label, &p_j.label);
    Ok(AugmentedExample {
        tokens,
        parse: None,
        tokens2: Some(tokens2),
        parse2: None,
        label,
        provenance,
    })
}

/// Examples that [`build_dataset`] knows how to mix.
pub trait Mixable: Sync {
    fn label(&self) -> &[f64];

    fn tree_mix(
        &self,
        other: &Self,
        selector: &SubtreeSelector,
        rng: &mut ChaCha8Rng,
    ) -> Result<Option<AugmentedExample>, AugmentError>;

    fn rand_mix(&self, other: &Self, rng: &mut ChaCha8Rng) -> Result<AugmentedExample, AugmentError>;
}

impl Mixable for LabeledExample {
    fn label(&self) -> &[f64] {
        &self.label
    }

    fn tree_mix(
        &self,
        other: &Self,
        selector: &SubtreeSelector,
        rng: &mut ChaCha8Rng,
    ) -> Result<Option<AugmentedExample>, AugmentError> {
        mix_single(self, other, selector, rng)
    }

    fn rand_mix(&self, other: &Self, rng: &mut ChaCha8Rng) -> Result<AugmentedExample, AugmentError> {
        rand_mix(self, other, rng)
    }
}

impl Mixable for PairExample {
    fn label(&self) -> &[f64] {
        &self.label
    }

    fn tree_mix(
        &self,
        other: &Self,
        selector: &SubtreeSelector,
        rng: &mut ChaCha8Rng,
    ) -> Result<Option<AugmentedExample>, AugmentError> {
        mix_pair(self, other, selector, rng)
    }

    fn rand_mix(&self, other: &Self, rng: &mut ChaCha8Rng) -> Result<AugmentedExample, AugmentError> {
        rand_mix_pair(self, other, rng)
    }
}

/// Random stream for output slot `counter`. Every slot has its own ChaCha
/// stream under the run seed, so slots can be generated in any order.
pub fn slot_rng(seed: u64, counter: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(counter);
    rng
}

/// Builds `beta * |data|` augmented examples.
///
/// Each slot draws a pair of distinct examples (the partner from the same
/// argmax class in `SameClass` mode) and mixes them; draws that yield no
/// admissible subtrees are redrawn, up to `|data| * max_retries` times per
/// slot. Output is a pure function of `(data, config)` whatever the size of
/// the rayon pool.
pub fn build_dataset<T: Mixable>(data: &[T], config: &AugmentationConfig) -> Result<Vec<AugmentedExample>, AugmentError> {
    config.validate()?;
    let n = data.len();
    if n < 2 {
        return Err(AugmentError::InsufficientData { attempts: 0 });
    }
    let dim = data[0].label().len();
    for d in data {
        check_dims(data[0].label(), d.label())?;
    }
    debug_assert!(dim > 0);

    let classes: Vec<usize> = data.iter().map(|d| argmax(d.label())).collect();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); dim];
    for (i, &c) in classes.iter().enumerate() {
        members[c].push(i);
    }
    if config.pairing == PairingMode::SameClass && members.iter().all(|m| m.len() < 2) {
        return Err(AugmentError::InsufficientData { attempts: 0 });
    }

    let selector = config.selector();
    let budget = n.saturating_mul(config.max_retries);
    let total = config.beta * n;

    (0..total)
        .into_par_iter()
        .map(|slot| {
            let mut rng = slot_rng(config.seed, slot as u64);
            for _ in 0..budget {
                let i = rng.gen_range(0..n);
                let j = match config.pairing {
                    PairingMode::CrossClass => {
                        let j = rng.gen_range(0..n - 1);
                        if j >= i {
                            j + 1
                        } else {
                            j
                        }
                    }
                    PairingMode::SameClass => {
                        let group = &members[classes[i]];
                        if group.len() < 2 {
                            continue;
                        }
                        let k = rng.gen_range(0..group.len() - 1);
                        let pos = group.binary_search(&i).expect("example is listed in its class");
                        group[if k >= pos { k + 1 } else { k }]
                    }
                };
                let mixed = match config.mixer {
                    Mixer::TreeMix => data[i].tree_mix(&data[j], &selector, &mut rng)?,
                    Mixer::RandMix => Some(data[i].rand_mix(&data[j], &mut rng)?),
                };
                if let Some(m) = mixed {
                    return Ok(m);
                }
            }
            Err(AugmentError::InsufficientData { attempts: budget })
        })
        .collect()
}
