//! Line-delimited corpora and the replicate-and-interleave training mix.
//!
//! Each line of a corpus file is one JSON object:
//!
//! ```text
//! {"id":"sst2-17","tokens":["a","fine","film"],"parse":"(NP (DT a) (JJ fine) (NN film))",
//!  "label":[0.0,1.0],"origin":"original","provenance":null}
//! ```
//!
//! Pair corpora add `tokens2` and `parse2`. `parse` may be `null` only on
//! augmented records whose spans are not constituents (RandMix output).
//! SCAN corpora use the `IN: ... OUT: ...` line format instead.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::{validate_label, AugmentError, AugmentedExample, LabeledExample, LambdaInterval, PairExample, Provenance};
use crate::scan::{read_scan_lines, ScanError, ScanSample};
use crate::tree::{collect_subtrees, parse_ptb, ConstituencyTree};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: schema violation: {reason}")]
    SchemaViolation { line: usize, reason: String },
    #[error("line {line}: parse does not match tokens: {reason}")]
    ParseMismatch { line: usize, reason: String },
    #[error("line {line}: bad label: {reason}")]
    BadLabel { line: usize, reason: String },
    #[error("empty input")]
    EmptyInput,
    #[error("{augmented} augmented records cannot balance {original} originals")]
    TooFewAugmented { original: usize, augmented: usize },
}

impl DatasetError {
    /// I/O failures versus problems with the data itself.
    pub fn is_io(&self) -> bool {
        matches!(self, DatasetError::Io { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schema {
    Single,
    Pair,
    Scan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Original,
    Augmented,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusRecord {
    pub id: String,
    pub tokens: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens2: Option<Vec<String>>,
    pub parse: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parse2: Option<String>,
    pub label: Vec<f64>,
    pub origin: Origin,
    pub provenance: Option<Provenance>,
}

impl CorpusRecord {
    pub fn from_labeled(ex: &LabeledExample) -> Self {
        CorpusRecord {
            id: ex.id.clone(),
            tokens: ex.tokens().to_vec(),
            tokens2: None,
            parse: Some(ex.tree.to_ptb()),
            parse2: None,
            label: ex.label.clone(),
            origin: Origin::Original,
            provenance: None,
        }
    }

    pub fn from_pair(ex: &PairExample) -> Self {
        CorpusRecord {
            id: ex.id.clone(),
            tokens: ex.first.tokens().to_vec(),
            tokens2: Some(ex.second.tokens().to_vec()),
            parse: Some(ex.first.to_ptb()),
            parse2: Some(ex.second.to_ptb()),
            label: ex.label.clone(),
            origin: Origin::Original,
            provenance: None,
        }
    }

    pub fn from_augmented(id: impl Into<String>, ex: &AugmentedExample) -> Self {
        CorpusRecord {
            id: id.into(),
            tokens: ex.tokens.clone(),
            tokens2: ex.tokens2.clone(),
            parse: ex.parse.as_ref().map(ConstituencyTree::to_ptb),
            parse2: ex.parse2.as_ref().map(ConstituencyTree::to_ptb),
            label: ex.label.clone(),
            origin: Origin::Augmented,
            provenance: Some(ex.provenance.clone()),
        }
    }

    /// Command in `tokens`, actions in `tokens2`, a single-entry label.
    pub fn from_scan(id: impl Into<String>, s: &ScanSample) -> Self {
        CorpusRecord {
            id: id.into(),
            tokens: s.command.clone(),
            tokens2: Some(s.actions.iter().map(|a| a.to_string()).collect()),
            parse: Some(s.parse.to_ptb()),
            parse2: None,
            label: vec![1.0],
            origin: Origin::Original,
            provenance: None,
        }
    }

    pub fn is_pair(&self) -> bool {
        self.tokens2.is_some()
    }

    fn tree(&self) -> Result<ConstituencyTree, AugmentError> {
        let text = self.parse.as_deref().ok_or_else(|| AugmentError::EmptySentence(self.id.clone()))?;
        parse_ptb(text).map_err(|_| AugmentError::EmptySentence(self.id.clone()))
    }

    pub fn to_labeled_example(&self) -> Result<LabeledExample, AugmentError> {
        LabeledExample::new(self.id.clone(), self.tree()?, self.label.clone())
    }

    pub fn to_pair_example(&self) -> Result<PairExample, AugmentError> {
        let second = self
            .parse2
            .as_deref()
            .and_then(|p| parse_ptb(p).ok())
            .ok_or_else(|| AugmentError::EmptySentence(self.id.clone()))?;
        PairExample::new(self.id.clone(), self.tree()?, second, self.label.clone())
    }

    /// Validates one record against `schema`; `line` is 1-based.
    pub fn validate(&self, schema: Schema, line: usize) -> Result<(), DatasetError> {
        let schema_err = |reason: &str| DatasetError::SchemaViolation {
            line,
            reason: reason.to_owned(),
        };
        if self.tokens.is_empty() {
            return Err(schema_err("empty token list"));
        }
        match schema {
            Schema::Single => {
                if self.tokens2.is_some() || self.parse2.is_some() {
                    return Err(schema_err("single-sentence record carries tokens2/parse2"));
                }
            }
            Schema::Pair => {
                match &self.tokens2 {
                    Some(t) if !t.is_empty() => {}
                    _ => return Err(schema_err("pair record needs non-empty tokens2")),
                }
                if self.parse.is_some() != self.parse2.is_some() {
                    return Err(schema_err("pair record needs both parse and parse2, or neither"));
                }
            }
            Schema::Scan => {}
        }
        if self.parse.is_none() && self.origin == Origin::Original {
            return Err(schema_err("original record without parse"));
        }
        match (self.origin, &self.provenance) {
            (Origin::Original, Some(_)) => return Err(schema_err("original record with provenance")),
            (Origin::Augmented, None) => return Err(schema_err("augmented record without provenance")),
            _ => {}
        }
        check_parse(self.parse.as_deref(), &self.tokens, line)?;
        if schema == Schema::Pair {
            check_parse(self.parse2.as_deref(), self.tokens2.as_deref().unwrap_or(&[]), line)?;
        }
        validate_label(&self.label).map_err(|e| DatasetError::BadLabel {
            line,
            reason: match e {
                AugmentError::BadLabel(r) => r,
                other => other.to_string(),
            },
        })
    }
}

fn check_parse(parse: Option<&str>, tokens: &[String], line: usize) -> Result<(), DatasetError> {
    let Some(text) = parse else {
        return Ok(());
    };
    let tree = parse_ptb(text).map_err(|e| DatasetError::SchemaViolation {
        line,
        reason: format!("bad parse: {e}"),
    })?;
    if tree.len() != tokens.len() {
        return Err(DatasetError::ParseMismatch {
            line,
            reason: format!("{} leaves for {} tokens", tree.len(), tokens.len()),
        });
    }
    if tree.tokens() != tokens {
        return Err(DatasetError::ParseMismatch {
            line,
            reason: "leaf text differs from tokens".into(),
        });
    }
    Ok(())
}

/// Parses corpus text already in memory.
pub fn parse_corpus(text: &str, schema: Schema) -> Result<Vec<CorpusRecord>, DatasetError> {
    if schema == Schema::Scan {
        let samples = read_scan_lines(text).map_err(|e| match e {
            ScanError::BadLine { line, reason } => DatasetError::SchemaViolation { line, reason },
            other => DatasetError::SchemaViolation {
                line: 0,
                reason: other.to_string(),
            },
        })?;
        return Ok(samples
            .iter()
            .enumerate()
            .map(|(i, s)| CorpusRecord::from_scan(format!("scan-{}", i + 1), s))
            .collect());
    }
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let record: CorpusRecord = serde_json::from_str(raw).map_err(|e| DatasetError::SchemaViolation {
            line,
            reason: e.to_string(),
        })?;
        record.validate(schema, line)?;
        out.push(record);
    }
    Ok(out)
}

pub fn read_corpus(path: impl AsRef<Path>, schema: Schema) -> Result<Vec<CorpusRecord>, DatasetError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_corpus(&text, schema)
}

/// One JSON object per line, newline-terminated; empty input gives empty text.
pub fn corpus_to_string(records: &[CorpusRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn write_corpus(records: &[CorpusRecord], path: impl AsRef<Path>) -> Result<(), DatasetError> {
    let path = path.as_ref();
    let io_err = |source| DatasetError::Io {
        path: path.to_owned(),
        source,
    };
    let file = fs::File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| io_err(e.into()))?;
        w.write_all(b"\n").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Originals replicated to the size of the augmented set and interleaved
/// with it one-for-one.
#[derive(Debug, Clone, PartialEq)]
pub struct MergedTrainingSet {
    pub records: Vec<CorpusRecord>,
    pub gamma: f64,
}

impl MergedTrainingSet {
    /// Training set without augmentation.
    pub fn originals_only(original: &[CorpusRecord], gamma: f64) -> Self {
        let records = original
            .iter()
            .cloned()
            .map(|mut r| {
                r.origin = Origin::Original;
                r
            })
            .collect();
        MergedTrainingSet { records, gamma }
    }

    pub fn originals(&self) -> impl Iterator<Item = &CorpusRecord> {
        self.records.iter().filter(|r| r.origin == Origin::Original)
    }

    pub fn augmented(&self) -> impl Iterator<Item = &CorpusRecord> {
        self.records.iter().filter(|r| r.origin == Origin::Augmented)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Replicates `original` up to `|augmented|` and interleaves the two streams.
///
/// Originals are cycled whole as many times as fit; the remainder is a
/// uniform sample without replacement drawn with `seed`. The result
/// alternates original, augmented, original, ...; origins are set from the
/// argument each record came in through.
pub fn merge_replicated(
    original: &[CorpusRecord],
    augmented: &[CorpusRecord],
    seed: u64,
    gamma: f64,
) -> Result<MergedTrainingSet, DatasetError> {
    let (n_o, n_a) = (original.len(), augmented.len());
    if n_o == 0 {
        return Err(DatasetError::EmptyInput);
    }
    if n_a < n_o {
        return Err(DatasetError::TooFewAugmented {
            original: n_o,
            augmented: n_a,
        });
    }
    let mut replicated: Vec<&CorpusRecord> = Vec::with_capacity(n_a);
    for _ in 0..n_a / n_o {
        replicated.extend(original.iter());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    replicated.extend(sample(&mut rng, n_o, n_a % n_o).into_iter().map(|i| &original[i]));

    let mut records = Vec::with_capacity(2 * n_a);
    for (o, a) in replicated.into_iter().zip(augmented) {
        let mut o = o.clone();
        o.origin = Origin::Original;
        let mut a = a.clone();
        a.origin = Origin::Augmented;
        records.push(o);
        records.push(a);
    }
    Ok(MergedTrainingSet { records, gamma })
}

/// Eligible-subtree counts for one λ interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalStats {
    pub lambda_l: f64,
    pub lambda_u: f64,
    pub eligible_subtrees: usize,
    /// Eligible over all multi-child subtrees.
    pub eligible_ratio: f64,
    /// Sentences with at least one eligible subtree.
    pub sentences_with_candidates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub records: usize,
    pub sentences: usize,
    pub token_count_histogram: BTreeMap<usize, usize>,
    pub subtree_count_histogram: BTreeMap<usize, usize>,
    pub total_subtrees: usize,
    pub intervals: Vec<IntervalStats>,
}

/// Length and subtree statistics over every parsed sentence of a corpus.
pub fn corpus_stats(records: &[CorpusRecord], intervals: &[LambdaInterval]) -> Result<CorpusStats, DatasetError> {
    if records.is_empty() {
        return Err(DatasetError::EmptyInput);
    }
    let mut trees = Vec::new();
    for (i, r) in records.iter().enumerate() {
        for p in [&r.parse, &r.parse2].into_iter().flatten() {
            trees.push(parse_ptb(p).map_err(|e| DatasetError::SchemaViolation {
                line: i + 1,
                reason: e.to_string(),
            })?);
        }
    }
    let mut token_hist = BTreeMap::new();
    let mut subtree_hist = BTreeMap::new();
    let mut all_subtrees = Vec::with_capacity(trees.len());
    for t in &trees {
        *token_hist.entry(t.len()).or_insert(0) += 1;
        let subs = collect_subtrees(t);
        *subtree_hist.entry(subs.len()).or_insert(0) += 1;
        all_subtrees.push((t.len(), subs));
    }
    let total: usize = all_subtrees.iter().map(|(_, s)| s.len()).sum();
    let intervals = intervals
        .iter()
        .map(|lambda| {
            let mut eligible = 0;
            let mut with = 0;
            for (n, subs) in &all_subtrees {
                let k = subs.iter().filter(|s| lambda.admits(s.len(), *n)).count();
                eligible += k;
                with += usize::from(k > 0);
            }
            IntervalStats {
                lambda_l: lambda.lower(),
                lambda_u: lambda.upper(),
                eligible_subtrees: eligible,
                eligible_ratio: if total == 0 { 0.0 } else { eligible as f64 / total as f64 },
                sentences_with_candidates: with,
            }
        })
        .collect();
    Ok(CorpusStats {
        records: records.len(),
        sentences: trees.len(),
        token_count_histogram: token_hist,
        subtree_count_histogram: subtree_hist,
        total_subtrees: total,
        intervals,
    })
}
