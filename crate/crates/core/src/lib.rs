//! Compositional data augmentation by constituency-subtree swapping.
//!
//! * [`tree`]: bracketed constituency trees and swap-eligible subtrees.
//! * [`augment`]: subtree selection, span substitution with soft labels,
//!   the RandMix baseline, and dataset construction.
//! * [`scan`]: the SCAN command language, its splits, and command mixing.
//! * [`dataset`]: line-delimited corpora and the replicated training mix.
//! * [`trainer`]: a hashed n-gram linear classifier trained on soft labels.
//! * [`cli`]: the `treemix` command-line front end.

pub mod augment;
pub mod cli;
pub mod dataset;
pub mod scan;
pub mod synthetic;
pub mod trainer;
pub mod tree;

pub use augment::{
    build_dataset, eligible_subtrees, mix_pair, mix_single, rand_mix, AugmentError, AugmentationConfig,
    AugmentedExample, LabeledExample, LambdaInterval, PairExample,
};
pub use tree::{collect_subtrees, parse_ptb, serialize_ptb, ConstituencyTree, Span, SubtreeRef};
