//! Templated sentiment corpus with known structure, for desk-scale training
//! experiments.
//!
//! Sentences follow `the ADJ SUBJ VERB the ADJ OBJ in the PLACE .` with a
//! fixed parse. The label is the majority polarity of the two adjectives and
//! the verb. Subject nouns and places come in two groups that are
//! label-neutral in meaning, but in the training split each group co-occurs
//! with one label; the test split pairs them with the other label, so a
//! classifier has to compose the polarity words rather than lean on context.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::augment::{slot_rng, LabeledExample};
use crate::tree::{ConstituencyTree, TreeNode};

const POS_ADJ: [&str; 8] = ["good", "great", "lovely", "brilliant", "warm", "charming", "superb", "gentle"];
const NEG_ADJ: [&str; 8] = ["bad", "awful", "dull", "clumsy", "cold", "boring", "weak", "bitter"];
const POS_VERB: [&str; 4] = ["praised", "admired", "enjoyed", "loved"];
const NEG_VERB: [&str; 4] = ["mocked", "hated", "ignored", "scorned"];
const SUBJ_A: [&str; 6] = ["critic", "teacher", "pilot", "farmer", "doctor", "singer"];
const SUBJ_B: [&str; 6] = ["student", "lawyer", "sailor", "baker", "nurse", "poet"];
const OBJECTS: [&str; 8] = ["film", "story", "song", "meal", "book", "show", "play", "album"];
const PLACE_A: [&str; 4] = ["city", "garden", "office", "market"];
const PLACE_B: [&str; 4] = ["village", "harbor", "station", "library"];

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub train: Vec<LabeledExample>,
    pub test: Vec<LabeledExample>,
}

fn node(label: &str, children: Vec<TreeNode>) -> TreeNode {
    TreeNode::internal(label, children)
}

fn pre(tag: &str, word: &str) -> TreeNode {
    node(tag, vec![TreeNode::leaf(word)])
}

fn sentence(words: [&str; 6]) -> ConstituencyTree {
    let [adj1, subj, verb, adj2, obj, place] = words;
    let root = node(
        "S",
        vec![
            node("NP", vec![pre("DT", "the"), pre("JJ", adj1), pre("NN", subj)]),
            node(
                "VP",
                vec![
                    pre("VBD", verb),
                    node("NP", vec![pre("DT", "the"), pre("JJ", adj2), pre("NN", obj)]),
                    node("PP", vec![pre("IN", "in"), node("NP", vec![pre("DT", "the"), pre("NN", place)])]),
                ],
            ),
            pre(".", "."),
        ],
    );
    ConstituencyTree::from_root(root).expect("template tree is well formed")
}

fn draw<R: Rng>(rng: &mut R, id: String, context_positive: bool, spurious: f64) -> LabeledExample {
    let polarity: [bool; 3] = [rng.gen(), rng.gen(), rng.gen()];
    let positive = polarity.iter().filter(|p| **p).count() >= 2;
    let pick = |rng: &mut R, pos: &[&'static str], neg: &[&'static str], p: bool| -> &'static str {
        if p {
            pos.choose(rng).copied().unwrap()
        } else {
            neg.choose(rng).copied().unwrap()
        }
    };
    let adj1 = pick(rng, &POS_ADJ, &NEG_ADJ, polarity[0]);
    let verb = pick(rng, &POS_VERB, &NEG_VERB, polarity[1]);
    let adj2 = pick(rng, &POS_ADJ, &NEG_ADJ, polarity[2]);
    // Context group A follows `context_positive` with probability `spurious`.
    let group_a = if rng.gen_bool(spurious) {
        positive == context_positive
    } else {
        rng.gen()
    };
    let subj = pick(rng, &SUBJ_A, &SUBJ_B, group_a);
    let place = pick(rng, &PLACE_A, &PLACE_B, group_a);
    let obj = OBJECTS.choose(rng).copied().unwrap();
    let label = if positive { vec![0.0, 1.0] } else { vec![1.0, 0.0] };
    LabeledExample::new(id, sentence([adj1, subj, verb, adj2, obj, place]), label).expect("template example is valid")
}

/// `n_train` training and `n_test` test sentences. In training, context
/// group A goes with positive labels with probability `spurious` (otherwise
/// the group is a coin flip); in test the association is reversed.
pub fn sentiment_corpus(n_train: usize, n_test: usize, spurious: f64, seed: u64) -> SyntheticCorpus {
    let mut rng = slot_rng(seed, 0);
    let train = (0..n_train).map(|i| draw(&mut rng, format!("train-{i}"), true, spurious)).collect();
    let test = (0..n_test).map(|i| draw(&mut rng, format!("test-{i}"), false, spurious)).collect();
    SyntheticCorpus { train, test }
}

/// Uniform subsample of `fraction` of `data` (at least two examples).
pub fn subsample<T: Clone>(data: &[T], fraction: f64, seed: u64) -> Vec<T> {
    let k = ((data.len() as f64 * fraction).round() as usize).clamp(2.min(data.len()), data.len());
    let mut rng = slot_rng(seed, 7);
    rand::seq::index::sample(&mut rng, data.len(), k)
        .into_iter()
        .map(|i| data[i].clone())
        .collect()
}
