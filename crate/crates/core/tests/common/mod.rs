#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use treemix::tree::{ConstituencyTree, TreeNode};
use treemix::{LabeledExample, PairExample};

/// Flat CoreNLP-style parse of the running example sentence.
pub const RUNNING_EXAMPLE: &str = "(ROOT (S (NP (PRP They)) (VP (MD will) (VP (VB find) (NP (NP (JJ little) (NN interest)) (PP (IN in) (NP (DT this) (JJ poor) (NN film)))))) (. .)))";

/// The same sentence with an N-bar level inside the object NP.
pub const RUNNING_NBAR: &str = "(ROOT (S (NP (PRP They)) (VP (MD will) (VP (VB find) (NP (NP (JJ little) (NN interest)) (PP (IN in) (NP (DT this) (NX (JJ poor) (NN film))))))) (. .)))";

pub const DONOR_NBAR: &str = "(ROOT (S (NP (PRP It)) (VP (VBZ comes) (PP (IN as) (NP (DT a) (NX (JJ touching) (NN love) (NN story))))) (. .)))";

const LABELS: [&str; 9] = ["S", "NP", "VP", "PP", "SBAR", "ADJP", "NP-SBJ", "WHNP", "ADVP"];
const TAGS: [&str; 10] = ["DT", "NN", "NNS", "VB", "VBD", "JJ", "IN", ",", ".", "PRP$"];
const WORDS: [&str; 20] = [
    "the", "film", "a", "story", "is", "n't", "'s", "-LRB-", "-RRB-", ",", ".", "U.S.", "$", "100", "café", "love",
    "good", "bad", "of", "in",
];

fn random_node<R: Rng>(rng: &mut R, depth: usize) -> TreeNode {
    if depth == 0 || rng.gen_bool(0.3) {
        let word = *WORDS.choose(rng).unwrap();
        return TreeNode::internal(*TAGS.choose(rng).unwrap(), vec![TreeNode::leaf(word)]);
    }
    let n = rng.gen_range(1..=3);
    let children = (0..n)
        .map(|_| {
            if rng.gen_bool(0.05) {
                TreeNode::leaf(*WORDS.choose(rng).unwrap())
            } else {
                random_node(rng, depth - 1)
            }
        })
        .collect();
    TreeNode::internal(*LABELS.choose(rng).unwrap(), children)
}

/// Random well-formed tree of depth at most 5.
pub fn random_tree<R: Rng>(rng: &mut R) -> ConstituencyTree {
    let n = rng.gen_range(1..=4);
    let children = (0..n).map(|_| random_node(rng, 4)).collect();
    ConstituencyTree::from_root(TreeNode::internal("ROOT", children)).unwrap()
}

/// Random probability vector; one-hot half of the time.
pub fn random_label<R: Rng>(rng: &mut R, classes: usize) -> Vec<f64> {
    if rng.gen_bool(0.5) {
        let mut y = vec![0.0; classes];
        y[rng.gen_range(0..classes)] = 1.0;
        return y;
    }
    let raw: Vec<f64> = (0..classes).map(|_| rng.gen_range(0.01..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / sum).collect()
}

pub fn random_labeled<R: Rng>(rng: &mut R, n: usize, classes: usize) -> Vec<LabeledExample> {
    (0..n)
        .map(|i| LabeledExample::new(format!("x{i}"), random_tree(rng), random_label(rng, classes)).unwrap())
        .collect()
}

pub fn random_pairs<R: Rng>(rng: &mut R, n: usize, classes: usize) -> Vec<PairExample> {
    (0..n)
        .map(|i| {
            PairExample::new(format!("p{i}"), random_tree(rng), random_tree(rng), random_label(rng, classes)).unwrap()
        })
        .collect()
}

pub fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_owned).collect()
}

// ---- SCAN reference implementations, written against the grammar only ----

fn turn(dir: &str) -> &'static str {
    match dir {
        "left" => "I_TURN_LEFT",
        "right" => "I_TURN_RIGHT",
        _ => panic!("not a direction: {dir}"),
    }
}

fn act(verb: &str) -> Option<&'static str> {
    match verb {
        "walk" => Some("I_WALK"),
        "look" => Some("I_LOOK"),
        "run" => Some("I_RUN"),
        "jump" => Some("I_JUMP"),
        "turn" => None,
        _ => panic!("not a verb: {verb}"),
    }
}

/// Meaning of a command by direct rewriting of token slices.
pub fn scan_oracle(cmd: &[&str]) -> Vec<&'static str> {
    if let Some(k) = cmd.iter().position(|w| *w == "and") {
        let mut out = scan_oracle(&cmd[..k]);
        out.extend(scan_oracle(&cmd[k + 1..]));
        return out;
    }
    if let Some(k) = cmd.iter().position(|w| *w == "after") {
        let mut out = scan_oracle(&cmd[k + 1..]);
        out.extend(scan_oracle(&cmd[..k]));
        return out;
    }
    match cmd {
        [rest @ .., "twice"] => scan_oracle(rest).repeat(2),
        [rest @ .., "thrice"] => scan_oracle(rest).repeat(3),
        [v] => act(v).into_iter().collect(),
        [v, "opposite", d] => {
            let mut out = vec![turn(d), turn(d)];
            out.extend(act(v));
            out
        }
        [v, "around", d] => {
            let mut one = vec![turn(d)];
            one.extend(act(v));
            one.repeat(4)
        }
        [v, d] => {
            let mut out = vec![turn(d)];
            out.extend(act(v));
            out
        }
        _ => panic!("not a command: {cmd:?}"),
    }
}

/// Every command of the language, built with plain nested loops.
pub fn enumerate_commands_nested() -> BTreeSet<String> {
    let mut phrases = Vec::new();
    for v in ["walk", "look", "run", "jump"] {
        phrases.push(v.to_string());
        for d in ["left", "right"] {
            phrases.push(format!("{v} {d}"));
            phrases.push(format!("{v} opposite {d}"));
            phrases.push(format!("{v} around {d}"));
        }
    }
    for d in ["left", "right"] {
        phrases.push(format!("turn {d}"));
        phrases.push(format!("turn opposite {d}"));
        phrases.push(format!("turn around {d}"));
    }
    let mut simple = Vec::new();
    for p in &phrases {
        simple.push(p.clone());
        simple.push(format!("{p} twice"));
        simple.push(format!("{p} thrice"));
    }
    let mut all = BTreeSet::new();
    for a in &simple {
        all.insert(a.clone());
        for b in &simple {
            all.insert(format!("{a} and {b}"));
            all.insert(format!("{a} after {b}"));
        }
    }
    all
}
