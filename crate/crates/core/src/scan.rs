//! SCAN commands: grammar, interpreter, splits, and TreeMix over commands.
//!
//! Grammar (13-word vocabulary):
//!
//! ```text
//! C -> S and S | S after S | S
//! S -> V twice | V thrice | V
//! V -> D[1] opposite D[2] | D[1] around D[2] | D | U
//! D -> U left | U right | turn left | turn right
//! U -> walk | look | run | jump
//! ```
//!
//! `D[1]` is the primitive (or `turn`) of a direction phrase and `D[2]` its
//! direction. Trees use the nonterminals as labels; words that are not a
//! primitive are bare leaves, so `jump around left` is
//! `(C (S (V (U jump) around left)))`.
//!
//! Semantics: `u dir` turns then acts, `opposite` turns twice then acts,
//! `around` repeats (turn, act) four times, `twice`/`thrice` repeat the
//! phrase, `a and b` runs `a` then `b`, `a after b` runs `b` then `a`.
//! `turn` contributes no action of its own.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::{build_dataset, AugmentError, AugmentationConfig, LabeledExample, LambdaInterval};
use crate::tree::{ConstituencyTree, SubtreeRule, TreeNode};

pub const PRIMITIVES: [&str; 4] = ["walk", "look", "run", "jump"];
pub const DIRECTIONS: [&str; 2] = ["left", "right"];
pub const VOCABULARY: [&str; 13] = [
    "jump", "walk", "run", "look", "turn", "left", "right", "around", "opposite", "twice", "thrice", "and", "after",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScanError {
    #[error("ungrammatical command `{0}`")]
    Ungrammatical(String),
    #[error("tree is not a SCAN derivation: {0}")]
    MalformedTree(String),
    #[error("unknown split `{0}` (expected addprim_jump, addprim_turn_left or around_right)")]
    UnknownSplit(String),
    #[error("line {line}: {reason}")]
    BadLine { line: usize, reason: String },
    #[error("external sample `{command}` does not match its own interpretation")]
    InconsistentSample { command: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Jump,
    Walk,
    Run,
    Look,
    TurnLeft,
    TurnRight,
}

impl Action {
    /// Token as written in the public SCAN files.
    pub fn as_str(self) -> &'static str {
        match self {
            Action::Jump => "I_JUMP",
            Action::Walk => "I_WALK",
            Action::Run => "I_RUN",
            Action::Look => "I_LOOK",
            Action::TurnLeft => "I_TURN_LEFT",
            Action::TurnRight => "I_TURN_RIGHT",
        }
    }

    fn primitive(word: &str) -> Option<Action> {
        Some(match word {
            "jump" => Action::Jump,
            "walk" => Action::Walk,
            "run" => Action::Run,
            "look" => Action::Look,
            _ => return None,
        })
    }

    fn turn(direction: &str) -> Option<Action> {
        match direction {
            "left" => Some(Action::TurnLeft),
            "right" => Some(Action::TurnRight),
            _ => None,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Action {
    type Err = String;

    /// Accepts the public spelling (`I_TURN_LEFT`) and the short one (`LTURN`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "I_JUMP" | "JUMP" => Action::Jump,
            "I_WALK" | "WALK" => Action::Walk,
            "I_RUN" | "RUN" => Action::Run,
            "I_LOOK" | "LOOK" => Action::Look,
            "I_TURN_LEFT" | "LTURN" => Action::TurnLeft,
            "I_TURN_RIGHT" | "RTURN" => Action::TurnRight,
            other => return Err(format!("unknown action `{other}`")),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanSample {
    pub command: Vec<String>,
    pub actions: Vec<Action>,
    pub parse: ConstituencyTree,
}

impl ScanSample {
    /// Parses and interprets `command`.
    pub fn from_command<S: AsRef<str>>(command: &[S]) -> Result<Self, ScanError> {
        let parse = parse_scan(command)?;
        let actions = interpret_scan(&parse)?;
        Ok(ScanSample {
            command: parse.tokens().to_vec(),
            actions,
            parse,
        })
    }

    pub fn command_text(&self) -> String {
        self.command.join(" ")
    }

    pub fn contains_phrase(&self, phrase: &[&str]) -> bool {
        contains_phrase(&self.command, phrase)
    }

    /// `IN: <command> OUT: <actions>`
    pub fn to_line(&self) -> String {
        let actions: Vec<&str> = self.actions.iter().map(|a| a.as_str()).collect();
        format!("IN: {} OUT: {}", self.command.join(" "), actions.join(" "))
    }
}

pub fn contains_phrase<S: AsRef<str>>(command: &[S], phrase: &[&str]) -> bool {
    command
        .windows(phrase.len())
        .any(|w| w.iter().zip(phrase).all(|(a, b)| a.as_ref() == *b))
}

fn ungrammatical<S: AsRef<str>>(tokens: &[S]) -> ScanError {
    ScanError::Ungrammatical(tokens.iter().map(|t| t.as_ref()).collect::<Vec<_>>().join(" "))
}

/// Parses a command under the SCAN grammar.
pub fn parse_scan<S: AsRef<str>>(command: &[S]) -> Result<ConstituencyTree, ScanError> {
    let words: Vec<&str> = command.iter().map(|t| t.as_ref()).collect();
    let root = parse_c(&words).ok_or_else(|| ungrammatical(command))?;
    ConstituencyTree::from_root(root).map_err(|_| ungrammatical(command))
}

fn parse_c(words: &[&str]) -> Option<TreeNode> {
    let joints: Vec<usize> = words
        .iter()
        .enumerate()
        .filter(|(_, w)| **w == "and" || **w == "after")
        .map(|(i, _)| i)
        .collect();
    match joints.as_slice() {
        [] => Some(TreeNode::internal("C", vec![parse_s(words)?])),
        [k] => {
            let left = parse_s(&words[..*k])?;
            let right = parse_s(&words[k + 1..])?;
            Some(TreeNode::internal("C", vec![left, TreeNode::leaf(words[*k]), right]))
        }
        _ => None,
    }
}

fn parse_s(words: &[&str]) -> Option<TreeNode> {
    match words {
        [head @ .., last @ ("twice" | "thrice")] => {
            Some(TreeNode::internal("S", vec![parse_v(head)?, TreeNode::leaf(*last)]))
        }
        _ => Some(TreeNode::internal("S", vec![parse_v(words)?])),
    }
}

fn parse_u(word: &str) -> Option<TreeNode> {
    Action::primitive(word)?;
    Some(TreeNode::internal("U", vec![TreeNode::leaf(word)]))
}

// D[1]: a primitive wrapped in U, or the bare word `turn`.
fn parse_head(word: &str) -> Option<TreeNode> {
    if word == "turn" {
        Some(TreeNode::leaf("turn"))
    } else {
        parse_u(word)
    }
}

fn parse_v(words: &[&str]) -> Option<TreeNode> {
    match words {
        [u] => Some(TreeNode::internal("V", vec![parse_u(u)?])),
        [_, _] => Some(TreeNode::internal("V", vec![parse_d(words)?])),
        [head, op @ ("opposite" | "around"), dir @ ("left" | "right")] => Some(TreeNode::internal(
            "V",
            vec![parse_head(head)?, TreeNode::leaf(*op), TreeNode::leaf(*dir)],
        )),
        _ => None,
    }
}

fn parse_d(words: &[&str]) -> Option<TreeNode> {
    match words {
        [head, dir @ ("left" | "right")] => Some(TreeNode::internal("D", vec![parse_head(head)?, TreeNode::leaf(*dir)])),
        _ => None,
    }
}

fn malformed(node: &TreeNode) -> ScanError {
    let mut s = String::new();
    s.push_str(&node.label);
    s.push('/');
    s.push_str(&node.children.len().to_string());
    ScanError::MalformedTree(s)
}

/// Executes a SCAN derivation tree.
pub fn interpret_scan(tree: &ConstituencyTree) -> Result<Vec<Action>, ScanError> {
    let mut out = Vec::new();
    exec(tree.root(), &mut out)?;
    Ok(out)
}

fn exec(node: &TreeNode, out: &mut Vec<Action>) -> Result<(), ScanError> {
    let kids = &node.children;
    match (node.label.as_str(), kids.len()) {
        ("C", 1) | ("S", 1) | ("V", 1) => exec(&kids[0], out),
        ("C", 3) => {
            let mut first = Vec::new();
            let mut second = Vec::new();
            exec(&kids[0], &mut first)?;
            exec(&kids[2], &mut second)?;
            match kids[1].label.as_str() {
                "and" => {
                    out.extend(first);
                    out.extend(second);
                }
                "after" => {
                    out.extend(second);
                    out.extend(first);
                }
                _ => return Err(malformed(node)),
            }
            Ok(())
        }
        ("S", 2) => {
            let times = match kids[1].label.as_str() {
                "twice" => 2,
                "thrice" => 3,
                _ => return Err(malformed(node)),
            };
            let mut once = Vec::new();
            exec(&kids[0], &mut once)?;
            for _ in 0..times {
                out.extend_from_slice(&once);
            }
            Ok(())
        }
        ("V", 3) => {
            let act = head_action(&kids[0])?;
            let turn = Action::turn(&kids[2].label).ok_or_else(|| malformed(node))?;
            let reps = match kids[1].label.as_str() {
                "opposite" => {
                    out.push(turn);
                    1
                }
                "around" => 4,
                _ => return Err(malformed(node)),
            };
            for _ in 0..reps {
                out.push(turn);
                out.extend(act);
            }
            Ok(())
        }
        ("D", 2) => {
            let act = head_action(&kids[0])?;
            out.push(Action::turn(&kids[1].label).ok_or_else(|| malformed(node))?);
            out.extend(act);
            Ok(())
        }
        ("U", 1) => {
            out.push(primitive_leaf(&kids[0]).ok_or_else(|| malformed(node))?);
            Ok(())
        }
        _ => Err(malformed(node)),
    }
}

fn primitive_leaf(node: &TreeNode) -> Option<Action> {
    if node.is_leaf() {
        Action::primitive(&node.label)
    } else {
        None
    }
}

// `turn` -> no action; `(U x)` -> x
fn head_action(node: &TreeNode) -> Result<Option<Action>, ScanError> {
    if node.is_leaf() && node.label == "turn" {
        return Ok(None);
    }
    if node.label == "U" && node.children.len() == 1 {
        if let Some(a) = primitive_leaf(&node.children[0]) {
            return Ok(Some(a));
        }
    }
    Err(malformed(node))
}

fn expand_v() -> Vec<Vec<&'static str>> {
    let heads: Vec<&str> = PRIMITIVES.iter().copied().chain(["turn"]).collect();
    let mut out: Vec<Vec<&str>> = Vec::new();
    for op in ["opposite", "around"] {
        for h in &heads {
            for d in DIRECTIONS {
                out.push(vec![h, op, d]);
            }
        }
    }
    for h in &heads {
        for d in DIRECTIONS {
            out.push(vec![h, d]);
        }
    }
    for u in PRIMITIVES {
        out.push(vec![u]);
    }
    out
}

fn expand_s() -> Vec<Vec<&'static str>> {
    let vs = expand_v();
    let mut out = Vec::new();
    for v in &vs {
        out.push(v.clone());
        for m in ["twice", "thrice"] {
            let mut s = v.clone();
            s.push(m);
            out.push(s);
        }
    }
    out
}

/// Every command of the language with its actions, in grammar order.
pub fn enumerate_scan() -> Vec<ScanSample> {
    let ss = expand_s();
    let mut commands: Vec<Vec<&str>> = ss.clone();
    for joint in ["and", "after"] {
        for a in &ss {
            for b in &ss {
                let mut c = a.clone();
                c.push(joint);
                c.extend_from_slice(b);
                commands.push(c);
            }
        }
    }
    commands
        .iter()
        .map(|c| ScanSample::from_command(c).expect("grammar expansion yields grammatical commands"))
        .collect()
}

/// Memoized [`enumerate_scan`].
pub fn scan_universe() -> &'static [ScanSample] {
    static UNIVERSE: OnceLock<Vec<ScanSample>> = OnceLock::new();
    UNIVERSE.get_or_init(enumerate_scan)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitName {
    AddprimJump,
    AddprimTurnLeft,
    AroundRight,
}

impl SplitName {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::AddprimJump => "addprim_jump",
            SplitName::AddprimTurnLeft => "addprim_turn_left",
            SplitName::AroundRight => "around_right",
        }
    }

    /// Phrase whose presence sends a command to the test side.
    pub fn held_out_phrase(self) -> &'static [&'static str] {
        match self {
            SplitName::AddprimJump => &["jump"],
            SplitName::AddprimTurnLeft => &["turn", "left"],
            SplitName::AroundRight => &["around", "right"],
        }
    }

    /// Whether `command` belongs to the test side.
    pub fn is_test<S: AsRef<str>>(self, command: &[S]) -> bool {
        let phrase = self.held_out_phrase();
        let bare = command.len() == phrase.len() && contains_phrase(command, phrase);
        let addprim = matches!(self, SplitName::AddprimJump | SplitName::AddprimTurnLeft);
        contains_phrase(command, phrase) && !(addprim && bare)
    }
}

impl fmt::Display for SplitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SplitName {
    type Err = ScanError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "addprim_jump" => Ok(SplitName::AddprimJump),
            "addprim_turn_left" => Ok(SplitName::AddprimTurnLeft),
            "around_right" => Ok(SplitName::AroundRight),
            _ => Err(ScanError::UnknownSplit(s.to_owned())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanSplit {
    pub name: SplitName,
    pub train: Vec<ScanSample>,
    pub test: Vec<ScanSample>,
}

/// Partitions `universe` for the named split.
///
/// In the two `addprim` splits the bare primitive is repeated so that it makes
/// up a tenth of the training set, as in the public split files
/// (13,203 + 1,467 lines for `addprim_jump`).
pub fn make_split(name: &str, universe: &[ScanSample]) -> Result<ScanSplit, ScanError> {
    let name: SplitName = name.parse()?;
    Ok(split_universe(name, universe, true))
}

/// [`make_split`] with control over primitive oversampling.
pub fn split_universe(name: SplitName, universe: &[ScanSample], oversample_primitive: bool) -> ScanSplit {
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut bare = None;
    let phrase = name.held_out_phrase();
    for s in universe {
        if name.is_test(&s.command) {
            test.push(s.clone());
        } else if s.command.len() == phrase.len() && s.contains_phrase(phrase) {
            bare = Some(s.clone());
        } else {
            train.push(s.clone());
        }
    }
    if let Some(b) = bare {
        let copies = if oversample_primitive {
            train.len().div_ceil(9).max(1)
        } else {
            1
        };
        train.extend(std::iter::repeat_n(b, copies));
    }
    ScanSplit { name, train, test }
}

/// Augmentation settings for commands: every internal node is swappable and
/// any length ratio up to one qualifies.
pub fn scan_augmentation_config(beta: usize, seed: u64) -> AugmentationConfig {
    AugmentationConfig {
        lambda: LambdaInterval::unconstrained(),
        beta,
        seed,
        subtree_rule: SubtreeRule::AnyInternal,
        ..AugmentationConfig::default()
    }
}

/// TreeMix over command trees. Mixed commands that do not parse are dropped;
/// kept ones get actions from the interpreter.
pub fn augment_scan(train: &[ScanSample], config: &AugmentationConfig) -> Result<Vec<ScanSample>, AugmentError> {
    let examples: Vec<LabeledExample> = train
        .iter()
        .enumerate()
        .map(|(i, s)| LabeledExample {
            id: i.to_string(),
            tree: s.parse.clone(),
            label: vec![1.0],
        })
        .collect();
    let mixed = build_dataset(&examples, config)?;
    Ok(mixed
        .into_iter()
        .filter_map(|m| ScanSample::from_command(&m.tokens).ok())
        .collect())
}

/// Appends externally produced samples (e.g. from another augmenter) after
/// checking that each one parses and carries its own interpretation.
pub fn merge_external(ours: &[ScanSample], external: &[ScanSample]) -> Result<Vec<ScanSample>, ScanError> {
    let mut out = ours.to_vec();
    for s in external {
        let checked = ScanSample::from_command(&s.command)?;
        if checked.actions != s.actions {
            return Err(ScanError::InconsistentSample {
                command: s.command_text(),
            });
        }
        out.push(checked);
    }
    Ok(out)
}

/// Parses one `IN: ... OUT: ...` line into command tokens and actions.
pub fn parse_scan_line(line: &str) -> Result<(Vec<String>, Vec<Action>), String> {
    let rest = line.strip_prefix("IN: ").ok_or("missing `IN: ` prefix")?;
    let (command, actions) = rest.split_once(" OUT:").ok_or("missing ` OUT:` separator")?;
    let command: Vec<String> = command.split_whitespace().map(str::to_owned).collect();
    if command.is_empty() {
        return Err("empty command".into());
    }
    let actions = actions
        .split_whitespace()
        .map(str::parse)
        .collect::<Result<Vec<Action>, _>>()?;
    Ok((command, actions))
}

/// Reads SCAN lines, checking each action sequence against the interpreter.
pub fn read_scan_lines(text: &str) -> Result<Vec<ScanSample>, ScanError> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: String| ScanError::BadLine { line: idx + 1, reason };
        let (command, actions) = parse_scan_line(line).map_err(bad)?;
        let sample = ScanSample::from_command(&command).map_err(|e| bad(e.to_string()))?;
        if sample.actions != actions {
            return Err(bad("actions do not match the command".into()));
        }
        out.push(sample);
    }
    Ok(out)
}

pub fn write_scan_lines(samples: &[ScanSample]) -> String {
    let mut out = String::new();
    for s in samples {
        out.push_str(&s.to_line());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use Action::*;

    fn run(cmd: &str) -> Vec<Action> {
        let words: Vec<&str> = cmd.split(' ').collect();
        interpret_scan(&parse_scan(&words).unwrap()).unwrap()
    }

    #[test]
    fn single_primitive_chain() {
        let t = parse_scan(&["jump"]).unwrap();
        assert_eq!(t.to_ptb(), "(C (S (V (U jump))))");
        assert_eq!(run("jump"), vec![Jump]);
    }

    #[test]
    fn after_sits_at_the_root() {
        let t = parse_scan(&["jump", "around", "left", "after", "walk"]).unwrap();
        assert_eq!(t.to_ptb(), "(C (S (V (U jump) around left)) after (S (V (U walk))))");
    }

    #[test]
    fn rejects_bad_orders() {
        for bad in [
            vec!["around", "jump"],
            vec!["turn"],
            vec!["jump", "and"],
            vec!["jump", "twice", "twice"],
            vec!["jump", "and", "walk", "and", "run"],
            vec!["jump", "around", "around"],
            vec![],
        ] {
            assert!(matches!(parse_scan(&bad), Err(ScanError::Ungrammatical(_))), "{bad:?}");
        }
    }

    #[test]
    fn interpreter_examples() {
        assert_eq!(run("jump twice"), vec![Jump, Jump]);
        assert_eq!(run("jump around left"), [TurnLeft, Jump].repeat(4));
        assert_eq!(run("walk after run"), vec![Run, Walk]);
        assert_eq!(run("walk and run"), vec![Walk, Run]);
        assert_eq!(run("turn left"), vec![TurnLeft]);
        assert_eq!(run("turn opposite right thrice"), vec![TurnRight; 6]);
        assert_eq!(run("look opposite left"), vec![TurnLeft, TurnLeft, Look]);
        assert_eq!(run("turn around right"), vec![TurnRight; 4]);
    }

    #[test]
    fn universe_size_and_membership() {
        let u = scan_universe();
        assert_eq!(u.len(), 20_910);
        assert!(u.iter().any(|s| s.command == ["jump"]));
        assert!(u.iter().any(|s| s.command == ["turn", "left"]));
    }

    #[test]
    fn split_sizes_match_public_files() {
        let u = scan_universe();
        let jump = make_split("addprim_jump", u).unwrap();
        assert_eq!(jump.test.len(), 7_706);
        assert_eq!(jump.train.len(), 14_670);
        let tl = make_split("addprim_turn_left", u).unwrap();
        assert_eq!(tl.test.len(), 1_208);
        assert_eq!(tl.train.len(), 21_890);
        assert!(matches!(make_split("bogus", u), Err(ScanError::UnknownSplit(_))));
    }

    #[test]
    fn line_format() {
        let s = ScanSample::from_command(&["jump", "left"]).unwrap();
        assert_eq!(s.to_line(), "IN: jump left OUT: I_TURN_LEFT I_JUMP");
        let (cmd, acts) = parse_scan_line("IN: jump left OUT: LTURN JUMP").unwrap();
        assert_eq!(cmd, ["jump", "left"]);
        assert_eq!(acts, s.actions);
        assert!(parse_scan_line("jump OUT: I_JUMP").is_err());
        assert!(read_scan_lines("IN: jump OUT: I_WALK\n").is_err());
    }

    #[test]
    fn swapping_primitive_into_modifier_context() {
        let walk_twice = ScanSample::from_command(&["walk", "twice"]).unwrap();
        let jump = ScanSample::from_command(&["jump"]).unwrap();
        let mixed = walk_twice
            .parse
            .replace_subtree(&[0, 0, 0], jump.parse.node_at(&[0, 0, 0]).unwrap())
            .unwrap();
        let s = ScanSample::from_command(mixed.tokens()).unwrap();
        assert_eq!(s.command, ["jump", "twice"]);
        assert_eq!(s.actions, vec![Jump, Jump]);
    }

    #[test]
    fn external_samples_are_validated() {
        let ok = ScanSample::from_command(&["run"]).unwrap();
        let mut wrong = ok.clone();
        wrong.actions = vec![Walk];
        assert_eq!(merge_external(&[], std::slice::from_ref(&ok)).unwrap().len(), 1);
        assert!(matches!(
            merge_external(&[], &[wrong]),
            Err(ScanError::InconsistentSample { .. })
        ));
    }
}
