//! Penn-Treebank style bracketed constituency trees.
//!
//! A tree is read from a single line such as
//! `(S (NP (PRP They)) (VP (MD will) (VP (VB find) ...)) (. .))`.
//! Every internal node carries a tag and at least one child; children are
//! either nested nodes or bare tokens. Leaves are numbered left to right and
//! every node records the inclusive token span it covers.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("empty input")]
    EmptyInput,
    #[error("unbalanced brackets at byte {offset}")]
    UnbalancedBrackets { offset: usize },
    #[error("node without tag or content at byte {offset}")]
    EmptyNode { offset: usize },
    #[error("unexpected token `{token}` at byte {offset}")]
    UnexpectedToken { offset: usize, token: String },
}

/// Inclusive token interval `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.start, self.end)
    }
}

/// A node of a constituency tree. Leaves have no children and their label is
/// the token text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNode {
    pub label: String,
    pub children: Vec<TreeNode>,
    pub span: Span,
}

impl TreeNode {
    pub fn leaf(token: impl Into<String>) -> Self {
        TreeNode {
            label: token.into(),
            children: Vec::new(),
            span: Span::new(0, 0),
        }
    }

    /// Internal node; spans are fixed up when the node ends up in a
    /// [`ConstituencyTree`].
    pub fn internal(label: impl Into<String>, children: Vec<TreeNode>) -> Self {
        TreeNode {
            label: label.into(),
            children,
            span: Span::new(0, 0),
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Leaf tokens under this node, left to right.
    pub fn leaves(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a str>) {
        if self.is_leaf() {
            out.push(&self.label);
        } else {
            for c in &self.children {
                c.collect_leaves(out);
            }
        }
    }

    /// Renumbers spans starting at `start`; returns the next free index.
    fn renumber(&mut self, start: usize) -> usize {
        if self.is_leaf() {
            self.span = Span::new(start, start);
            return start + 1;
        }
        let mut next = start;
        for c in &mut self.children {
            next = c.renumber(next);
        }
        self.span = Span::new(start, next - 1);
        next
    }

    fn write_ptb(&self, out: &mut String) {
        if self.is_leaf() {
            out.push_str(&self.label);
            return;
        }
        out.push('(');
        out.push_str(&self.label);
        for c in &self.children {
            out.push(' ');
            c.write_ptb(out);
        }
        out.push(')');
    }
}

/// A parsed sentence: the root node plus its leaf tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstituencyTree {
    root: TreeNode,
    tokens: Vec<String>,
}

impl ConstituencyTree {
    /// Builds a tree from a root node, recomputing every span. The root must
    /// be internal.
    pub fn from_root(mut root: TreeNode) -> Result<Self, TreeError> {
        if root.is_leaf() {
            return Err(TreeError::EmptyNode { offset: 0 });
        }
        root.renumber(0);
        let tokens = root.leaves().into_iter().map(str::to_owned).collect();
        Ok(ConstituencyTree { root, tokens })
    }

    pub fn root(&self) -> &TreeNode {
        &self.root
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Sentence length in leaf tokens (punctuation included).
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn node_at(&self, path: &[usize]) -> Option<&TreeNode> {
        let mut node = &self.root;
        for &i in path {
            node = node.children.get(i)?;
        }
        Some(node)
    }

    /// Pre-order traversal of every node with its child-index path.
    pub fn nodes(&self) -> Vec<(Vec<usize>, &TreeNode)> {
        let mut out = Vec::new();
        let mut stack = vec![(Vec::new(), &self.root)];
        while let Some((path, node)) = stack.pop() {
            for (i, c) in node.children.iter().enumerate().rev() {
                let mut p = path.clone();
                p.push(i);
                stack.push((p, c));
            }
            out.push((path, node));
        }
        out
    }

    /// Returns a new tree where the node at `path` is replaced by `subtree`.
    /// Spans and tokens are recomputed.
    pub fn replace_subtree(&self, path: &[usize], subtree: &TreeNode) -> Option<ConstituencyTree> {
        if path.is_empty() {
            return ConstituencyTree::from_root(subtree.clone()).ok();
        }
        let mut root = self.root.clone();
        let mut node = &mut root;
        for &i in path {
            node = node.children.get_mut(i)?;
        }
        *node = subtree.clone();
        ConstituencyTree::from_root(root).ok()
    }

    pub fn to_ptb(&self) -> String {
        serialize_ptb(self)
    }
}

impl fmt::Display for ConstituencyTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_ptb(self))
    }
}

impl std::str::FromStr for ConstituencyTree {
    type Err = TreeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_ptb(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Lexeme<'a> {
    Open,
    Close,
    Atom(&'a str),
}

fn lex(text: &str) -> Vec<(usize, Lexeme<'_>)> {
    let mut out = Vec::new();
    let mut atom_start: Option<usize> = None;
    for (i, ch) in text.char_indices() {
        let boundary = ch == '(' || ch == ')' || ch.is_whitespace();
        if boundary {
            if let Some(s) = atom_start.take() {
                out.push((s, Lexeme::Atom(&text[s..i])));
            }
            match ch {
                '(' => out.push((i, Lexeme::Open)),
                ')' => out.push((i, Lexeme::Close)),
                _ => {}
            }
        } else if atom_start.is_none() {
            atom_start = Some(i);
        }
    }
    if let Some(s) = atom_start {
        out.push((s, Lexeme::Atom(&text[s..])));
    }
    out
}

/// Parses one bracketed tree.
pub fn parse_ptb(text: &str) -> Result<ConstituencyTree, TreeError> {
    let lexemes = lex(text);
    if lexemes.is_empty() {
        return Err(TreeError::EmptyInput);
    }
    let mut pos = 0;
    let root = match lexemes[0] {
        (_, Lexeme::Open) => parse_node(&lexemes, &mut pos, text.len())?,
        (offset, Lexeme::Close) => return Err(TreeError::UnbalancedBrackets { offset }),
        (offset, Lexeme::Atom(a)) => {
            return Err(TreeError::UnexpectedToken {
                offset,
                token: a.to_owned(),
            })
        }
    };
    if let Some((offset, lx)) = lexemes.get(pos) {
        return Err(match lx {
            Lexeme::Close => TreeError::UnbalancedBrackets { offset: *offset },
            Lexeme::Open => TreeError::UnexpectedToken {
                offset: *offset,
                token: "(".into(),
            },
            Lexeme::Atom(a) => TreeError::UnexpectedToken {
                offset: *offset,
                token: (*a).to_owned(),
            },
        });
    }
    ConstituencyTree::from_root(root)
}

// Expects lexemes[*pos] == Open.
fn parse_node(lexemes: &[(usize, Lexeme<'_>)], pos: &mut usize, end: usize) -> Result<TreeNode, TreeError> {
    let open_offset = lexemes[*pos].0;
    *pos += 1;
    let label = match lexemes.get(*pos) {
        Some((_, Lexeme::Atom(a))) => {
            *pos += 1;
            (*a).to_owned()
        }
        // `( (S ...))` style unlabeled wrapper
        Some((_, Lexeme::Open)) => String::new(),
        Some((_, Lexeme::Close)) => return Err(TreeError::EmptyNode { offset: open_offset }),
        None => return Err(TreeError::UnbalancedBrackets { offset: end }),
    };
    let mut children = Vec::new();
    loop {
        match lexemes.get(*pos) {
            Some((_, Lexeme::Close)) => {
                *pos += 1;
                break;
            }
            Some((_, Lexeme::Open)) => children.push(parse_node(lexemes, pos, end)?),
            Some((_, Lexeme::Atom(a))) => {
                children.push(TreeNode::leaf(*a));
                *pos += 1;
            }
            None => return Err(TreeError::UnbalancedBrackets { offset: end }),
        }
    }
    if children.is_empty() {
        return Err(TreeError::EmptyNode { offset: open_offset });
    }
    Ok(TreeNode::internal(label, children))
}

pub fn serialize_ptb(tree: &ConstituencyTree) -> String {
    let mut out = String::new();
    tree.root.write_ptb(&mut out);
    out
}

/// Which internal nodes count as swap units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubtreeRule {
    /// Nodes with more than one child.
    #[default]
    MultiChild,
    /// Every internal node, including unary ones.
    AnyInternal,
}

impl SubtreeRule {
    fn admits(self, node: &TreeNode) -> bool {
        match self {
            SubtreeRule::MultiChild => node.children.len() > 1,
            SubtreeRule::AnyInternal => !node.children.is_empty(),
        }
    }
}

/// A candidate swap unit inside a tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubtreeRef {
    pub path: Vec<usize>,
    pub span: Span,
    pub label: String,
}

impl SubtreeRef {
    pub fn len(&self) -> usize {
        self.span.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// All nodes with more than one child, in pre-order.
pub fn collect_subtrees(tree: &ConstituencyTree) -> Vec<SubtreeRef> {
    collect_subtrees_with(tree, SubtreeRule::MultiChild)
}

pub fn collect_subtrees_with(tree: &ConstituencyTree, rule: SubtreeRule) -> Vec<SubtreeRef> {
    let mut out = Vec::new();
    let mut path = Vec::new();
    walk(&tree.root, &mut path, rule, &mut out);
    out
}

fn walk(node: &TreeNode, path: &mut Vec<usize>, rule: SubtreeRule, out: &mut Vec<SubtreeRef>) {
    if rule.admits(node) {
        out.push(SubtreeRef {
            path: path.clone(),
            span: node.span,
            label: node.label.clone(),
        });
    }
    for (i, c) in node.children.iter().enumerate() {
        path.push(i);
        walk(c, path, rule, out);
        path.pop();
    }
}
