mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use treemix::augment::eligible_subtrees_with;
use treemix::tree::{collect_subtrees_with, SubtreeRule, TreeError, TreeNode};
use treemix::{collect_subtrees, parse_ptb, serialize_ptb, ConstituencyTree, LambdaInterval, Span};

use common::{random_tree, RUNNING_EXAMPLE};

// Brute-force walk: (path, span, label, child count) of every internal node.
fn internal_nodes(node: &TreeNode, path: Vec<usize>, first: usize, out: &mut Vec<(Vec<usize>, Span, String, usize)>) -> usize {
    if node.children.is_empty() {
        return 1;
    }
    let mut width = 0;
    let at = out.len();
    out.push((path.clone(), Span::new(first, first), node.label.clone(), node.children.len()));
    for (i, c) in node.children.iter().enumerate() {
        let mut p = path.clone();
        p.push(i);
        width += internal_nodes(c, p, first + width, out);
    }
    out[at].1 = Span::new(first, first + width - 1);
    width
}

fn brute(tree: &ConstituencyTree) -> Vec<(Vec<usize>, Span, String, usize)> {
    let mut out = Vec::new();
    internal_nodes(tree.root(), Vec::new(), 0, &mut out);
    out
}

proptest! {
    #[test]
    fn serialize_then_parse_is_identity(seed in any::<u64>()) {
        let tree = random_tree(&mut ChaCha8Rng::seed_from_u64(seed));
        let text = serialize_ptb(&tree);
        let back = parse_ptb(&text).unwrap();
        prop_assert_eq!(&back, &tree);
        prop_assert_eq!(serialize_ptb(&back), text);
    }

    #[test]
    fn collected_subtrees_match_brute_force(seed in any::<u64>()) {
        let tree = random_tree(&mut ChaCha8Rng::seed_from_u64(seed));
        let nodes = brute(&tree);
        let multi: Vec<_> = nodes.iter().filter(|n| n.3 > 1).map(|n| (n.0.clone(), n.1, n.2.clone())).collect();
        let got: Vec<_> = collect_subtrees(&tree).into_iter().map(|s| (s.path, s.span, s.label)).collect();
        prop_assert_eq!(got, multi);
        let any: Vec<_> = nodes.iter().map(|n| (n.0.clone(), n.1, n.2.clone())).collect();
        let got: Vec<_> = collect_subtrees_with(&tree, SubtreeRule::AnyInternal).into_iter().map(|s| (s.path, s.span, s.label)).collect();
        prop_assert_eq!(got, any);
    }

    #[test]
    fn eligibility_is_a_ratio_filter(seed in any::<u64>(), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let tree = random_tree(&mut ChaCha8Rng::seed_from_u64(seed));
        let lambda = LambdaInterval::new(a.min(b), a.max(b)).unwrap();
        let l = tree.len() as f64;
        let want: Vec<Span> = brute(&tree)
            .into_iter()
            .filter(|n| n.3 > 1)
            .filter(|n| {
                let r = n.1.len() as f64 / l;
                r > lambda.lower() && r <= lambda.upper()
            })
            .map(|n| n.1)
            .collect();
        let got: Vec<Span> = eligible_subtrees_with(&tree, lambda, SubtreeRule::MultiChild).into_iter().map(|s| s.span).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn spans_cover_their_leaves(seed in any::<u64>()) {
        let tree = random_tree(&mut ChaCha8Rng::seed_from_u64(seed));
        for (path, node) in tree.nodes() {
            let leaves = node.leaves();
            prop_assert_eq!(leaves.len(), node.span.len());
            prop_assert_eq!(tree.node_at(&path), Some(node));
            let slice: Vec<&str> = tree.tokens()[node.span.start..=node.span.end].iter().map(String::as_str).collect();
            prop_assert_eq!(leaves, slice);
        }
    }
}

#[test]
fn running_example_tokens_and_subtrees() {
    let tree = parse_ptb(RUNNING_EXAMPLE).unwrap();
    assert_eq!(tree.tokens().join(" "), "They will find little interest in this poor film .");
    let phrases: Vec<String> = collect_subtrees(&tree)
        .iter()
        .map(|s| tree.tokens()[s.span.start..=s.span.end].join(" "))
        .collect();
    assert_eq!(
        phrases,
        [
            "They will find little interest in this poor film .",
            "will find little interest in this poor film",
            "find little interest in this poor film",
            "little interest in this poor film",
            "little interest",
            "in this poor film",
            "this poor film",
        ]
    );
}

#[test]
fn whitespace_and_wrapper_are_tolerated() {
    let a = parse_ptb("(S (NP (DT the) (NN cat)) (VP (VBD sat)))").unwrap();
    let b = parse_ptb("  (S\n  (NP (DT the)\t(NN cat))\n  (VP (VBD sat)))\n").unwrap();
    let c = parse_ptb("( (S (NP (DT the) (NN cat)) (VP (VBD sat))))").unwrap();
    assert_eq!(a, b);
    assert_eq!(a.tokens(), c.tokens());
}

#[test]
fn bare_tokens_mix_with_nodes() {
    let t = parse_ptb("(S (V (U jump)) twice)").unwrap();
    assert_eq!(t.tokens(), ["jump", "twice"]);
    assert_eq!(collect_subtrees(&t).len(), 1);
}

#[test]
fn malformed_input_is_rejected() {
    assert_eq!(parse_ptb(""), Err(TreeError::EmptyInput));
    assert_eq!(parse_ptb("   "), Err(TreeError::EmptyInput));
    assert!(matches!(parse_ptb("(S (NP the)"), Err(TreeError::UnbalancedBrackets { .. })));
    assert!(matches!(parse_ptb("(S (NP the)))"), Err(TreeError::UnbalancedBrackets { .. })));
    assert!(matches!(parse_ptb("(S (NP))"), Err(TreeError::EmptyNode { .. })));
    assert!(matches!(parse_ptb("()"), Err(TreeError::EmptyNode { .. })));
    assert!(matches!(parse_ptb("(S a) (S b)"), Err(TreeError::UnexpectedToken { .. })));
    assert!(matches!(parse_ptb("word"), Err(TreeError::UnexpectedToken { .. })));
}

#[test]
fn replace_subtree_renumbers_spans() {
    let tree = parse_ptb("(S (NP (DT a) (NN b)) (VP (V c)))").unwrap();
    let donor = parse_ptb("(NP (DT x) (JJ y) (NN z))").unwrap();
    let out = tree.replace_subtree(&[0], donor.root()).unwrap();
    assert_eq!(out.tokens(), ["x", "y", "z", "c"]);
    assert_eq!(out.node_at(&[1]).unwrap().span, Span::new(3, 3));
    assert!(tree.replace_subtree(&[5], donor.root()).is_none());
}

#[test]
fn display_and_from_str_agree() {
    let tree: ConstituencyTree = RUNNING_EXAMPLE.parse().unwrap();
    assert_eq!(tree.to_string(), RUNNING_EXAMPLE);
    assert_eq!(serialize_ptb(&tree), tree.to_ptb());
}
