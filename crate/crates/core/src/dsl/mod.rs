//! Text format for behavior trees (`.bt` files).
//!
//! ```text
//! btdsl 1
//! # comment
//! parallel(success=all) {
//!   action StartToNode
//!   fallback {
//!     condition NoHazardDetected
//!     action StopRobot
//!   }
//! }
//! ```
//!
//! A file holds a version header and exactly one root node. Composites
//! (`sequence`, `fallback`, `parallel`) need at least one child; leaves
//! (`action`, `condition`) take an identifier and optional attributes.

mod lexer;
mod parser;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bt::{LeafRegistry, NodeKind, SuccessThreshold, TreeNode};

pub use parser::MAX_DEPTH;

pub const FORMAT_VERSION: &str = "1";

/// 1-based line and column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

/// Inclusive source range of a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: Pos,
    pub end: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DslError {
    #[error("{line}:{col}: expected one of [{}], found {found}", expected.join(", "))]
    Syntax {
        line: usize,
        col: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("document contains no tree")]
    EmptyDocument,
    #[error("{line}:{col}: a document has exactly one root node")]
    DuplicateRoot { line: usize, col: usize },
}

impl DslError {
    pub fn position(&self) -> Option<Pos> {
        match self {
            DslError::Syntax { line, col, .. } | DslError::DuplicateRoot { line, col } => {
                Some(Pos { line: *line, col: *col })
            }
            DslError::EmptyDocument => None,
        }
    }
}

/// A parsed tree together with its source and per-node spans.
///
/// Spans are keyed by node path (`/`, `/0/`, `/0/1/`, ...), matching the
/// paths used in tick traces.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeDocument {
    pub source: String,
    pub root: TreeNode,
    pub spans: BTreeMap<String, Span>,
    pub version: u32,
}

impl TreeDocument {
    pub fn span(&self, path: &str) -> Option<Span> {
        self.spans.get(path).copied()
    }
}

pub fn parse(text: &str) -> Result<TreeDocument, DslError> {
    parser::parse(text)
}

/// Parses raw bytes; invalid UTF-8 is reported as a syntax error at the
/// first bad byte.
pub fn parse_bytes(bytes: &[u8]) -> Result<TreeDocument, DslError> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse(text),
        Err(e) => {
            let pos = parser::byte_pos(bytes, e.valid_up_to());
            Err(DslError::Syntax {
                line: pos.line,
                col: pos.col,
                expected: vec!["valid UTF-8".into()],
                found: "invalid byte sequence".into(),
            })
        }
    }
}

/// Canonical text: version header, two-space indentation, attributes in
/// key order, parentheses only when a node has attributes.
pub fn serialize(root: &TreeNode) -> String {
    let mut out = format!("btdsl {FORMAT_VERSION}\n");
    write_node(&mut out, root, 0);
    out
}

fn write_node(out: &mut String, node: &TreeNode, depth: usize) {
    let indent = "  ".repeat(depth);
    out.push_str(&indent);
    out.push_str(node.kind.keyword());
    if let Some(name) = &node.leaf_name {
        out.push(' ');
        out.push_str(name);
    }
    if !node.params.is_empty() {
        let attrs: Vec<String> = node.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = write!(out, "({})", attrs.join(","));
    }
    if node.kind.is_composite() {
        out.push_str(" {\n");
        for child in &node.children {
            write_node(out, child, depth + 1);
        }
        out.push_str(&indent);
        out.push('}');
    }
    out.push('\n');
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub path: String,
    pub span: Option<Span>,
    pub message: String,
}

/// Checks leaf bindings and attribute legality against a registry.
pub fn validate<C>(doc: &TreeDocument, registry: &LeafRegistry<C>) -> Vec<Diagnostic> {
    validate_with(doc, |name| registry.contains(name))
}

/// As [`validate`], with an arbitrary binding predicate.
pub fn validate_with(doc: &TreeDocument, is_bound: impl Fn(&str) -> bool) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    check(doc, &doc.root, "/", &is_bound, &mut out);
    out
}

fn check(doc: &TreeDocument, node: &TreeNode, path: &str, is_bound: &impl Fn(&str) -> bool, out: &mut Vec<Diagnostic>) {
    let mut diag = |message: String| {
        out.push(Diagnostic {
            path: path.to_string(),
            span: doc.span(path),
            message,
        })
    };
    if let Some(name) = &node.leaf_name {
        if !is_bound(name) {
            diag(format!("leaf `{name}` is not bound"));
        }
    }
    for (key, value) in &node.params {
        match (node.kind, key.as_str()) {
            (NodeKind::Sequence | NodeKind::Fallback, "memory") => {
                if value != "true" && value != "false" {
                    diag(format!("memory must be true or false, got `{value}`"));
                }
            }
            (NodeKind::Parallel, "success") => match SuccessThreshold::parse(value) {
                Some(SuccessThreshold::AtLeast(0)) | None => diag("threshold must be positive or all".to_string()),
                Some(SuccessThreshold::AtLeast(n)) if n > node.children.len() => {
                    diag(format!("threshold {n} exceeds the {} children", node.children.len()))
                }
                _ => {}
            },
            (kind, _) => diag(format!("unknown attribute `{key}` for {}", kind.keyword())),
        }
    }
    for (i, child) in node.children.iter().enumerate() {
        check(doc, child, &format!("{path}{i}/"), is_bound, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(body: &str) -> Result<TreeDocument, DslError> {
        parse(&format!("btdsl 1\n{body}"))
    }

    #[test]
    fn minimal_fallback() {
        let d = doc("fallback { condition C action A }").unwrap();
        assert_eq!(d.root.kind, NodeKind::Fallback);
        assert_eq!(d.root.children.len(), 2);
        assert_eq!(d.root.children[0], TreeNode::condition("C"));
        assert_eq!(d.root.children[1], TreeNode::action("A"));
    }

    #[test]
    fn parallel_attribute() {
        let d = doc("parallel(success=all) { action A action B }").unwrap();
        assert_eq!(d.root.success_threshold(), SuccessThreshold::All);
        assert_eq!(d.root.children.len(), 2);
    }

    #[test]
    fn empty_composite_is_syntax_error() {
        let err = doc("sequence { }").unwrap_err();
        match err {
            DslError::Syntax {
                line,
                col,
                ref expected,
                ..
            } => {
                assert_eq!((line, col), (2, 12));
                assert!(expected.iter().any(|e| e == "action"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn header_is_required() {
        assert!(matches!(
            parse("action A"),
            Err(DslError::Syntax { line: 1, col: 1, .. })
        ));
        assert_eq!(parse(""), Err(DslError::EmptyDocument));
        assert_eq!(parse("# only a comment\n"), Err(DslError::EmptyDocument));
        assert_eq!(parse("btdsl 1\n"), Err(DslError::EmptyDocument));
        assert!(parse("btdsl 2\naction A").is_err());
    }

    #[test]
    fn comments_before_header() {
        let d = parse("# skill tree\n\nbtdsl 1 # v1\naction A # trailing\n").unwrap();
        assert_eq!(d.root, TreeNode::action("A"));
    }

    #[test]
    fn two_roots_rejected() {
        assert_eq!(
            doc("action A\naction B"),
            Err(DslError::DuplicateRoot { line: 3, col: 1 })
        );
    }

    #[test]
    fn spans_cover_nodes() {
        let d = doc("sequence {\n  action A\n  action B(x=1)\n}").unwrap();
        let root = d.span("/").unwrap();
        assert_eq!(root.start, Pos { line: 2, col: 1 });
        assert_eq!(root.end, Pos { line: 5, col: 1 });
        let b = d.span("/1/").unwrap();
        assert_eq!(b.start, Pos { line: 4, col: 3 });
        assert_eq!(b.end, Pos { line: 4, col: 15 });
    }

    #[test]
    fn unbound_leaf_diagnostic() {
        let d = doc("sequence { action Yes action Nope }").unwrap();
        let diags = validate_with(&d, |n| n == "Yes");
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("Nope"));
        assert_eq!(diags[0].path, "/1/");
        assert!(diags[0].span.is_some());
    }

    #[test]
    fn zero_threshold_diagnostic() {
        let d = doc("parallel(success=0) { action A }").unwrap();
        let diags = validate_with(&d, |_| true);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].message, "threshold must be positive or all");
    }

    #[test]
    fn unknown_attribute_is_validation_not_parse_error() {
        let d = doc("sequence(speed=3) { action A(memory=true) }").unwrap();
        let diags = validate_with(&d, |_| true);
        assert_eq!(diags.len(), 2);
    }

    #[test]
    fn leaf_without_params_has_no_parentheses() {
        assert_eq!(serialize(&TreeNode::action("A")), "btdsl 1\naction A\n");
    }

    #[test]
    fn nested_indentation_is_monotone() {
        let tree = TreeNode::sequence(vec![TreeNode::fallback(vec![TreeNode::sequence(vec![
            TreeNode::action("A"),
        ])])]);
        let text = serialize(&tree);
        let expected = "btdsl 1\nsequence {\n  fallback {\n    sequence {\n      action A\n    }\n  }\n}\n";
        assert_eq!(text, expected);
        assert_eq!(parse(&text).unwrap().root, tree);
    }

    #[test]
    fn attributes_sorted_by_key() {
        let node = TreeNode::action("A").with_param("zeta", "1").with_param("alpha", "x");
        assert_eq!(serialize(&node), "btdsl 1\naction A(alpha=x,zeta=1)\n");
    }

    #[test]
    fn invalid_utf8_is_a_diagnostic() {
        let err = parse_bytes(b"btdsl 1\naction \xff").unwrap_err();
        assert_eq!(err.position(), Some(Pos { line: 2, col: 8 }));
    }

    #[test]
    fn deep_nesting_is_bounded() {
        let mut text = String::from("btdsl 1\n");
        for _ in 0..10_000 {
            text.push_str("sequence { ");
        }
        assert!(matches!(parse(&text), Err(DslError::Syntax { .. })));
    }
}
