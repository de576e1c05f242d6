use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Result of ticking a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeStatus {
    Running,
    Success,
    Failure,
}

impl fmt::Display for NodeStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NodeStatus::Running => "running",
            NodeStatus::Success => "success",
            NodeStatus::Failure => "failure",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Sequence,
    Fallback,
    Parallel,
    Action,
    Condition,
}

impl NodeKind {
    pub fn is_composite(self) -> bool {
        matches!(self, NodeKind::Sequence | NodeKind::Fallback | NodeKind::Parallel)
    }

    pub fn keyword(self) -> &'static str {
        match self {
            NodeKind::Sequence => "sequence",
            NodeKind::Fallback => "fallback",
            NodeKind::Parallel => "parallel",
            NodeKind::Action => "action",
            NodeKind::Condition => "condition",
        }
    }
}

/// How many children of a parallel node must succeed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SuccessThreshold {
    All,
    AtLeast(usize),
}

impl SuccessThreshold {
    pub fn required(self, children: usize) -> usize {
        match self {
            SuccessThreshold::All => children,
            SuccessThreshold::AtLeast(n) => n,
        }
    }

    /// Parses the textual attribute form: `all` or a decimal integer.
    pub fn parse(value: &str) -> Option<Self> {
        if value == "all" {
            return Some(SuccessThreshold::All);
        }
        value.parse::<usize>().ok().map(SuccessThreshold::AtLeast)
    }
}

impl fmt::Display for SuccessThreshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SuccessThreshold::All => f.write_str("all"),
            SuccessThreshold::AtLeast(n) => write!(f, "{n}"),
        }
    }
}

/// A behavior tree node. Composite nodes own their children; leaves carry
/// the name they are bound under in a [`LeafRegistry`](super::LeafRegistry).
///
/// Attributes are kept verbatim in `params` so unknown keys survive a
/// parse/serialize round trip and can be reported by validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeNode {
    pub kind: NodeKind,
    pub leaf_name: Option<String>,
    pub children: Vec<TreeNode>,
    pub params: BTreeMap<String, String>,
}

impl TreeNode {
    fn composite(kind: NodeKind, children: Vec<TreeNode>) -> Self {
        TreeNode {
            kind,
            leaf_name: None,
            children,
            params: BTreeMap::new(),
        }
    }

    fn leaf(kind: NodeKind, name: impl Into<String>) -> Self {
        TreeNode {
            kind,
            leaf_name: Some(name.into()),
            children: Vec::new(),
            params: BTreeMap::new(),
        }
    }

    pub fn sequence(children: Vec<TreeNode>) -> Self {
        Self::composite(NodeKind::Sequence, children)
    }

    pub fn fallback(children: Vec<TreeNode>) -> Self {
        Self::composite(NodeKind::Fallback, children)
    }

    pub fn parallel(threshold: SuccessThreshold, children: Vec<TreeNode>) -> Self {
        Self::composite(NodeKind::Parallel, children).with_param("success", threshold.to_string())
    }

    pub fn action(name: impl Into<String>) -> Self {
        Self::leaf(NodeKind::Action, name)
    }

    pub fn condition(name: impl Into<String>) -> Self {
        Self::leaf(NodeKind::Condition, name)
    }

    pub fn with_param(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.params.insert(key.into(), value.into());
        self
    }

    pub fn with_memory(self, memory: bool) -> Self {
        self.with_param("memory", memory.to_string())
    }

    /// Sequence/fallback memory flag; memoryless unless `memory=true`.
    pub fn memory(&self) -> bool {
        self.params.get("memory").map(|v| v == "true").unwrap_or(false)
    }

    /// Parallel success threshold; defaults to `All`.
    pub fn success_threshold(&self) -> SuccessThreshold {
        self.params
            .get("success")
            .and_then(|v| SuccessThreshold::parse(v))
            .unwrap_or(SuccessThreshold::All)
    }

    /// Short label used in traces, e.g. `sequence` or `action:StopRobot`.
    pub fn label(&self) -> String {
        match &self.leaf_name {
            Some(name) => format!("{}:{}", self.kind.keyword(), name),
            None => self.kind.keyword().to_string(),
        }
    }

    /// Number of nodes in this subtree, including `self`.
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(TreeNode::size).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(TreeNode::depth).max().unwrap_or(0)
    }

    /// Leaf names in depth-first order.
    pub fn leaf_names(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a str>) {
        if let Some(name) = &self.leaf_name {
            out.push(name);
        }
        for child in &self.children {
            child.collect_leaves(out);
        }
    }

    /// Checks the structural invariants: composites have children, leaves
    /// have a name and no children, parallel thresholds are satisfiable.
    pub fn check_structure(&self) -> Result<(), String> {
        self.check_at("/")
    }

    fn check_at(&self, path: &str) -> Result<(), String> {
        if self.kind.is_composite() {
            if self.children.is_empty() {
                return Err(format!("{} at {path} has no children", self.kind.keyword()));
            }
            if self.leaf_name.is_some() {
                return Err(format!("composite at {path} carries a leaf name"));
            }
            if self.kind == NodeKind::Parallel {
                if let Some(raw) = self.params.get("success") {
                    match SuccessThreshold::parse(raw) {
                        Some(SuccessThreshold::AtLeast(0)) | None => {
                            return Err(format!("parallel at {path}: threshold must be positive or all"))
                        }
                        Some(SuccessThreshold::AtLeast(n)) if n > self.children.len() => {
                            return Err(format!(
                                "parallel at {path}: threshold {n} exceeds {} children",
                                self.children.len()
                            ))
                        }
                        _ => {}
                    }
                }
            }
            for (i, child) in self.children.iter().enumerate() {
                child.check_at(&format!("{path}{i}/"))?;
            }
            Ok(())
        } else {
            if !self.children.is_empty() {
                return Err(format!("leaf at {path} has children"));
            }
            match &self.leaf_name {
                Some(name) if !name.is_empty() => Ok(()),
                _ => Err(format!("leaf at {path} has no name")),
            }
        }
    }
}
