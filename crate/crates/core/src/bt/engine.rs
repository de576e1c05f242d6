use std::collections::{BTreeMap, HashMap};
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::blackboard::TickContext;
use super::node::{NodeKind, NodeStatus, TreeNode};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BtError {
    #[error("leaf `{0}` is not bound in the registry")]
    UnboundLeaf(String),
    #[error("leaf `{0}` is already registered")]
    DuplicateLeaf(String),
    #[error("malformed tree: {0}")]
    MalformedTree(String),
    #[error("condition `{0}` returned running")]
    ConditionRunning(String),
}

/// What a leaf sees when it is ticked.
#[derive(Debug, Clone, Copy)]
pub struct LeafCall<'a> {
    pub name: &'a str,
    pub kind: NodeKind,
    pub params: &'a BTreeMap<String, String>,
    pub path: &'a str,
}

/// A leaf behavior. Conditions must never return `Running`.
pub trait Leaf<C> {
    fn tick(&mut self, ctx: &mut C, call: &LeafCall<'_>) -> NodeStatus;

    /// Called when a running leaf is abandoned by its parent.
    fn halt(&mut self, _ctx: &mut C) {}
}

impl<C, F> Leaf<C> for F
where
    F: FnMut(&mut C, &LeafCall<'_>) -> NodeStatus,
{
    fn tick(&mut self, ctx: &mut C, call: &LeafCall<'_>) -> NodeStatus {
        self(ctx, call)
    }
}

/// Name to behavior bindings.
pub struct LeafRegistry<C> {
    leaves: HashMap<String, Box<dyn Leaf<C>>>,
}

impl<C> Default for LeafRegistry<C> {
    fn default() -> Self {
        LeafRegistry { leaves: HashMap::new() }
    }
}

impl<C> LeafRegistry<C> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register_leaf(&mut self, name: impl Into<String>, behavior: impl Leaf<C> + 'static) -> Result<(), BtError> {
        let name = name.into();
        if self.leaves.contains_key(&name) {
            return Err(BtError::DuplicateLeaf(name));
        }
        self.leaves.insert(name, Box::new(behavior));
        Ok(())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.leaves.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.leaves.keys().map(String::as_str)
    }

    fn get_mut(&mut self, name: &str) -> Option<&mut Box<dyn Leaf<C>>> {
        self.leaves.get_mut(name)
    }
}

/// One node visit within a tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub tick: u64,
    pub time: f64,
    pub path: String,
    pub node: String,
    pub status: NodeStatus,
}

/// Visits made during one tick, in depth-first order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickTrace {
    pub tick: u64,
    pub time: f64,
    pub visits: Vec<(String, NodeStatus)>,
}

impl TickTrace {
    fn records(&self, labels: &HashMap<String, String>) -> impl Iterator<Item = TraceRecord> + '_ {
        let labels = labels.clone();
        self.visits.iter().map(move |(path, status)| TraceRecord {
            tick: self.tick,
            time: self.time,
            path: path.clone(),
            node: labels.get(path).cloned().unwrap_or_default(),
            status: *status,
        })
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct NodeMemory {
    /// Child to resume from (memory sequences/fallbacks).
    cursor: usize,
    /// The node returned `Running` on its last visit.
    running: bool,
}

/// An executable tree: the static structure plus per-node memory and the
/// accumulated tick traces.
pub struct BehaviorTree {
    root: TreeNode,
    memory: Vec<NodeMemory>,
    paths: HashMap<String, String>,
    traces: Vec<TickTrace>,
    keep_traces: bool,
}

impl BehaviorTree {
    pub fn new(root: TreeNode) -> Result<Self, BtError> {
        root.check_structure().map_err(BtError::MalformedTree)?;
        let memory = vec![NodeMemory::default(); root.size()];
        let mut paths = HashMap::new();
        index_paths(&root, "", &mut paths);
        Ok(BehaviorTree {
            root,
            memory,
            paths,
            traces: Vec::new(),
            keep_traces: true,
        })
    }

    pub fn root(&self) -> &TreeNode {
        &self.root
    }

    /// Disables trace accumulation (long experiment runs).
    pub fn set_keep_traces(&mut self, keep: bool) {
        self.keep_traces = keep;
    }

    pub fn traces(&self) -> &[TickTrace] {
        &self.traces
    }

    pub fn last_trace(&self) -> Option<&TickTrace> {
        self.traces.last()
    }

    /// Fails with `UnboundLeaf` for the first leaf missing from `registry`.
    pub fn check_bindings<C>(&self, registry: &LeafRegistry<C>) -> Result<(), BtError> {
        match self.root.leaf_names().into_iter().find(|n| !registry.contains(n)) {
            Some(name) => Err(BtError::UnboundLeaf(name.to_string())),
            None => Ok(()),
        }
    }

    /// Clears all per-node memory; the next tick behaves as the first.
    pub fn reset(&mut self) {
        self.memory.iter_mut().for_each(|m| *m = NodeMemory::default());
    }

    /// Ticks the tree once from the root.
    pub fn tick<C: TickContext>(&mut self, ctx: &mut C, registry: &mut LeafRegistry<C>) -> Result<NodeStatus, BtError> {
        self.check_bindings(registry)?;
        let bb = ctx.blackboard();
        bb.advance_tick();
        let mut trace = TickTrace {
            tick: bb.tick(),
            time: bb.time(),
            visits: Vec::new(),
        };
        let mut walker = Walker {
            memory: &mut self.memory,
            trace: &mut trace,
            registry,
        };
        let status = walker.visit(&self.root, 0, "/", ctx)?;
        if status != NodeStatus::Running {
            self.reset();
        }
        if self.keep_traces {
            self.traces.push(trace);
        }
        Ok(status)
    }

    /// Writes every recorded visit as one JSON object per line.
    pub fn write_trace_log<W: Write>(&self, mut out: W) -> io::Result<()> {
        for trace in &self.traces {
            for record in trace.records(&self.paths) {
                serde_json::to_writer(&mut out, &record)?;
                out.write_all(b"\n")?;
            }
        }
        Ok(())
    }
}

fn index_paths(node: &TreeNode, prefix: &str, out: &mut HashMap<String, String>) {
    let path = if prefix.is_empty() {
        "/".to_string()
    } else {
        prefix.to_string()
    };
    out.insert(path.clone(), node.label());
    for (i, child) in node.children.iter().enumerate() {
        index_paths(child, &format!("{}{i}/", path), out);
    }
}

struct Walker<'a, C> {
    memory: &'a mut [NodeMemory],
    trace: &'a mut TickTrace,
    registry: &'a mut LeafRegistry<C>,
}

impl<C> Walker<'_, C> {
    fn visit(&mut self, node: &TreeNode, idx: usize, path: &str, ctx: &mut C) -> Result<NodeStatus, BtError> {
        let slot = self.trace.visits.len();
        self.trace.visits.push((path.to_string(), NodeStatus::Running));
        let status = match node.kind {
            NodeKind::Sequence => self.visit_chain(node, idx, path, ctx, NodeStatus::Success)?,
            NodeKind::Fallback => self.visit_chain(node, idx, path, ctx, NodeStatus::Failure)?,
            NodeKind::Parallel => self.visit_parallel(node, idx, path, ctx)?,
            NodeKind::Action | NodeKind::Condition => self.visit_leaf(node, path, ctx)?,
        };
        self.memory[idx].running = status == NodeStatus::Running;
        self.trace.visits[slot].1 = status;
        Ok(status)
    }

    /// Sequence and fallback differ only in which status lets the chain
    /// continue to the next child.
    fn visit_chain(
        &mut self,
        node: &TreeNode,
        idx: usize,
        path: &str,
        ctx: &mut C,
        continue_on: NodeStatus,
    ) -> Result<NodeStatus, BtError> {
        let start = if node.memory() { self.memory[idx].cursor } else { 0 };
        let offsets = child_offsets(node, idx);
        for i in start..node.children.len() {
            let child_path = format!("{path}{i}/");
            let status = self.visit(&node.children[i], offsets[i], &child_path, ctx)?;
            if status == continue_on {
                continue;
            }
            self.halt_from(node, &offsets, i + 1, ctx);
            self.memory[idx].cursor = if status == NodeStatus::Running { i } else { 0 };
            return Ok(status);
        }
        self.memory[idx].cursor = 0;
        Ok(continue_on)
    }

    fn visit_parallel(&mut self, node: &TreeNode, idx: usize, path: &str, ctx: &mut C) -> Result<NodeStatus, BtError> {
        let offsets = child_offsets(node, idx);
        let mut successes = 0;
        let mut failed = false;
        for (i, child) in node.children.iter().enumerate() {
            let child_path = format!("{path}{i}/");
            match self.visit(child, offsets[i], &child_path, ctx)? {
                NodeStatus::Success => successes += 1,
                NodeStatus::Failure => failed = true,
                NodeStatus::Running => {}
            }
        }
        let required = node.success_threshold().required(node.children.len());
        let status = if failed {
            NodeStatus::Failure
        } else if successes >= required {
            NodeStatus::Success
        } else {
            NodeStatus::Running
        };
        if status != NodeStatus::Running {
            self.halt_from(node, &offsets, 0, ctx);
        }
        Ok(status)
    }

    fn visit_leaf(&mut self, node: &TreeNode, path: &str, ctx: &mut C) -> Result<NodeStatus, BtError> {
        let name = node.leaf_name.as_deref().unwrap_or_default();
        let leaf = self
            .registry
            .get_mut(name)
            .ok_or_else(|| BtError::UnboundLeaf(name.to_string()))?;
        let call = LeafCall {
            name,
            kind: node.kind,
            params: &node.params,
            path,
        };
        let status = leaf.tick(ctx, &call);
        if node.kind == NodeKind::Condition && status == NodeStatus::Running {
            return Err(BtError::ConditionRunning(name.to_string()));
        }
        Ok(status)
    }

    /// Halts children `from..` of `node` that are still marked running.
    fn halt_from(&mut self, node: &TreeNode, offsets: &[usize], from: usize, ctx: &mut C) {
        for (child, &off) in node.children.iter().zip(offsets).skip(from) {
            self.halt_subtree(child, off, ctx);
        }
    }

    fn halt_subtree(&mut self, node: &TreeNode, idx: usize, ctx: &mut C) {
        if !self.memory[idx].running {
            return;
        }
        self.memory[idx] = NodeMemory::default();
        if node.kind.is_composite() {
            let offsets = child_offsets(node, idx);
            for (child, &off) in node.children.iter().zip(&offsets) {
                self.halt_subtree(child, off, ctx);
            }
        } else if let Some(leaf) = node.leaf_name.as_deref().and_then(|n| self.registry.get_mut(n)) {
            leaf.halt(ctx);
        }
    }
}

/// Preorder indices of each child of the node at `idx`.
fn child_offsets(node: &TreeNode, idx: usize) -> Vec<usize> {
    let mut next = idx + 1;
    node.children
        .iter()
        .map(|c| {
            let at = next;
            next += c.size();
            at
        })
        .collect()
}
