#![allow(dead_code)]

use prevent_core::bt::{NodeKind, SuccessThreshold, TreeNode};
use proptest::prelude::*;

/// Random trees of depth at most 4 and fan-out at most 4. Leaves get
/// placeholder names; call [`name_leaves`] to make them unique.
pub fn arb_tree() -> impl Strategy<Value = TreeNode> {
    let leaf = prop_oneof![Just(TreeNode::action("x")), Just(TreeNode::condition("x"))];
    leaf.prop_recursive(3, 64, 4, |inner| {
        (0u8..3, prop::collection::vec(inner, 1..=4), any::<bool>(), 0usize..=4).prop_map(
            |(kind, children, memory, k)| match kind {
                0 => TreeNode::sequence(children).with_memory(memory),
                1 => TreeNode::fallback(children).with_memory(memory),
                _ => {
                    let n = children.len();
                    let threshold = if k == 0 {
                        SuccessThreshold::All
                    } else {
                        SuccessThreshold::AtLeast(k.min(n))
                    };
                    TreeNode::parallel(threshold, children)
                }
            },
        )
    })
}

/// Renames leaves `L0`, `L1`, ... in depth-first order.
pub fn name_leaves(node: &mut TreeNode) {
    fn go(node: &mut TreeNode, next: &mut usize) {
        if node.kind.is_composite() {
            for c in &mut node.children {
                go(c, next);
            }
        } else {
            node.leaf_name = Some(format!("L{next}"));
            *next += 1;
        }
    }
    go(node, &mut 0);
}

pub fn leaves(node: &TreeNode) -> Vec<(String, NodeKind)> {
    fn go(node: &TreeNode, out: &mut Vec<(String, NodeKind)>) {
        if let Some(n) = &node.leaf_name {
            out.push((n.clone(), node.kind));
        }
        for c in &node.children {
            go(c, out);
        }
    }
    let mut out = Vec::new();
    go(node, &mut out);
    out
}

pub mod bt_reference;
pub mod decision_checks;
pub mod dsl_checks;
pub mod skill_oracle;
