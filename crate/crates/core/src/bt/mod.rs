//! Tick-driven behavior tree engine.
//!
//! Composites are `sequence`, `fallback` and `parallel`; leaves are
//! `action` and `condition` behaviors resolved by name through a
//! [`LeafRegistry`]. Sequence and fallback are reactive (restart from the
//! first child every tick) unless the node carries `memory=true`.
//! A parallel node ticks every child each tick, fails as soon as any child
//! fails and succeeds once its success threshold is met.

mod blackboard;
mod engine;
mod node;

pub use blackboard::{Blackboard, TickContext};
pub use engine::{BehaviorTree, BtError, Leaf, LeafCall, LeafRegistry, TickTrace, TraceRecord};
pub use node::{NodeKind, NodeStatus, SuccessThreshold, TreeNode};
