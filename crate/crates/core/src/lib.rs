//! Hazard-aware behavior trees for a mobile lab robot: tree engine and text
//! format, perception surrogates, decision logic, lab world, the two
//! monitoring skills, a task orchestrator and the evaluation harness.

// Range checks are written as `!(x >= 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bt;
pub mod decision;
pub mod dsl;
pub mod experiments;
pub mod orchestrator;
pub mod sensors;
pub mod skills;
pub mod world;
