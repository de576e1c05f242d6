//! Discrete-time simulated laboratory.
//!
//! A planar navigation graph, stations with rack and tray state, a mobile
//! base with an arm, and scenario-authored point hazards. The sensor
//! surrogates read ground truth through [`World::ground_truth_query`].

mod geometry;
mod graph;
mod hazard;
mod scenario;
mod state;
mod station;

use thiserror::Error;

pub use geometry::{Point, Pose};
pub use graph::{NavEdge, NavGraph, NavNode, Route};
pub use hazard::{Chemical, ChemicalRule, Containment, HazardEntity, HazardKind, HazardSpec, Placement};
pub use scenario::{Layout, ScenarioSpec, TaskRef, LAYOUT_VERSION, SCENARIO_VERSION};
pub use state::{
    ArmState, ManipulationOutcome, ManipulationTask, MotionState, Region, Robot, World, WorldEvent, WorldSnapshot,
    DEFAULT_DT, DEFAULT_SPEED, FOOTPRINT_RADIUS,
};
pub use station::{SlotState, Station, StationId, StationSpec, TrayState, CAPPING_SLOTS, SLOT_PITCH};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorldError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("node `{0}` is unreachable")]
    UnreachableNode(String),
    #[error("unknown station `{}`", .0.name())]
    UnknownStation(StationId),
    #[error("state violation: {0}")]
    StateViolation(String),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid hazard: {0}")]
    InvalidHazard(String),
    #[error("step size must be positive, got {0}")]
    InvalidStep(f64),
    #[error("scenario load error: {0}")]
    ScenarioLoad(String),
    #[error("missing scenario `{0}`")]
    MissingScenario(String),
}
