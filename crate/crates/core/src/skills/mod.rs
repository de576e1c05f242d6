//! The two hazard-aware skills as behavior trees over the simulated world.
//!
//! `cin` (navigation with continuous inspection) and `ibm` (inspection
//! before manipulation) are shipped as `.bt` documents; their leaves are
//! bound here against a [`SkillContext`]. A [`SkillRun`] ticks one tree
//! against a stepping world until the root finishes.

mod consent;
mod context;
mod leaves;
mod runner;
mod timing;

#[cfg(test)]
mod tests;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bt::BtError;
use crate::decision::{Action, Classification, DecisionError};
use crate::dsl::{self, DslError, TreeDocument};
use crate::world::{ManipulationTask, Pose, StationId, TaskRef, World, WorldError};

pub use consent::{
    AutoConsent, ConsentCommand, ConsentRequest, ConsentSource, NoConsent, RandomDelayConsent, ScriptedConsent,
};
pub use context::SkillContext;
pub use leaves::{cin_registry, ibm_registry, registry_for, CIN_LEAVES, IBM_LEAVES};
pub use runner::{run_nse, run_skill, SkillRun};
pub use timing::{PerStation, Spread, Timing};

pub const CIN_SOURCE: &str = include_str!("../../data/trees/cin.bt");
pub const IBM_SOURCE: &str = include_str!("../../data/trees/ibm.bt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SkillKind {
    Cin,
    Ibm,
}

impl SkillKind {
    pub fn name(self) -> &'static str {
        match self {
            SkillKind::Cin => "cin",
            SkillKind::Ibm => "ibm",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cin" => Some(SkillKind::Cin),
            "ibm" => Some(SkillKind::Ibm),
            _ => None,
        }
    }

    pub fn tree(self) -> TreeDocument {
        match self {
            SkillKind::Cin => build_cin_tree(),
            SkillKind::Ibm => build_ibm_tree(),
        }
    }
}

pub fn build_cin_tree() -> TreeDocument {
    dsl::parse(CIN_SOURCE).expect("shipped cin.bt parses")
}

pub fn build_ibm_tree() -> TreeDocument {
    dsl::parse(IBM_SOURCE).expect("shipped ibm.bt parses")
}

/// What a skill is asked to do.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillRequest {
    pub robot_task_id: String,
    /// Destination node (CIN) or station id (IBM).
    pub location: String,
    /// Required for IBM.
    pub manipulation: Option<ManipulationTask>,
}

impl SkillRequest {
    /// The skill and request a shipped task reference stands for.
    pub fn for_task(
        task: TaskRef,
        world: &World,
        robot_task_id: impl Into<String>,
    ) -> Result<(SkillKind, Self), WorldError> {
        let station = task.station();
        Ok(match task.manipulation() {
            None => (
                SkillKind::Cin,
                Self::navigate(robot_task_id, world.station(station)?.node.clone()),
            ),
            Some(m) => (SkillKind::Ibm, Self::manipulate(robot_task_id, station, m)),
        })
    }

    pub fn navigate(robot_task_id: impl Into<String>, node: impl Into<String>) -> Self {
        SkillRequest {
            robot_task_id: robot_task_id.into(),
            location: node.into(),
            manipulation: None,
        }
    }

    pub fn manipulate(robot_task_id: impl Into<String>, station: StationId, task: ManipulationTask) -> Self {
        SkillRequest {
            robot_task_id: robot_task_id.into(),
            location: station.name().to_string(),
            manipulation: Some(task),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureMode {
    Collision,
    UnsafeManipulation,
    Abort,
}

impl FailureMode {
    pub fn name(self) -> &'static str {
        match self {
            FailureMode::Collision => "collision",
            FailureMode::UnsafeManipulation => "unsafe_manipulation",
            FailureMode::Abort => "abort",
        }
    }
}

/// Scenario id, pose and tick standing in for the camera image of an alert.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotDescriptor {
    pub scenario_id: String,
    pub pose: Pose,
    pub tick: u64,
}

/// Evidence sent to the operator with a consent request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlertPayload {
    pub x1: u8,
    pub x2: u32,
    pub x3: Option<Classification>,
    /// Probe reading at the grasp frame, when it was taken.
    pub mid_x2: Option<u32>,
    pub snapshot: SnapshotDescriptor,
    pub summary: String,
    pub timestamp: f64,
}

/// Skill-level events, in tick order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SkillEventKind {
    /// A primary modality fired (CIN monitor, IBM base VOC or arm camera).
    Trigger {
        x1: u8,
        x2: u32,
    },
    Classified {
        label: String,
        score: f64,
    },
    Decision {
        action: Action,
    },
    MidVoc {
        x2: u32,
    },
    Halted,
    AlertRaised {
        alert: AlertPayload,
    },
    ConsentReceived {
        command: ConsentCommand,
    },
    Resumed,
    Collision {
        hazard: String,
    },
    UnsafeManipulation {
        hazards: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillEvent {
    pub time: f64,
    pub tick: u64,
    #[serde(flatten)]
    pub kind: SkillEventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillOutcome {
    pub skill: SkillKind,
    pub robot_task_id: String,
    /// Most severe action taken during the run.
    pub final_action: Action,
    /// Every decision, in order.
    pub actions: Vec<Action>,
    pub halts: usize,
    pub alerts: Vec<AlertPayload>,
    /// `(start, end)` of each consent wait, seconds of world time.
    pub consent_waits: Vec<(f64, f64)>,
    pub started_at: f64,
    pub duration: f64,
    pub completed: bool,
    pub workflow_failure: bool,
    pub failure_mode: Option<FailureMode>,
    pub classifier_calls: usize,
    pub events: Vec<SkillEvent>,
}

impl SkillOutcome {
    pub fn consent_time(&self) -> f64 {
        self.consent_waits.iter().map(|(a, b)| b - a).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SkillError {
    #[error(transparent)]
    Bt(#[from] BtError),
    #[error(transparent)]
    Dsl(#[from] DslError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Decision(#[from] DecisionError),
    #[error("invalid skill request: {0}")]
    InvalidRequest(String),
    #[error("no consent request is pending for `{0}`")]
    NoPendingConsent(String),
    #[error("unknown robot task `{0}`")]
    UnknownTask(String),
    #[error("the run has already finished")]
    Finished,
}
