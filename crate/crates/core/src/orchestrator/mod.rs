//! Task-level driver: accepts task messages, runs CIN and/or IBM against a
//! session's world and publishes an ordered status stream.
//!
//! A combined task runs CIN to the station first and IBM only if the
//! navigation completed. One task runs at a time per session; a second
//! submission while busy is rejected.

mod events;
mod session;
mod view;


use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::skills::{FailureMode, SkillError, SkillOutcome};
use crate::world::{TaskRef, WorldError};

pub use events::{EventKind, WireEvent, SCHEMA_VERSION};
pub use session::{submit_task, PendingAlert, Session, SessionConfig, SessionSnapshot};
pub use view::{SequenceGap, SessionView, TaskState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TaskType {
    #[serde(rename = "NAV")]
    Nav,
    #[serde(rename = "LBR")]
    Lbr,
    #[serde(rename = "combined_task")]
    CombinedTask,
}

/// Message from the lab orchestration layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskMessage {
    pub task_type: TaskType,
    /// Manipulation name for LBR and combined tasks.
    pub task_name: String,
    /// Node (NAV) or station (LBR, combined).
    pub location: String,
    pub robot_task_id: String,
    pub user_id: String,
}

impl TaskMessage {
    /// The message that starts one of the evaluation tasks.
    pub fn for_task(task: TaskRef, robot_task_id: impl Into<String>) -> TaskMessage {
        let (task_type, name, location) = match task {
            TaskRef::T1 => (TaskType::Nav, "navigate", "capping"),
            TaskRef::T2 => (TaskType::Lbr, "pickup_rack", "capping"),
            TaskRef::T3 => (TaskType::Lbr, "place_rack", "chemspeed"),
        };
        TaskMessage {
            task_type,
            task_name: name.into(),
            location: location.into(),
            robot_task_id: robot_task_id.into(),
            user_id: "chemist".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Skilled,
    Nse,
}

impl Mode {
    pub fn parse(s: &str) -> Option<Mode> {
        match s.to_ascii_lowercase().as_str() {
            "skilled" => Some(Mode::Skilled),
            "nse" => Some(Mode::Nse),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Skilled => "skilled",
            Mode::Nse => "nse",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub task: TaskMessage,
    pub scenario_id: String,
    pub mode: Mode,
    /// One CIN and/or one IBM outcome, in execution order.
    pub outcomes: Vec<SkillOutcome>,
    pub total_duration: f64,
    pub success: bool,
    pub failure_mode: Option<FailureMode>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrchestratorError {
    #[error("invalid task: {0}")]
    InvalidTask(String),
    #[error("scenario could not be loaded: {0}")]
    ScenarioLoad(WorldError),
    #[error("no consent request is pending for `{0}`")]
    NoPendingConsent(String),
    #[error("unknown robot task `{0}`")]
    UnknownTask(String),
    #[error(transparent)]
    Skill(SkillError),
    #[error(transparent)]
    World(WorldError),
}

impl From<SkillError> for OrchestratorError {
    fn from(e: SkillError) -> Self {
        match e {
            SkillError::NoPendingConsent(id) => OrchestratorError::NoPendingConsent(id),
            SkillError::UnknownTask(id) => OrchestratorError::UnknownTask(id),
            SkillError::InvalidRequest(m) => OrchestratorError::InvalidTask(m),
            other => OrchestratorError::Skill(other),
        }
    }
}

impl From<WorldError> for OrchestratorError {
    fn from(e: WorldError) -> Self {
        OrchestratorError::World(e)
    }
}
