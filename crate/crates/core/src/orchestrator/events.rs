use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const SCHEMA_VERSION: &str = "prevent-event 1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    TaskAccepted,
    SkillStarted,
    Halted,
    AlertRaised,
    ConsentReceived,
    Resumed,
    TaskDone,
    TaskFailed,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::TaskAccepted => "task_accepted",
            EventKind::SkillStarted => "skill_started",
            EventKind::Halted => "halted",
            EventKind::AlertRaised => "alert_raised",
            EventKind::ConsentReceived => "consent_received",
            EventKind::Resumed => "resumed",
            EventKind::TaskDone => "task_done",
            EventKind::TaskFailed => "task_failed",
        }
    }
}

/// Status event as logged and as sent over the wire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireEvent {
    pub schema: String,
    /// Per-session sequence number, gapless from 1.
    pub seq: u64,
    pub kind: EventKind,
    pub robot_task_id: String,
    pub tick: u64,
    pub timestamp: f64,
    pub payload: Value,
}
