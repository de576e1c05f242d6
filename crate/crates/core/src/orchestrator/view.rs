use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::events::{EventKind, WireEvent};
use super::session::{PendingAlert, SessionSnapshot};
use crate::skills::AlertPayload;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskState {
    Accepted,
    Running,
    AwaitingConsent,
    Done,
    Failed,
}

impl TaskState {
    pub fn is_terminal(self) -> bool {
        matches!(self, TaskState::Done | TaskState::Failed)
    }
}

/// What a client renders: a snapshot folded forward with the events that
/// follow it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub last_seq: u64,
    pub active_task: Option<String>,
    pub tasks: BTreeMap<String, TaskState>,
    pub pending_alerts: Vec<PendingAlert>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("expected event {expected}, got {got}")]
pub struct SequenceGap {
    pub expected: u64,
    pub got: u64,
}

impl SessionView {
    pub fn from_snapshot(snapshot: &SessionSnapshot) -> SessionView {
        SessionView {
            session_id: snapshot.session_id.clone(),
            last_seq: snapshot.last_seq,
            active_task: snapshot.active_task.clone(),
            tasks: snapshot.tasks.clone(),
            pending_alerts: snapshot.pending_alerts.clone(),
        }
    }

    /// Applies the next event. Events already reflected are ignored; a
    /// skipped sequence number is an error.
    pub fn apply(&mut self, event: &WireEvent) -> Result<(), SequenceGap> {
        if event.seq <= self.last_seq {
            return Ok(());
        }
        if event.seq != self.last_seq + 1 {
            return Err(SequenceGap {
                expected: self.last_seq + 1,
                got: event.seq,
            });
        }
        self.last_seq = event.seq;
        let id = &event.robot_task_id;
        let mut set = |state| {
            self.tasks.insert(id.clone(), state);
        };
        match event.kind {
            EventKind::TaskAccepted => {
                set(TaskState::Accepted);
                self.active_task = Some(id.clone());
            }
            EventKind::SkillStarted | EventKind::Resumed => set(TaskState::Running),
            EventKind::Halted => {}
            EventKind::AlertRaised => {
                set(TaskState::AwaitingConsent);
                if let Ok(alert) = serde_json::from_value::<AlertPayload>(event.payload.clone()) {
                    self.pending_alerts.push(PendingAlert {
                        robot_task_id: id.clone(),
                        requested_at: event.timestamp,
                        alert,
                    });
                }
            }
            EventKind::ConsentReceived => {
                set(TaskState::Running);
                self.pending_alerts.retain(|a| &a.robot_task_id != id);
            }
            EventKind::TaskDone | EventKind::TaskFailed => {
                set(if event.kind == EventKind::TaskDone {
                    TaskState::Done
                } else {
                    TaskState::Failed
                });
                self.pending_alerts.retain(|a| &a.robot_task_id != id);
                if self.active_task.as_ref() == Some(id) {
                    self.active_task = None;
                }
            }
        }
        Ok(())
    }

    pub fn apply_all<'e>(&mut self, events: impl IntoIterator<Item = &'e WireEvent>) -> Result<(), SequenceGap> {
        events.into_iter().try_for_each(|e| self.apply(e))
    }
}
