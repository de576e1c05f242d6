use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsentCommand {
    Continue,
    Abort,
}

/// An open request for operator consent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsentRequest {
    pub robot_task_id: String,
    pub requested_at: f64,
    /// Index of the alert this request belongs to.
    pub alert: usize,
}

/// Answers consent requests. Polled once per tick while a request is open.
pub trait ConsentSource {
    fn poll(&mut self, request: &ConsentRequest, now: f64, rng: &mut ChaCha8Rng) -> Option<ConsentCommand>;
}

/// Never answers; the run ends at the abort timeout.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoConsent;

impl ConsentSource for NoConsent {
    fn poll(&mut self, _: &ConsentRequest, _: f64, _: &mut ChaCha8Rng) -> Option<ConsentCommand> {
        None
    }
}

/// Continues after a fixed delay.
#[derive(Debug, Clone, Copy)]
pub struct AutoConsent {
    pub delay_s: f64,
}

impl ConsentSource for AutoConsent {
    fn poll(&mut self, request: &ConsentRequest, now: f64, _: &mut ChaCha8Rng) -> Option<ConsentCommand> {
        (now + 1e-9 >= request.requested_at + self.delay_s).then_some(ConsentCommand::Continue)
    }
}

/// Continues after a delay drawn uniformly from `[min_s, max_s]` per
/// request.
#[derive(Debug, Clone)]
pub struct RandomDelayConsent {
    pub min_s: f64,
    pub max_s: f64,
    due: Option<(f64, f64)>,
}

impl RandomDelayConsent {
    pub fn new(min_s: f64, max_s: f64) -> Self {
        RandomDelayConsent {
            min_s,
            max_s,
            due: None,
        }
    }
}

impl Default for RandomDelayConsent {
    fn default() -> Self {
        Self::new(60.0, 300.0)
    }
}

impl ConsentSource for RandomDelayConsent {
    fn poll(&mut self, request: &ConsentRequest, now: f64, rng: &mut ChaCha8Rng) -> Option<ConsentCommand> {
        let due = match self.due {
            Some((asked, due)) if asked == request.requested_at => due,
            _ => {
                let due = request.requested_at + rng.random_range(self.min_s..=self.max_s);
                self.due = Some((request.requested_at, due));
                due
            }
        };
        (now + 1e-9 >= due).then_some(ConsentCommand::Continue)
    }
}

/// Answers successive requests from a script of `(delay, command)` pairs;
/// requests beyond the script are never answered.
#[derive(Debug, Clone, Default)]
pub struct ScriptedConsent {
    script: VecDeque<(f64, ConsentCommand)>,
}

impl ScriptedConsent {
    pub fn new(script: impl IntoIterator<Item = (f64, ConsentCommand)>) -> Self {
        ScriptedConsent {
            script: script.into_iter().collect(),
        }
    }
}

impl ConsentSource for ScriptedConsent {
    fn poll(&mut self, request: &ConsentRequest, now: f64, _: &mut ChaCha8Rng) -> Option<ConsentCommand> {
        let &(delay, cmd) = self.script.front()?;
        if now + 1e-9 >= request.requested_at + delay {
            self.script.pop_front();
            Some(cmd)
        } else {
            None
        }
    }
}
