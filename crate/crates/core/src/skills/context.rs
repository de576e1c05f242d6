use crate::bt::{Blackboard, TickContext};
use crate::decision::Action;
use crate::sensors::{ModalityFrame, Models, RngStreams};
use crate::world::{StationId, World};

use super::consent::{ConsentCommand, ConsentRequest};
use super::timing::Timing;
use super::{
    AlertPayload, FailureMode, SkillError, SkillEvent, SkillEventKind, SkillKind, SkillRequest, SnapshotDescriptor,
};

/// State of one trigger-to-resolution episode: a CIN monitor trigger, the
/// IBM base VOC check, or the IBM camera check.
#[derive(Debug, Clone, Default)]
pub(crate) struct Episode {
    pub frame: ModalityFrame,
    pub verdict: Option<Action>,
    pub mid_x2: Option<u32>,
    pub alerted: bool,
    pub consent: Option<ConsentRequest>,
    pub consented: bool,
}

/// A timed action in progress.
#[derive(Debug, Clone)]
pub(crate) struct Timer {
    pub leaf: &'static str,
    pub due: f64,
}

/// Everything the skill leaves read and write while the tree is ticked.
pub struct SkillContext {
    pub(crate) bb: Blackboard,
    pub(crate) world: World,
    pub(crate) models: Models,
    pub(crate) timing: Timing,
    pub(crate) rng: RngStreams,
    pub(crate) skill: SkillKind,
    pub(crate) request: SkillRequest,
    pub(crate) station: Option<StationId>,
    /// Latest joint observation.
    pub(crate) frame: ModalityFrame,
    pub(crate) episode: Option<Episode>,
    pub(crate) inbox: Option<ConsentCommand>,
    pub(crate) timer: Option<Timer>,

    // CIN monitor.
    pub(crate) started: bool,
    pub(crate) collisions_seen: usize,
    pub(crate) latched: bool,
    pub(crate) vision_flag: bool,
    pub(crate) next_vision: f64,
    pub(crate) ack_vision: bool,
    pub(crate) ack_voc: bool,

    // IBM checks, cached so reactive re-ticks do not resample.
    pub(crate) initial_voc: Option<Action>,
    pub(crate) vision_check: Option<bool>,

    // Outcome accumulation.
    pub(crate) started_at: f64,
    pub(crate) actions: Vec<Action>,
    pub(crate) alerts: Vec<AlertPayload>,
    pub(crate) waits: Vec<(f64, f64)>,
    pub(crate) events: Vec<SkillEvent>,
    pub(crate) failure: Option<FailureMode>,
    pub(crate) classifier_calls: usize,
    pub(crate) error: Option<SkillError>,
}

impl TickContext for SkillContext {
    fn blackboard(&mut self) -> &mut Blackboard {
        &mut self.bb
    }
}

impl SkillContext {
    pub(crate) fn new(
        skill: SkillKind,
        request: SkillRequest,
        world: World,
        models: Models,
        timing: Timing,
        rng: RngStreams,
    ) -> Result<Self, SkillError> {
        let station = match skill {
            SkillKind::Cin => {
                if world.graph().index_of(&request.location).is_none() {
                    return Err(SkillError::InvalidRequest(format!(
                        "unknown node `{}`",
                        request.location
                    )));
                }
                None
            }
            SkillKind::Ibm => {
                let id = StationId::parse(&request.location)
                    .ok_or_else(|| SkillError::InvalidRequest(format!("`{}` is not a station", request.location)))?;
                if request.manipulation.is_none() {
                    return Err(SkillError::InvalidRequest("manipulation skill needs a task".into()));
                }
                Some(id)
            }
        };
        let mut bb = Blackboard::new();
        bb.set("robot_task_id", &request.robot_task_id);
        bb.set("location", &request.location);
        bb.set("manipulation", &request.manipulation);
        bb.set_time(world.clock());
        let started_at = world.clock();
        let collisions_seen = world.collisions().len();
        Ok(SkillContext {
            bb,
            world,
            models,
            timing,
            rng,
            skill,
            request,
            station,
            frame: ModalityFrame::default(),
            episode: None,
            inbox: None,
            timer: None,
            started: false,
            collisions_seen,
            latched: false,
            vision_flag: false,
            next_vision: 0.0,
            ack_vision: false,
            ack_voc: false,
            initial_voc: None,
            vision_check: None,
            started_at,
            actions: Vec::new(),
            alerts: Vec::new(),
            waits: Vec::new(),
            events: Vec::new(),
            failure: None,
            classifier_calls: 0,
            error: None,
        })
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn world_mut(&mut self) -> &mut World {
        &mut self.world
    }

    pub fn blackboard_ref(&self) -> &Blackboard {
        &self.bb
    }

    pub fn frame(&self) -> &ModalityFrame {
        &self.frame
    }

    pub fn alerts(&self) -> &[AlertPayload] {
        &self.alerts
    }

    pub fn events(&self) -> &[SkillEvent] {
        &self.events
    }

    pub fn pending_consent(&self) -> Option<&ConsentRequest> {
        self.open_consent().filter(|_| self.inbox.is_none())
    }

    /// The open request, including one already answered but not yet
    /// processed.
    pub fn open_consent(&self) -> Option<&ConsentRequest> {
        self.episode.as_ref().and_then(|e| e.consent.as_ref())
    }

    pub(crate) fn now(&self) -> f64 {
        self.world.clock()
    }

    pub(crate) fn emit(&mut self, kind: SkillEventKind) {
        self.events.push(SkillEvent {
            time: self.world.clock(),
            tick: self.bb.tick(),
            kind,
        });
    }

    pub(crate) fn decide(&mut self, action: Action) {
        self.actions.push(action);
        self.bb.set("last_action", &action);
        self.emit(SkillEventKind::Decision { action });
    }

    /// Records an internal error; the runner surfaces it after the tick.
    pub(crate) fn fail<E: Into<SkillError>>(&mut self, e: E) {
        if self.error.is_none() {
            self.error = Some(e.into());
        }
    }

    pub(crate) fn snapshot_descriptor(&self) -> SnapshotDescriptor {
        SnapshotDescriptor {
            scenario_id: self.world.scenario_id.clone(),
            pose: self.world.robot().pose,
            tick: self.bb.tick(),
        }
    }

    pub(crate) fn station(&self) -> StationId {
        self.station
            .expect("manipulation leaves run only in the manipulation skill")
    }

    /// Runs a timed action: the first call draws its duration, later calls
    /// report whether it has elapsed.
    pub(crate) fn timed(&mut self, leaf: &'static str, draw: impl FnOnce(&mut Self) -> f64) -> bool {
        let now = self.now();
        match &self.timer {
            Some(t) if t.leaf == leaf => {
                if now + 1e-9 >= t.due {
                    self.timer = None;
                    true
                } else {
                    false
                }
            }
            _ => {
                let d = draw(self);
                self.timer = Some(Timer { leaf, due: now + d });
                false
            }
        }
    }
}
