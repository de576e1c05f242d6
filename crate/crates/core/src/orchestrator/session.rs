use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::sensors::{ModalityFrame, Models, RngStreams};
use crate::skills::{
    run_nse, AlertPayload, ConsentCommand, ConsentSource, SkillEventKind, SkillKind, SkillOutcome, SkillRequest,
    SkillRun, Timing,
};
use crate::world::{
    ArmState, HazardSpec, ManipulationTask, MotionState, Pose, ScenarioSpec, StationId, TaskRef, World,
};

use super::events::{EventKind, WireEvent, SCHEMA_VERSION};
use super::view::TaskState;
use super::{Mode, OrchestratorError, RunRecord, TaskMessage, TaskType};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    /// Builtin scenario id or path to a scenario file.
    pub scenario: String,
    pub mode: Mode,
    pub seed: u64,
    /// Noise-free perception instead of the calibrated surrogates.
    pub exact_models: bool,
    pub timing: Timing,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            scenario: "T1_NH".into(),
            mode: Mode::Skilled,
            seed: 0,
            exact_models: false,
            timing: Timing::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingAlert {
    pub robot_task_id: String,
    pub requested_at: f64,
    pub alert: AlertPayload,
}

/// Everything a late-joining client needs to render the session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSnapshot {
    pub session_id: String,
    pub scenario_id: String,
    pub mode: Mode,
    pub clock: f64,
    pub tick: u64,
    pub pose: Pose,
    pub node: Option<String>,
    pub motion: MotionState,
    pub arm: ArmState,
    pub carrying_rack: bool,
    pub active_task: Option<String>,
    pub tasks: BTreeMap<String, TaskState>,
    pub pending_alerts: Vec<PendingAlert>,
    pub last_frame: ModalityFrame,
    /// Sequence number of the last event reflected here.
    pub last_seq: u64,
}

struct Active {
    msg: TaskMessage,
    stages: VecDeque<(SkillKind, SkillRequest)>,
    run: Option<SkillRun>,
    outcomes: Vec<SkillOutcome>,
    cursor: usize,
    started_at: f64,
}

/// One world, one task at a time.
pub struct Session {
    id: String,
    config: SessionConfig,
    scenario_id: String,
    /// Held here while no skill is running.
    world: Option<World>,
    rng: Option<RngStreams>,
    consent_rng: ChaCha8Rng,
    active: Option<Active>,
    records: Vec<RunRecord>,
    events: Vec<WireEvent>,
    task_ids: BTreeSet<String>,
    tick: u64,
    last_frame: ModalityFrame,
    consent_user: Option<String>,
}

impl Session {
    pub fn new(id: impl Into<String>, config: SessionConfig) -> Result<Session, OrchestratorError> {
        let spec = ScenarioSpec::resolve(&config.scenario).map_err(OrchestratorError::ScenarioLoad)?;
        Self::with_spec(id, &spec, config)
    }

    pub fn with_spec(
        id: impl Into<String>,
        spec: &ScenarioSpec,
        config: SessionConfig,
    ) -> Result<Session, OrchestratorError> {
        let world = spec.build_world().map_err(OrchestratorError::ScenarioLoad)?;
        let rng = RngStreams::new(config.seed);
        Ok(Session {
            id: id.into(),
            scenario_id: spec.id.clone(),
            consent_rng: rng.consent.clone(),
            rng: Some(rng),
            world: Some(world),
            config,
            active: None,
            records: Vec::new(),
            events: Vec::new(),
            task_ids: BTreeSet::new(),
            tick: 0,
            last_frame: ModalityFrame::default(),
            consent_user: None,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn is_busy(&self) -> bool {
        self.active.is_some()
    }

    pub fn world(&self) -> &World {
        match self.active.as_ref().and_then(|a| a.run.as_ref()) {
            Some(run) => run.world(),
            None => self.world.as_ref().expect("world is held by the session or the run"),
        }
    }

    fn world_mut(&mut self) -> &mut World {
        match self.active.as_mut().and_then(|a| a.run.as_mut()) {
            Some(run) => run.world_mut(),
            None => self.world.as_mut().expect("world is held by the session or the run"),
        }
    }

    pub fn events(&self) -> &[WireEvent] {
        &self.events
    }

    /// Events with sequence number greater than `seq`.
    pub fn events_after(&self, seq: u64) -> &[WireEvent] {
        let from = (seq as usize).min(self.events.len());
        &self.events[from..]
    }

    pub fn records(&self) -> &[RunRecord] {
        &self.records
    }

    pub fn record(&self, robot_task_id: &str) -> Option<&RunRecord> {
        self.records.iter().find(|r| r.task.robot_task_id == robot_task_id)
    }

    fn emit(&mut self, kind: EventKind, robot_task_id: &str, timestamp: f64, payload: serde_json::Value) {
        let seq = self.events.len() as u64 + 1;
        self.events.push(WireEvent {
            schema: SCHEMA_VERSION.to_string(),
            seq,
            kind,
            robot_task_id: robot_task_id.to_string(),
            tick: self.tick,
            timestamp,
            payload,
        });
    }

    fn plan(&self, msg: &TaskMessage) -> Result<VecDeque<(SkillKind, SkillRequest)>, OrchestratorError> {
        let world = self.world();
        let invalid = |m: String| Err(OrchestratorError::InvalidTask(m));
        let id = msg.robot_task_id.clone();
        let station = || -> Result<(StationId, ManipulationTask), OrchestratorError> {
            let s = StationId::parse(&msg.location)
                .filter(|s| world.station(*s).is_ok())
                .ok_or_else(|| OrchestratorError::InvalidTask(format!("`{}` is not a station", msg.location)))?;
            let m = ManipulationTask::parse(&msg.task_name)
                .ok_or_else(|| OrchestratorError::InvalidTask(format!("unknown manipulation `{}`", msg.task_name)))?;
            Ok((s, m))
        };
        let mut stages = VecDeque::new();
        match msg.task_type {
            TaskType::Nav => {
                if world.graph().index_of(&msg.location).is_none() {
                    return invalid(format!("unknown node `{}`", msg.location));
                }
                stages.push_back((SkillKind::Cin, SkillRequest::navigate(id, msg.location.clone())));
            }
            TaskType::Lbr => {
                let (s, m) = station()?;
                stages.push_back((SkillKind::Ibm, SkillRequest::manipulate(id, s, m)));
            }
            TaskType::CombinedTask => {
                let (s, m) = station()?;
                let node = world.station(s)?.node.clone();
                stages.push_back((SkillKind::Cin, SkillRequest::navigate(id.clone(), node)));
                stages.push_back((SkillKind::Ibm, SkillRequest::manipulate(id, s, m)));
            }
        }
        Ok(stages)
    }

    /// Accepts a task; it starts on the next [`Session::step`].
    pub fn submit(&mut self, msg: TaskMessage) -> Result<(), OrchestratorError> {
        if self.active.is_some() {
            return Err(OrchestratorError::InvalidTask("busy".into()));
        }
        if msg.robot_task_id.is_empty() || self.task_ids.contains(&msg.robot_task_id) {
            return Err(OrchestratorError::InvalidTask(format!(
                "robot_task_id `{}` is empty or already used",
                msg.robot_task_id
            )));
        }
        let stages = self.plan(&msg)?;
        self.task_ids.insert(msg.robot_task_id.clone());
        let now = self.world().clock();
        self.emit(EventKind::TaskAccepted, &msg.robot_task_id, now, json!({ "task": msg }));
        self.active = Some(Active {
            msg,
            stages,
            run: None,
            outcomes: Vec::new(),
            cursor: 0,
            started_at: now,
        });
        Ok(())
    }

    fn models_for(&self, kind: SkillKind, request: &SkillRequest) -> Models {
        if self.config.exact_models {
            return Models::exact();
        }
        let task = match (kind, request.manipulation) {
            (SkillKind::Cin, _) => TaskRef::T1,
            (_, Some(ManipulationTask::PlaceRack)) => TaskRef::T3,
            _ => TaskRef::T2,
        };
        Models::for_task(task).expect("shipped model parameters are valid")
    }

    /// Advances the active task by one tick. Returns whether a task is
    /// still active afterwards.
    pub fn step(&mut self) -> Result<bool, OrchestratorError> {
        let Some(mut active) = self.active.take() else {
            return Ok(false);
        };
        let result = self.step_active(&mut active);
        let finished = match result {
            Ok(f) => f,
            Err(e) => {
                self.active = Some(active);
                return Err(e);
            }
        };
        if finished {
            self.finalize(active);
            Ok(false)
        } else {
            self.active = Some(active);
            Ok(true)
        }
    }

    /// Returns true once the task is over.
    fn step_active(&mut self, active: &mut Active) -> Result<bool, OrchestratorError> {
        let Some(run) = active.run.as_mut() else {
            let Some((kind, request)) = active.stages.pop_front() else {
                return Ok(true);
            };
            let now = self.world().clock();
            self.emit(
                EventKind::SkillStarted,
                &request.robot_task_id,
                now,
                json!({ "skill": kind, "mode": self.config.mode, "location": request.location }),
            );
            let mut world = self.world.take().expect("idle session holds the world");
            let mut rng = self.rng.take().expect("idle session holds the rng");
            if self.config.mode == Mode::Nse {
                let outcome = run_nse(kind, request, &mut world, &self.config.timing, &mut rng);
                self.world = Some(world);
                self.rng = Some(rng);
                return Ok(self.stage_done(active, outcome?));
            }
            let models = self.models_for(kind, &request);
            match SkillRun::new(
                kind,
                request,
                world.clone(),
                models,
                self.config.timing.clone(),
                rng.clone(),
            ) {
                Ok(run) => {
                    active.run = Some(run);
                    active.cursor = 0;
                    return Ok(false);
                }
                Err(e) => {
                    self.world = Some(world);
                    self.rng = Some(rng);
                    return Err(e.into());
                }
            }
        };
        let status = run.advance();
        self.tick += 1;
        let new: Vec<_> = run.events_since(active.cursor).to_vec();
        active.cursor += new.len();
        self.last_frame = run.context().frame().clone();
        let id = run.robot_task_id().to_string();
        let finished = run.is_finished();
        for e in new {
            let (kind, payload) = match e.kind {
                SkillEventKind::Halted => (EventKind::Halted, json!({ "skill": run.kind() })),
                SkillEventKind::AlertRaised { alert } => (EventKind::AlertRaised, json!(alert)),
                SkillEventKind::ConsentReceived { command } => (
                    EventKind::ConsentReceived,
                    json!({ "command": command, "user_id": self.consent_user.take() }),
                ),
                SkillEventKind::Resumed => (EventKind::Resumed, json!({ "skill": run.kind() })),
                _ => continue,
            };
            self.emit(kind, &id, e.time, payload);
        }
        status?;
        if !finished {
            return Ok(false);
        }
        let run = active.run.take().expect("checked above");
        let (outcome, world, rng) = run.finish();
        self.world = Some(world);
        self.rng = Some(rng);
        Ok(self.stage_done(active, outcome))
    }

    fn stage_done(&mut self, active: &mut Active, outcome: SkillOutcome) -> bool {
        let go_on = outcome.completed && !active.stages.is_empty();
        active.outcomes.push(outcome);
        !go_on
    }

    fn finalize(&mut self, active: Active) {
        let now = self.world().clock();
        let failure_mode = active.outcomes.iter().find_map(|o| o.failure_mode);
        let success = failure_mode.is_none() && active.outcomes.iter().all(|o| o.completed) && active.stages.is_empty();
        let record = RunRecord {
            task: active.msg,
            scenario_id: self.scenario_id.clone(),
            mode: self.config.mode,
            outcomes: active.outcomes,
            total_duration: now - active.started_at,
            success,
            failure_mode,
        };
        let (kind, payload) = if success {
            (EventKind::TaskDone, json!({ "total_duration": record.total_duration }))
        } else {
            (
                EventKind::TaskFailed,
                json!({ "failure_mode": record.failure_mode, "total_duration": record.total_duration }),
            )
        };
        let id = record.task.robot_task_id.clone();
        self.emit(kind, &id, now, payload);
        self.records.push(record);
    }

    /// Steps until the active task ends, answering consent requests from
    /// `consent`.
    pub fn run_until_idle(&mut self, consent: &mut dyn ConsentSource) -> Result<(), OrchestratorError> {
        while self.active.is_some() {
            if let Some(req) = self.pending_request() {
                let now = self.world().clock();
                if let Some(cmd) = consent.poll(&req, now, &mut self.consent_rng) {
                    self.deliver_consent(&req.robot_task_id, cmd, "auto")?;
                }
            }
            self.step()?;
        }
        Ok(())
    }

    fn pending_request(&self) -> Option<crate::skills::ConsentRequest> {
        self.active.as_ref()?.run.as_ref()?.pending_consent().cloned()
    }

    pub fn deliver_consent(
        &mut self,
        robot_task_id: &str,
        command: ConsentCommand,
        user_id: &str,
    ) -> Result<(), OrchestratorError> {
        if !self.task_ids.contains(robot_task_id) {
            return Err(OrchestratorError::UnknownTask(robot_task_id.to_string()));
        }
        let run = self
            .active
            .as_mut()
            .and_then(|a| a.run.as_mut())
            .filter(|r| r.robot_task_id() == robot_task_id)
            .ok_or_else(|| OrchestratorError::NoPendingConsent(robot_task_id.to_string()))?;
        run.deliver_consent(robot_task_id, command)?;
        self.consent_user = Some(user_id.to_string());
        Ok(())
    }

    /// Adds a hazard to the live world; it materializes on the next step.
    pub fn inject(&mut self, spec: &HazardSpec) -> Result<(), OrchestratorError> {
        self.world_mut().add_hazard(spec)?;
        Ok(())
    }

    pub fn snapshot(&self) -> SessionSnapshot {
        let world = self.world();
        let robot = world.robot();
        let mut pending_alerts = Vec::new();
        if let Some(run) = self.active.as_ref().and_then(|a| a.run.as_ref()) {
            if let Some(req) = run.context().open_consent().filter(|_| !run.is_finished()) {
                if let Some(alert) = run.context().alerts().get(req.alert) {
                    pending_alerts.push(PendingAlert {
                        robot_task_id: req.robot_task_id.clone(),
                        requested_at: req.requested_at,
                        alert: alert.clone(),
                    });
                }
            }
        }
        let mut tasks: BTreeMap<String, TaskState> = self
            .records
            .iter()
            .map(|r| {
                let state = if r.success { TaskState::Done } else { TaskState::Failed };
                (r.task.robot_task_id.clone(), state)
            })
            .collect();
        if let Some(a) = &self.active {
            let state = if !pending_alerts.is_empty() {
                TaskState::AwaitingConsent
            } else if a.run.is_none() && a.outcomes.is_empty() {
                TaskState::Accepted
            } else {
                TaskState::Running
            };
            tasks.insert(a.msg.robot_task_id.clone(), state);
        }
        SessionSnapshot {
            session_id: self.id.clone(),
            scenario_id: self.scenario_id.clone(),
            mode: self.config.mode,
            clock: world.clock(),
            tick: self.tick,
            pose: robot.pose,
            node: world.current_node().map(str::to_string),
            motion: robot.motion,
            arm: robot.arm,
            carrying_rack: robot.carrying_rack,
            active_task: self.active.as_ref().map(|a| a.msg.robot_task_id.clone()),
            tasks,
            pending_alerts,
            last_frame: self.last_frame.clone(),
            last_seq: self.events.len() as u64,
        }
    }
}

/// Runs one task to completion in a fresh session over `spec`.
pub fn submit_task(
    msg: TaskMessage,
    spec: &ScenarioSpec,
    config: SessionConfig,
    consent: &mut dyn ConsentSource,
) -> Result<RunRecord, OrchestratorError> {
    let mut session = Session::with_spec("local", spec, config)?;
    session.submit(msg)?;
    session.run_until_idle(consent)?;
    Ok(session.records.pop().expect("a finished task leaves a record"))
}
