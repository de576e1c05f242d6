use crate::bt::{BehaviorTree, LeafRegistry, NodeStatus};
use crate::decision::Action;
use crate::sensors::{Models, RngStreams};
use crate::world::{MotionState, StationId, World};

use super::consent::{ConsentCommand, ConsentRequest, ConsentSource};
use super::context::SkillContext;
use super::leaves::registry_for;
use super::timing::Timing;
use super::{FailureMode, SkillError, SkillEvent, SkillEventKind, SkillKind, SkillOutcome, SkillRequest};

/// One skill execution that can be advanced a tick at a time, so consent
/// and hazard injections can arrive between ticks.
pub struct SkillRun {
    kind: SkillKind,
    tree: BehaviorTree,
    registry: LeafRegistry<SkillContext>,
    ctx: SkillContext,
    status: NodeStatus,
}

impl SkillRun {
    pub fn new(
        kind: SkillKind,
        request: SkillRequest,
        world: World,
        models: Models,
        timing: Timing,
        rng: RngStreams,
    ) -> Result<Self, SkillError> {
        let tree = BehaviorTree::new(kind.tree().root)?;
        let registry = registry_for(kind);
        tree.check_bindings(&registry)?;
        Ok(SkillRun {
            kind,
            tree,
            registry,
            ctx: SkillContext::new(kind, request, world, models, timing, rng)?,
            status: NodeStatus::Running,
        })
    }

    pub fn kind(&self) -> SkillKind {
        self.kind
    }

    pub fn set_keep_traces(&mut self, keep: bool) {
        self.tree.set_keep_traces(keep);
    }

    pub fn tree(&self) -> &BehaviorTree {
        &self.tree
    }

    pub fn context(&self) -> &SkillContext {
        &self.ctx
    }

    pub fn world(&self) -> &World {
        &self.ctx.world
    }

    pub fn world_mut(&mut self) -> &mut World {
        &mut self.ctx.world
    }

    pub fn robot_task_id(&self) -> &str {
        &self.ctx.request.robot_task_id
    }

    pub fn is_finished(&self) -> bool {
        self.status != NodeStatus::Running
    }

    pub fn pending_consent(&self) -> Option<&ConsentRequest> {
        if self.is_finished() {
            return None;
        }
        self.ctx.pending_consent()
    }

    /// Queues an operator answer; it takes effect on the next tick.
    pub fn deliver_consent(&mut self, robot_task_id: &str, command: ConsentCommand) -> Result<(), SkillError> {
        if robot_task_id != self.ctx.request.robot_task_id {
            return Err(SkillError::UnknownTask(robot_task_id.to_string()));
        }
        if self.pending_consent().is_none() {
            return Err(SkillError::NoPendingConsent(robot_task_id.to_string()));
        }
        self.ctx.inbox = Some(command);
        Ok(())
    }

    /// Events emitted since index `from`.
    pub fn events_since(&self, from: usize) -> &[SkillEvent] {
        &self.ctx.events[from.min(self.ctx.events.len())..]
    }

    /// Ticks the tree once at the current world time.
    pub fn tick(&mut self) -> Result<NodeStatus, SkillError> {
        if self.is_finished() {
            return Err(SkillError::Finished);
        }
        let now = self.ctx.world.clock();
        self.ctx.bb.set_time(now);
        let status = self.tree.tick(&mut self.ctx, &mut self.registry)?;
        if let Some(e) = self.ctx.error.take() {
            self.status = NodeStatus::Failure;
            return Err(e);
        }
        self.status = status;
        if status == NodeStatus::Running && now - self.ctx.started_at >= self.ctx.timing.max_run_s {
            self.ctx.failure.get_or_insert(FailureMode::Abort);
            self.status = NodeStatus::Failure;
        }
        Ok(self.status)
    }

    /// Advances world time by one step.
    pub fn step(&mut self) -> Result<(), SkillError> {
        let dt = self.ctx.timing.dt;
        self.ctx.world.step(dt)?;
        Ok(())
    }

    /// Tick, then step the world if the tree is still running.
    pub fn advance(&mut self) -> Result<NodeStatus, SkillError> {
        let status = self.tick()?;
        if status == NodeStatus::Running {
            self.step()?;
        }
        Ok(status)
    }

    /// Runs to completion, polling `consent` whenever a request is open.
    pub fn run_to_end(&mut self, consent: &mut dyn ConsentSource) -> Result<(), SkillError> {
        while !self.is_finished() {
            let now = self.ctx.world.clock();
            if let Some(req) = self.pending_consent().cloned() {
                if let Some(cmd) = consent.poll(&req, now, &mut self.ctx.rng.consent) {
                    self.ctx.inbox = Some(cmd);
                }
            }
            self.advance()?;
        }
        Ok(())
    }

    pub fn outcome(&self) -> SkillOutcome {
        let ctx = &self.ctx;
        let now = ctx.world.clock();
        let mut waits = ctx.waits.clone();
        if let Some(req) = ctx.episode.as_ref().and_then(|e| e.consent.as_ref()) {
            waits.push((req.requested_at, now));
        }
        let workflow_failure = matches!(
            ctx.failure,
            Some(FailureMode::Collision | FailureMode::UnsafeManipulation)
        );
        SkillOutcome {
            skill: self.kind,
            robot_task_id: ctx.request.robot_task_id.clone(),
            final_action: ctx.actions.iter().copied().max().unwrap_or(Action::Proceed),
            actions: ctx.actions.clone(),
            halts: ctx.events.iter().filter(|e| e.kind == SkillEventKind::Halted).count(),
            alerts: ctx.alerts.clone(),
            consent_waits: waits,
            started_at: ctx.started_at,
            duration: now - ctx.started_at,
            completed: self.status == NodeStatus::Success && ctx.failure.is_none(),
            workflow_failure,
            failure_mode: ctx.failure,
            classifier_calls: ctx.classifier_calls,
            events: ctx.events.clone(),
        }
    }

    pub fn finish(self) -> (SkillOutcome, World, RngStreams) {
        let outcome = self.outcome();
        (outcome, self.ctx.world, self.ctx.rng)
    }
}

/// Runs one skill to completion against `world`, which is left in its
/// final state.
pub fn run_skill(
    kind: SkillKind,
    request: SkillRequest,
    world: &mut World,
    models: &Models,
    timing: &Timing,
    rng: &mut RngStreams,
    consent: &mut dyn ConsentSource,
) -> Result<SkillOutcome, SkillError> {
    let mut run = SkillRun::new(
        kind,
        request,
        world.clone(),
        models.clone(),
        timing.clone(),
        rng.clone(),
    )?;
    run.set_keep_traces(false);
    run.run_to_end(consent)?;
    let (outcome, w, r) = run.finish();
    *world = w;
    *rng = r;
    Ok(outcome)
}

/// The same task without any monitoring: drive straight to the node, or
/// manipulate without looking. World failures end the run.
pub fn run_nse(
    kind: SkillKind,
    request: SkillRequest,
    world: &mut World,
    timing: &Timing,
    rng: &mut RngStreams,
) -> Result<SkillOutcome, SkillError> {
    let started_at = world.clock();
    let seen = world.collisions().len();
    let mut events = Vec::new();
    let mut failure = None;
    match kind {
        SkillKind::Cin => {
            if world.graph().index_of(&request.location).is_none() {
                return Err(SkillError::InvalidRequest(format!(
                    "unknown node `{}`",
                    request.location
                )));
            }
            world.robot_mut().speed_factor = timing.speed_factor(&mut rng.timing);
            world.begin_navigation(&request.location)?;
            while world.robot().motion == MotionState::Navigating {
                if world.clock() - started_at >= timing.max_run_s {
                    failure = Some(FailureMode::Abort);
                    break;
                }
                world.step(timing.dt)?;
                if let Some(hazard) = world.collisions().get(seen).cloned() {
                    events.push(SkillEvent {
                        time: world.clock(),
                        tick: 0,
                        kind: SkillEventKind::Collision { hazard },
                    });
                    failure = Some(FailureMode::Collision);
                    break;
                }
            }
        }
        SkillKind::Ibm => {
            let station = StationId::parse(&request.location)
                .ok_or_else(|| SkillError::InvalidRequest(format!("`{}` is not a station", request.location)))?;
            let task = request
                .manipulation
                .ok_or_else(|| SkillError::InvalidRequest("manipulation skill needs a task".into()))?;
            world.begin_manipulation(station)?;
            let due = started_at + timing.manipulation.at(station).draw(&mut rng.timing);
            while world.clock() + 1e-9 < due {
                world.step(timing.dt)?;
            }
            if let crate::world::ManipulationOutcome::UnsafeManipulation { hazards } =
                world.execute_manipulation(task)?
            {
                events.push(SkillEvent {
                    time: world.clock(),
                    tick: 0,
                    kind: SkillEventKind::UnsafeManipulation { hazards },
                });
                failure = Some(FailureMode::UnsafeManipulation);
            }
        }
    }
    Ok(SkillOutcome {
        skill: kind,
        robot_task_id: request.robot_task_id,
        final_action: Action::Proceed,
        actions: Vec::new(),
        halts: 0,
        alerts: Vec::new(),
        consent_waits: Vec::new(),
        started_at,
        duration: world.clock() - started_at,
        completed: failure.is_none(),
        workflow_failure: matches!(failure, Some(FailureMode::Collision | FailureMode::UnsafeManipulation)),
        failure_mode: failure,
        classifier_calls: 0,
        events,
    })
}
