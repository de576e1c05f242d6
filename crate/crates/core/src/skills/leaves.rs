use crate::bt::{LeafCall, LeafRegistry, NodeStatus};
use crate::decision::{
    decide_manipulation, decide_navigation, voc_triggers_navigation, Action, DecisionInputs, ManipulationPhase,
};
use crate::sensors::{sample_classifier, sample_voc, vision_truth, VisionSample};
use crate::world::{ArmState, ManipulationOutcome, ManipulationTask, MotionState, Region, WorldError};

use super::consent::{ConsentCommand, ConsentRequest};
use super::context::{Episode, SkillContext};
use super::{AlertPayload, FailureMode, SkillError, SkillEventKind, SkillKind};

use NodeStatus::{Failure, Running, Success};

pub const CIN_LEAVES: [&str; 7] = [
    "StartToNode",
    "NoHazardDetected",
    "StopRobot",
    "HazardClassifiedSafe",
    "AlertUser",
    "GetConsentToContinue",
    "ResumeNavigation",
];

pub const IBM_LEAVES: [&str; 8] = [
    "InitialVocOk",
    "CalibrationAndMoveCheck",
    "VisionBinaryClear",
    "HazardClassifiedSafe",
    "MidVocMonitor",
    "AlertUser",
    "GetConsentToContinue",
    "ExecuteManipulation",
];

type LeafFn = fn(&mut SkillContext, &LeafCall<'_>) -> NodeStatus;

fn registry(bindings: &[(&str, LeafFn)]) -> LeafRegistry<SkillContext> {
    let mut reg = LeafRegistry::new();
    for &(name, f) in bindings {
        reg.register_leaf(name, f).expect("leaf names are distinct");
    }
    reg
}

pub fn cin_registry() -> LeafRegistry<SkillContext> {
    registry(&[
        ("StartToNode", start_to_node),
        ("NoHazardDetected", no_hazard_detected),
        ("StopRobot", stop_robot),
        ("HazardClassifiedSafe", hazard_classified_safe),
        ("AlertUser", alert_user),
        ("GetConsentToContinue", get_consent_to_continue),
        ("ResumeNavigation", resume_navigation),
    ])
}

pub fn ibm_registry() -> LeafRegistry<SkillContext> {
    registry(&[
        ("InitialVocOk", initial_voc_ok),
        ("CalibrationAndMoveCheck", calibration_and_move_check),
        ("VisionBinaryClear", vision_binary_clear),
        ("HazardClassifiedSafe", hazard_classified_safe),
        ("MidVocMonitor", mid_voc_monitor),
        ("AlertUser", alert_user),
        ("GetConsentToContinue", get_consent_to_continue),
        ("ExecuteManipulation", execute_manipulation),
    ])
}

pub fn registry_for(skill: SkillKind) -> LeafRegistry<SkillContext> {
    match skill {
        SkillKind::Cin => cin_registry(),
        SkillKind::Ibm => ibm_registry(),
    }
}

fn status(ok: bool) -> NodeStatus {
    if ok {
        Success
    } else {
        Failure
    }
}

/// One camera frame; an unusable (blurred) frame is retaken once.
fn look(ctx: &mut SkillContext, region: Region) -> Result<VisionSample, WorldError> {
    let (truth, subtle) = vision_truth(&ctx.world, region)?;
    let mut s = ctx.models.vision.sample_with(truth, subtle, &mut ctx.rng.vision);
    if !s.usable {
        s = ctx.models.vision.sample_with(truth, subtle, &mut ctx.rng.vision);
    }
    Ok(s)
}

fn sniff_at(ctx: &mut SkillContext, position: crate::world::Point) -> u32 {
    let x2 = sample_voc(&ctx.world, position, &ctx.models.olfactory, &mut ctx.rng.voc);
    ctx.frame.x2 = x2;
    ctx.frame.timestamp = ctx.now();
    x2
}

fn begin_episode(ctx: &mut SkillContext) {
    ctx.frame.x3 = None;
    ctx.episode = Some(Episode {
        frame: ctx.frame.clone(),
        ..Episode::default()
    });
    let (x1, x2) = (ctx.frame.x1, ctx.frame.x2);
    ctx.emit(SkillEventKind::Trigger { x1, x2 });
}

// ---- navigation ----

fn start_to_node(ctx: &mut SkillContext, _: &LeafCall<'_>) -> NodeStatus {
    let now = ctx.now();
    if !ctx.started {
        if now + 1e-9 < ctx.started_at + ctx.timing.cin_startup_s {
            return Running;
        }
        let factor = ctx.timing.speed_factor(&mut ctx.rng.timing);
        ctx.world.robot_mut().speed_factor = factor;
        let dest = ctx.request.location.clone();
        if let Err(e) = ctx.world.begin_navigation(&dest) {
            ctx.fail(e);
            return Failure;
        }
        ctx.started = true;
        ctx.next_vision = now;
    }
    let hits = ctx.world.collisions()[ctx.collisions_seen..].to_vec();
    if !hits.is_empty() {
        ctx.collisions_seen += hits.len();
        for hazard in hits {
            ctx.emit(SkillEventKind::Collision { hazard });
        }
        ctx.failure = Some(FailureMode::Collision);
        return Failure;
    }
    let arrived = ctx.world.robot().motion == MotionState::Idle
        && ctx.world.current_node() == Some(ctx.request.location.as_str());
    if arrived {
        Success
    } else {
        Running
    }
}

fn no_hazard_detected(ctx: &mut SkillContext, _: &LeafCall<'_>) -> NodeStatus {
    if ctx.latched {
        return Failure;
    }
    if ctx.world.robot().motion != MotionState::Navigating {
        return Success;
    }
    let now = ctx.now();
    let position = ctx.world.robot().pose.position;
    let x2 = sniff_at(ctx, position);
    if now + 1e-9 >= ctx.next_vision {
        let cycle = ctx.timing.vision_cycle_s;
        if ctx.next_vision + cycle < now {
            ctx.next_vision = now;
        }
        ctx.next_vision += cycle;
        let region = ctx.models.vision.nav_region();
        match look(ctx, region) {
            Ok(s) => {
                if s.usable {
                    ctx.vision_flag = s.x1;
                }
                ctx.frame.quality = s.quality;
            }
            Err(e) => {
                ctx.fail(e);
                return Failure;
            }
        }
    }
    ctx.frame.x1 = u8::from(ctx.vision_flag);
    let vision = ctx.vision_flag;
    let voc = voc_triggers_navigation(x2, ctx.models.t_safe);
    // An acknowledged modality re-arms once it reads clear again.
    ctx.ack_vision &= vision;
    ctx.ack_voc &= voc;
    let rising = (vision && !ctx.ack_vision) || (voc && !ctx.ack_voc);
    if !rising {
        return Success;
    }
    ctx.latched = true;
    begin_episode(ctx);
    Failure
}

fn stop_robot(ctx: &mut SkillContext, _: &LeafCall<'_>) -> NodeStatus {
    if ctx.world.robot().motion == MotionState::Navigating {
        if let Err(e) = ctx.world.halt_robot() {
            ctx.fail(e);
            return Failure;
        }
    }
    ctx.emit(SkillEventKind::Halted);
    Success
}

fn resume_navigation(ctx: &mut SkillContext, _: &LeafCall<'_>) -> NodeStatus {
    if ctx.world.robot().motion == MotionState::Halted {
        if let Err(e) = ctx.world.resume_robot() {
            ctx.fail(e);
            return Failure;
        }
    }
    if let Some(ep) = ctx.episode.take() {
        ctx.ack_vision = ep.frame.x1 == 1;
        ctx.ack_voc = voc_triggers_navigation(ep.frame.x2, ctx.models.t_safe);
    }
    ctx.latched = false;
    ctx.emit(SkillEventKind::Resumed);
    Success
}

// ---- shared ----

fn hazard_classified_safe(ctx: &mut SkillContext, _: &LeafCall<'_>) -> NodeStatus {
    let Some(ep) = ctx.episode.as_ref() else {
        ctx.fail(SkillError::InvalidRequest("classification without a trigger".into()));
        return Failure;
    };
    if let Some(v) = ep.verdict {
        return status(v != Action::HaltAwaitConsent);
    }
    let (x1, x2) = (ep.frame.x1 == 1, ep.frame.x2);
    let region = match ctx.skill {
        SkillKind::Cin => Region::NAV_CLASSIFIER,
        SkillKind::Ibm => Region::CheckView(ctx.station()),
    };
    let c = match sample_classifier(
        &ctx.world,
        region,
        &ctx.models.classifier,
        &ctx.models.labels,
        &mut ctx.rng.classifier,
    ) {
        Ok(c) => c,
        Err(e) => {
            ctx.fail(e);
            return Failure;
        }
    };
    ctx.classifier_calls += 1;
    ctx.emit(SkillEventKind::Classified {
        label: c.label.clone(),
        score: c.score,
    });
    let inputs = DecisionInputs {
        x1,
        x2,
        x3: Some(&c),
        t_safe: ctx.models.t_safe,
        labels: &ctx.models.labels,
    };
    let verdict = match ctx.skill {
        SkillKind::Cin => decide_navigation(&inputs),
        SkillKind::Ibm => decide_manipulation(&inputs, ManipulationPhase::PostVision),
    };
    let action = match verdict {
        Ok(a) => a,
        Err(e) => {
            ctx.fail(e);
            return Failure;
        }
    };
    ctx.frame.x3 = Some(c.clone());
    if let Some(ep) = ctx.episode.as_mut() {
        ep.frame.x3 = Some(c);
        ep.verdict = Some(action);
    }
    ctx.decide(action);
    if ctx.skill == SkillKind::Ibm {
        // The arm is already holding still at the check pose.
        ctx.emit(SkillEventKind::Halted);
        if action == Action::HaltAutoResume {
            ctx.emit(SkillEventKind::Resumed);
        }
    }
    status(action != Action::HaltAwaitConsent)
}

fn summary(ep: &Episode, t_safe: f64) -> String {
    let mut parts = Vec::new();
    if ep.frame.x1 == 1 {
        parts.push("camera flagged a hazard".to_string());
    }
    if f64::from(ep.frame.x2) >= t_safe {
        parts.push(format!("VOC {} PPM (threshold {t_safe})", ep.frame.x2));
    }
    if let Some(c) = &ep.frame.x3 {
        parts.push(format!("classified as {} ({:.2})", c.label, c.score));
    }
    if let Some(m) = ep.mid_x2 {
        parts.push(format!("probe VOC {m} PPM at the grasp frame"));
    }
    parts.join("; ")
}

fn alert_user(ctx: &mut SkillContext, _: &LeafCall<'_>) -> NodeStatus {
    let t_safe = ctx.models.t_safe;
    let snapshot = ctx.snapshot_descriptor();
    let now = ctx.now();
    let Some(ep) = ctx.episode.as_mut() else {
        ctx.fail(SkillError::InvalidRequest("alert without a trigger".into()));
        return Failure;
    };
    if ep.alerted {
        return Success;
    }
    ep.alerted = true;
    let alert = AlertPayload {
        x1: ep.frame.x1,
        x2: ep.frame.x2,
        x3: ep.frame.x3.clone(),
        mid_x2: ep.mid_x2,
        snapshot,
        summary: summary(ep, t_safe),
        timestamp: now,
    };
    ctx.alerts.push(alert.clone());
    ctx.emit(SkillEventKind::AlertRaised { alert });
    Success
}

/// The operator removes unsafe hazards near the robot before answering.
fn clear_near_robot(ctx: &mut SkillContext) {
    let at = ctx.world.robot().pose.position;
    let r = ctx.timing.clearance_radius_m;
    let ids: Vec<String> = ctx
        .world
        .present_hazards()
        .filter(|h| h.unsafe_ground_truth && h.position.is_some_and(|p| p.distance(at) <= r))
        .map(|h| h.id.clone())
        .collect();
    for id in ids {
        ctx.world.clear_hazard(&id);
    }
}

fn get_consent_to_continue(ctx: &mut SkillContext, _: &LeafCall<'_>) -> NodeStatus {
    let now = ctx.now();
    let robot_task_id = ctx.request.robot_task_id.clone();
    let alert = ctx.alerts.len().saturating_sub(1);
    let Some(ep) = ctx.episode.as_mut() else {
        ctx.fail(SkillError::InvalidRequest("consent without a trigger".into()));
        return Failure;
    };
    if ep.consented {
        return Success;
    }
    let request = ep.consent.get_or_insert(ConsentRequest {
        robot_task_id,
        requested_at: now,
        alert,
    });
    let asked = request.requested_at;
    let (command, received) = match ctx.inbox.take() {
        Some(c) => (c, true),
        None if now - asked + 1e-9 >= ctx.timing.abort_timeout_s => (ConsentCommand::Abort, false),
        None => return Running,
    };
    ep.consent = None;
    ctx.waits.push((asked, now));
    if received {
        ctx.emit(SkillEventKind::ConsentReceived { command });
    }
    match command {
        ConsentCommand::Continue => {
            if let Some(ep) = ctx.episode.as_mut() {
                ep.consented = true;
            }
            clear_near_robot(ctx);
            if ctx.skill == SkillKind::Ibm {
                ctx.emit(SkillEventKind::Resumed);
            }
            Success
        }
        ConsentCommand::Abort => {
            ctx.failure = Some(FailureMode::Abort);
            Failure
        }
    }
}

// ---- manipulation ----

fn initial_voc_ok(ctx: &mut SkillContext, _: &LeafCall<'_>) -> NodeStatus {
    if let Some(v) = ctx.initial_voc {
        return status(v == Action::Proceed);
    }
    let position = ctx.world.robot().pose.position;
    let x2 = sniff_at(ctx, position);
    ctx.frame.x1 = 0;
    let inputs = DecisionInputs {
        x1: false,
        x2,
        x3: None,
        t_safe: ctx.models.t_safe,
        labels: &ctx.models.labels,
    };
    let action = match decide_manipulation(&inputs, ManipulationPhase::InitialVoc) {
        Ok(a) => a,
        Err(e) => {
            ctx.fail(e);
            return Failure;
        }
    };
    ctx.initial_voc = Some(action);
    ctx.decide(action);
    if action == Action::Proceed {
        return Success;
    }
    begin_episode(ctx);
    if let Some(ep) = ctx.episode.as_mut() {
        ep.verdict = Some(action);
    }
    ctx.emit(SkillEventKind::Halted);
    Failure
}

fn calibration_and_move_check(ctx: &mut SkillContext, _: &LeafCall<'_>) -> NodeStatus {
    let station = ctx.station();
    if !ctx.timed("CalibrationAndMoveCheck", |c| {
        c.timing.calibration_and_check.at(station).draw(&mut c.rng.timing)
    }) {
        return Running;
    }
    match ctx.world.arm_move_to_check_pose(station) {
        Ok(()) => Success,
        Err(e) => {
            ctx.fail(e);
            Failure
        }
    }
}

fn vision_binary_clear(ctx: &mut SkillContext, _: &LeafCall<'_>) -> NodeStatus {
    if let Some(flag) = ctx.vision_check {
        return status(!flag);
    }
    let region = Region::CheckView(ctx.station());
    let s = match look(ctx, region) {
        Ok(s) => s,
        Err(e) => {
            ctx.fail(e);
            return Failure;
        }
    };
    ctx.frame.x1 = u8::from(s.x1);
    ctx.frame.quality = s.quality;
    ctx.frame.timestamp = ctx.now();
    ctx.vision_check = Some(s.x1);
    if !s.x1 {
        return Success;
    }
    begin_episode(ctx);
    Failure
}

fn mid_voc_monitor(ctx: &mut SkillContext, _: &LeafCall<'_>) -> NodeStatus {
    if ctx.episode.as_ref().is_some_and(|e| e.mid_x2.is_some()) {
        return Success;
    }
    let station = ctx.station();
    if ctx.world.robot().arm != ArmState::AtCheckPose {
        ctx.fail(WorldError::StateViolation(
            "probe measurement needs the arm at the check pose".into(),
        ));
        return Failure;
    }
    if !ctx.timed("MidVocMonitor", |c| {
        c.timing.mid_voc.at(station).draw(&mut c.rng.timing)
    }) {
        return Running;
    }
    let grasp = match ctx.world.station(station) {
        Ok(s) => s.grasp_frame,
        Err(e) => {
            ctx.fail(e);
            return Failure;
        }
    };
    let x2 = sample_voc(&ctx.world, grasp, &ctx.models.olfactory, &mut ctx.rng.voc);
    if let Some(ep) = ctx.episode.as_mut() {
        ep.mid_x2 = Some(x2);
    }
    ctx.emit(SkillEventKind::MidVoc { x2 });
    Success
}

fn execute_manipulation(ctx: &mut SkillContext, _: &LeafCall<'_>) -> NodeStatus {
    let station = ctx.station();
    // Read back from the blackboard: the task survives any consent wait.
    let Some(task) = ctx.bb.get::<Option<ManipulationTask>>("manipulation").flatten() else {
        ctx.fail(SkillError::InvalidRequest("no manipulation on the blackboard".into()));
        return Failure;
    };
    let done = ctx.timed("ExecuteManipulation", |c| {
        if let Err(e) = c.world.begin_manipulation(station) {
            c.fail(e);
        }
        c.timing.manipulation.at(station).draw(&mut c.rng.timing)
    });
    if ctx.error.is_some() {
        return Failure;
    }
    if !done {
        return Running;
    }
    match ctx.world.execute_manipulation(task) {
        Ok(ManipulationOutcome::Success) => Success,
        Ok(ManipulationOutcome::UnsafeManipulation { hazards }) => {
            ctx.emit(SkillEventKind::UnsafeManipulation { hazards });
            ctx.failure = Some(FailureMode::UnsafeManipulation);
            Failure
        }
        Err(e) => {
            ctx.fail(e);
            Failure
        }
    }
}
