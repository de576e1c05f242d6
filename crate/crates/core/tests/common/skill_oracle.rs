//! The shipped trees against straight-line imperative versions of the two
//! skills. The oracles draw from the same random streams in the same
//! order, so any divergence in control flow shows up as a different
//! outcome.

use prevent_core::decision::{
    decide_manipulation, decide_navigation, voc_triggers_navigation, Action, DecisionInputs, ManipulationPhase,
};
use prevent_core::sensors::{sample_classifier, sample_voc, vision_truth, Models, RngStreams, VisionSample};
use prevent_core::skills::{
    run_skill, AutoConsent, ConsentCommand, ConsentRequest, ConsentSource, FailureMode, NoConsent, RandomDelayConsent,
    ScriptedConsent, SkillKind, SkillOutcome, SkillRequest, Timing,
};
use prevent_core::world::{ManipulationOutcome, MotionState, Point, Region, ScenarioSpec, StationId, World};

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub actions: Vec<Action>,
    pub alerts: usize,
    pub halts: usize,
    pub classifier_calls: usize,
    pub completed: bool,
    pub failure: Option<FailureMode>,
    pub duration: f64,
}

impl From<&SkillOutcome> for Summary {
    fn from(o: &SkillOutcome) -> Self {
        Summary {
            actions: o.actions.clone(),
            alerts: o.alerts.len(),
            halts: o.halts,
            classifier_calls: o.classifier_calls,
            completed: o.completed,
            failure: o.failure_mode,
            duration: o.duration,
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum St {
    Running,
    Success,
    Failure,
}

/// Shared bookkeeping of both oracles.
struct Oracle<'a> {
    world: World,
    models: &'a Models,
    timing: &'a Timing,
    rng: RngStreams,
    id: String,
    actions: Vec<Action>,
    alerts: usize,
    halts: usize,
    classifier_calls: usize,
    failure: Option<FailureMode>,
    last_x2: u32,
    timer: Option<(&'static str, f64)>,
}

/// One trigger and its resolution.
#[derive(Default)]
struct Episode {
    x1: bool,
    x2: u32,
    verdict: Option<Action>,
    mid_x2: Option<u32>,
    alerted: bool,
    asked: Option<f64>,
    consented: bool,
}

impl<'a> Oracle<'a> {
    fn new(world: World, models: &'a Models, timing: &'a Timing, rng: RngStreams, id: &str) -> Self {
        Oracle {
            world,
            models,
            timing,
            rng,
            id: id.to_string(),
            actions: Vec::new(),
            alerts: 0,
            halts: 0,
            classifier_calls: 0,
            failure: None,
            last_x2: 0,
            timer: None,
        }
    }

    fn now(&self) -> f64 {
        self.world.clock()
    }

    fn sniff(&mut self, at: Point) -> u32 {
        let x2 = sample_voc(&self.world, at, &self.models.olfactory, &mut self.rng.voc);
        self.last_x2 = x2;
        x2
    }

    fn look(&mut self, region: Region) -> VisionSample {
        let (truth, subtle) = vision_truth(&self.world, region).unwrap();
        let v = &self.models.vision;
        let s = v.sample_with(truth, subtle, &mut self.rng.vision);
        if s.usable {
            s
        } else {
            v.sample_with(truth, subtle, &mut self.rng.vision)
        }
    }

    fn classify(&mut self, ep: &Episode, region: Region, skill: SkillKind) -> Action {
        let m = self.models;
        let c = sample_classifier(&self.world, region, &m.classifier, &m.labels, &mut self.rng.classifier).unwrap();
        self.classifier_calls += 1;
        let inputs = DecisionInputs {
            x1: ep.x1,
            x2: ep.x2,
            x3: Some(&c),
            t_safe: m.t_safe,
            labels: &m.labels,
        };
        let a = match skill {
            SkillKind::Cin => decide_navigation(&inputs).unwrap(),
            SkillKind::Ibm => decide_manipulation(&inputs, ManipulationPhase::PostVision).unwrap(),
        };
        self.actions.push(a);
        a
    }

    fn timed(&mut self, leaf: &'static str, draw: impl FnOnce(&mut Self) -> f64) -> bool {
        let now = self.now();
        match self.timer {
            Some((l, due)) if l == leaf => {
                if now + 1e-9 >= due {
                    self.timer = None;
                    true
                } else {
                    false
                }
            }
            _ => {
                let d = draw(self);
                self.timer = Some((leaf, now + d));
                false
            }
        }
    }

    fn poll(&mut self, ep: Option<&Episode>, consent: &mut dyn ConsentSource) -> Option<ConsentCommand> {
        let asked = ep.filter(|e| !e.consented)?.asked?;
        let req = ConsentRequest {
            robot_task_id: self.id.clone(),
            requested_at: asked,
            alert: self.alerts.saturating_sub(1),
        };
        let now = self.now();
        consent.poll(&req, now, &mut self.rng.consent)
    }

    /// Alert once, then wait for the operator. `None` means still waiting.
    fn ask(&mut self, ep: &mut Episode, inbox: Option<ConsentCommand>) -> Option<bool> {
        if !ep.alerted {
            ep.alerted = true;
            self.alerts += 1;
        }
        if ep.consented {
            return Some(true);
        }
        let now = self.now();
        let asked = *ep.asked.get_or_insert(now);
        let cmd = match inbox {
            Some(c) => c,
            None if now - asked + 1e-9 >= self.timing.abort_timeout_s => ConsentCommand::Abort,
            None => return None,
        };
        ep.asked = None;
        match cmd {
            ConsentCommand::Continue => {
                ep.consented = true;
                let at = self.world.robot().pose.position;
                let r = self.timing.clearance_radius_m;
                let ids: Vec<String> = self
                    .world
                    .present_hazards()
                    .filter(|h| h.unsafe_ground_truth && h.position.is_some_and(|p| p.distance(at) <= r))
                    .map(|h| h.id.clone())
                    .collect();
                for id in ids {
                    self.world.clear_hazard(&id);
                }
                Some(true)
            }
            ConsentCommand::Abort => {
                self.failure = Some(FailureMode::Abort);
                Some(false)
            }
        }
    }

    fn finish(self, started: f64, status: St) -> Summary {
        Summary {
            actions: self.actions,
            alerts: self.alerts,
            halts: self.halts,
            classifier_calls: self.classifier_calls,
            completed: status == St::Success && self.failure.is_none(),
            failure: self.failure,
            duration: self.world.clock() - started,
        }
    }
}

/// Navigation with continuous inspection, one loop iteration per tick.
fn cin_oracle(
    world: World,
    dest: &str,
    models: &Models,
    timing: &Timing,
    rng: RngStreams,
    consent: &mut dyn ConsentSource,
) -> Summary {
    let mut o = Oracle::new(world, models, timing, rng, "oracle");
    let t0 = o.now();
    let mut seen = o.world.collisions().len();
    let mut started = false;
    let mut next_vision = 0.0;
    let mut vision_flag = false;
    let (mut ack_vision, mut ack_voc) = (false, false);
    let mut episode: Option<Episode> = None;
    let mut stopped = false;
    loop {
        let inbox = o.poll(episode.as_ref(), consent);
        let now = o.now();

        // Drive.
        let mut drive = St::Running;
        if !started && now + 1e-9 >= t0 + timing.cin_startup_s {
            o.world.robot_mut().speed_factor = timing.speed_factor(&mut o.rng.timing);
            o.world.begin_navigation(dest).unwrap();
            started = true;
            next_vision = now;
        }
        if started {
            if o.world.collisions().len() > seen {
                seen = o.world.collisions().len();
                o.failure = Some(FailureMode::Collision);
                drive = St::Failure;
            } else if o.world.robot().motion == MotionState::Idle && o.world.current_node() == Some(dest) {
                drive = St::Success;
            }
        }

        // Monitor.
        if episode.is_none() && o.world.robot().motion == MotionState::Navigating {
            let pos = o.world.robot().pose.position;
            let x2 = o.sniff(pos);
            if now + 1e-9 >= next_vision {
                if next_vision + timing.vision_cycle_s < now {
                    next_vision = now;
                }
                next_vision += timing.vision_cycle_s;
                let s = o.look(models.vision.nav_region());
                if s.usable {
                    vision_flag = s.x1;
                }
            }
            let voc = voc_triggers_navigation(x2, models.t_safe);
            ack_vision &= vision_flag;
            ack_voc &= voc;
            if (vision_flag && !ack_vision) || (voc && !ack_voc) {
                episode = Some(Episode {
                    x1: vision_flag,
                    x2,
                    ..Episode::default()
                });
                stopped = false;
            }
        }
        let monitor = match episode.as_mut() {
            None => St::Success,
            Some(ep) => {
                if !stopped {
                    if o.world.robot().motion == MotionState::Navigating {
                        o.world.halt_robot().unwrap();
                    }
                    o.halts += 1;
                    stopped = true;
                }
                let verdict = match ep.verdict {
                    Some(v) => v,
                    None => {
                        let v = o.classify(ep, Region::NAV_CLASSIFIER, SkillKind::Cin);
                        ep.verdict = Some(v);
                        v
                    }
                };
                let cleared = if verdict == Action::HaltAwaitConsent {
                    o.ask(ep, inbox)
                } else {
                    Some(true)
                };
                match cleared {
                    None => St::Running,
                    Some(false) => St::Failure,
                    Some(true) => {
                        if o.world.robot().motion == MotionState::Halted {
                            o.world.resume_robot().unwrap();
                        }
                        ack_vision = ep.x1;
                        ack_voc = voc_triggers_navigation(ep.x2, models.t_safe);
                        episode = None;
                        St::Success
                    }
                }
            }
        };

        let mut status = if drive == St::Failure || monitor == St::Failure {
            St::Failure
        } else if drive == St::Success && monitor == St::Success {
            St::Success
        } else {
            St::Running
        };
        if status == St::Running && now - t0 >= timing.max_run_s {
            o.failure.get_or_insert(FailureMode::Abort);
            status = St::Failure;
        }
        if status != St::Running {
            return o.finish(t0, status);
        }
        o.world.step(timing.dt).unwrap();
    }
}

/// Inspection before manipulation, one loop iteration per tick.
fn ibm_oracle(
    world: World,
    station: StationId,
    task: prevent_core::world::ManipulationTask,
    models: &Models,
    timing: &Timing,
    rng: RngStreams,
    consent: &mut dyn ConsentSource,
) -> Summary {
    let mut o = Oracle::new(world, models, timing, rng, "oracle");
    let t0 = o.now();
    let mut stage = 0;
    let mut initial: Option<Action> = None;
    let mut vision: Option<bool> = None;
    let mut episode: Option<Episode> = None;
    loop {
        let inbox = o.poll(episode.as_ref(), consent);
        let now = o.now();
        let mut status = St::Running;
        loop {
            match stage {
                0 => {
                    let a = match initial {
                        Some(a) => a,
                        None => {
                            let pos = o.world.robot().pose.position;
                            let x2 = o.sniff(pos);
                            let inputs = DecisionInputs {
                                x1: false,
                                x2,
                                x3: None,
                                t_safe: models.t_safe,
                                labels: &models.labels,
                            };
                            let a = decide_manipulation(&inputs, ManipulationPhase::InitialVoc).unwrap();
                            o.actions.push(a);
                            initial = Some(a);
                            if a != Action::Proceed {
                                episode = Some(Episode {
                                    x2,
                                    verdict: Some(a),
                                    ..Episode::default()
                                });
                                o.halts += 1;
                            }
                            a
                        }
                    };
                    if a != Action::Proceed {
                        match o.ask(episode.as_mut().unwrap(), inbox) {
                            None => break,
                            Some(false) => {
                                status = St::Failure;
                                break;
                            }
                            Some(true) => {}
                        }
                    }
                    stage = 1;
                }
                1 => {
                    let draw = |o: &mut Oracle| timing.calibration_and_check.at(station).draw(&mut o.rng.timing);
                    if !o.timed("calibration", draw) {
                        break;
                    }
                    o.world.arm_move_to_check_pose(station).unwrap();
                    stage = 2;
                }
                2 => {
                    let flag = match vision {
                        Some(f) => f,
                        None => {
                            let s = o.look(Region::CheckView(station));
                            vision = Some(s.x1);
                            if s.x1 {
                                episode = Some(Episode {
                                    x1: true,
                                    x2: o.last_x2,
                                    ..Episode::default()
                                });
                            }
                            s.x1
                        }
                    };
                    if flag {
                        let ep = episode.as_mut().unwrap();
                        let verdict = match ep.verdict {
                            Some(v) => v,
                            None => {
                                let v = o.classify(ep, Region::CheckView(station), SkillKind::Ibm);
                                ep.verdict = Some(v);
                                o.halts += 1;
                                v
                            }
                        };
                        if verdict == Action::HaltAwaitConsent {
                            if ep.mid_x2.is_none() {
                                let draw = |o: &mut Oracle| timing.mid_voc.at(station).draw(&mut o.rng.timing);
                                if !o.timed("mid_voc", draw) {
                                    break;
                                }
                                let grasp = o.world.station(station).unwrap().grasp_frame;
                                let x2 = sample_voc(&o.world, grasp, &models.olfactory, &mut o.rng.voc);
                                episode.as_mut().unwrap().mid_x2 = Some(x2);
                            }
                            match o.ask(episode.as_mut().unwrap(), inbox) {
                                None => break,
                                Some(false) => {
                                    status = St::Failure;
                                    break;
                                }
                                Some(true) => {}
                            }
                        }
                    }
                    stage = 3;
                }
                _ => {
                    let draw = |o: &mut Oracle| {
                        o.world.begin_manipulation(station).unwrap();
                        timing.manipulation.at(station).draw(&mut o.rng.timing)
                    };
                    if !o.timed("manipulation", draw) {
                        break;
                    }
                    status = match o.world.execute_manipulation(task).unwrap() {
                        ManipulationOutcome::Success => St::Success,
                        ManipulationOutcome::UnsafeManipulation { .. } => {
                            o.failure = Some(FailureMode::UnsafeManipulation);
                            St::Failure
                        }
                    };
                    break;
                }
            }
        }
        if status == St::Running && now - t0 >= timing.max_run_s {
            o.failure.get_or_insert(FailureMode::Abort);
            status = St::Failure;
        }
        if status != St::Running {
            return o.finish(t0, status);
        }
        o.world.step(timing.dt).unwrap();
    }
}

pub fn oracle(
    spec: &ScenarioSpec,
    models: &Models,
    timing: &Timing,
    seed: u64,
    consent: &mut dyn ConsentSource,
) -> Summary {
    let world = spec.build_world().unwrap();
    let (kind, req) = SkillRequest::for_task(spec.task, &world, "oracle").unwrap();
    let rng = RngStreams::new(seed);
    match kind {
        SkillKind::Cin => cin_oracle(world, &req.location, models, timing, rng, consent),
        SkillKind::Ibm => {
            let station = spec.task.station();
            ibm_oracle(world, station, req.manipulation.unwrap(), models, timing, rng, consent)
        }
    }
}

pub fn tree(
    spec: &ScenarioSpec,
    models: &Models,
    timing: &Timing,
    seed: u64,
    consent: &mut dyn ConsentSource,
) -> Summary {
    let mut world = spec.build_world().unwrap();
    let (kind, req) = SkillRequest::for_task(spec.task, &world, "oracle").unwrap();
    let mut rng = RngStreams::new(seed);
    let out = run_skill(kind, req, &mut world, models, timing, &mut rng, consent).unwrap();
    Summary::from(&out)
}

/// Runs the tree and the oracle on the same inputs and reports the first
/// difference.
pub fn compare(
    spec: &ScenarioSpec,
    models: &Models,
    timing: &Timing,
    seed: u64,
    make: impl Fn() -> Box<dyn ConsentSource>,
) -> Result<(), String> {
    let a = tree(spec, models, timing, seed, make().as_mut());
    let b = oracle(spec, models, timing, seed, make().as_mut());
    let same = a.actions == b.actions
        && a.alerts == b.alerts
        && a.completed == b.completed
        && a.halts == b.halts
        && a.classifier_calls == b.classifier_calls
        && a.failure == b.failure
        && (a.duration - b.duration).abs() < 1e-6;
    if same {
        Ok(())
    } else {
        Err(format!("{} seed {seed}: tree {a:?} vs oracle {b:?}", spec.id))
    }
}

pub fn scenarios() -> Vec<ScenarioSpec> {
    ScenarioSpec::builtin_ids()
        .map(|id| ScenarioSpec::builtin(id).unwrap())
        .collect()
}

/// Every shipped scenario under stochastic perception and operator
/// delays, then noise-free with prompt, missing and aborting operators.
/// Returns the number of comparisons.
pub fn check_all(seeds: u64) -> Result<usize, String> {
    let mut n = 0;
    for spec in scenarios() {
        let models = Models::for_task(spec.task).unwrap();
        for seed in 0..seeds {
            compare(&spec, &models, &Timing::default(), seed, || {
                Box::new(RandomDelayConsent::new(60.0, 300.0))
            })?;
            n += 1;
        }
        let exact = Models::exact();
        let timing = Timing::deterministic();
        compare(&spec, &exact, &timing, 0, || Box::new(AutoConsent { delay_s: 1.0 }))?;
        n += 1;
        if spec.has_unsafe_hazard() {
            compare(&spec, &exact, &timing, 3, || Box::new(NoConsent))?;
            compare(&spec, &exact, &timing, 3, || {
                Box::new(ScriptedConsent::new([(4.0, ConsentCommand::Abort)]))
            })?;
            n += 2;
        }
    }
    Ok(n)
}
