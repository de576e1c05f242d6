use super::*;
use crate::decision::Action;
use crate::dsl::validate;
use crate::sensors::{Models, RngStreams};
use crate::world::{ScenarioSpec, TaskRef, World};

struct Setup {
    kind: SkillKind,
    request: SkillRequest,
    world: World,
}

fn setup(id: &str) -> Setup {
    let spec = ScenarioSpec::builtin(id).unwrap();
    let world = spec.build_world().unwrap();
    let (kind, request) = SkillRequest::for_task(spec.task, &world, format!("{id}-1")).unwrap();
    Setup { kind, request, world }
}

fn run_exact(id: &str, consent: &mut dyn ConsentSource) -> SkillOutcome {
    let Setup {
        kind,
        request,
        mut world,
    } = setup(id);
    let mut rng = RngStreams::new(1);
    run_skill(
        kind,
        request,
        &mut world,
        &Models::exact(),
        &Timing::deterministic(),
        &mut rng,
        consent,
    )
    .unwrap()
}

fn kinds(o: &SkillOutcome) -> Vec<&'static str> {
    o.events
        .iter()
        .map(|e| match e.kind {
            SkillEventKind::Trigger { .. } => "trigger",
            SkillEventKind::Classified { .. } => "classified",
            SkillEventKind::Decision { .. } => "decision",
            SkillEventKind::MidVoc { .. } => "mid_voc",
            SkillEventKind::Halted => "halted",
            SkillEventKind::AlertRaised { .. } => "alert",
            SkillEventKind::ConsentReceived { .. } => "consent",
            SkillEventKind::Resumed => "resumed",
            SkillEventKind::Collision { .. } => "collision",
            SkillEventKind::UnsafeManipulation { .. } => "unsafe_manipulation",
        })
        .collect()
}

#[test]
fn shipped_trees_bind_every_leaf() {
    assert!(validate(&build_cin_tree(), &cin_registry()).is_empty());
    assert!(validate(&build_ibm_tree(), &ibm_registry()).is_empty());
    let doc = build_cin_tree();
    let mut cin = doc.root.leaf_names();
    cin.sort();
    let mut expected = CIN_LEAVES.to_vec();
    expected.sort();
    assert_eq!(cin, expected);
}

#[test]
fn clean_navigation_takes_startup_plus_travel() {
    let o = run_exact("T1_NH", &mut NoConsent);
    assert!(o.completed);
    assert_eq!(o.halts, 0);
    assert_eq!(o.classifier_calls, 0);
    assert!((o.duration - 128.2).abs() < 1e-6, "{}", o.duration);
    assert_eq!(o.final_action, Action::Proceed);
}

#[test]
fn clean_manipulation_durations() {
    let o = run_exact("T2_NH", &mut NoConsent);
    assert!(o.completed && o.alerts.is_empty());
    assert!((o.duration - 151.0).abs() < 1e-6, "{}", o.duration);
    let o = run_exact("T3_NH", &mut NoConsent);
    assert!(o.completed);
    assert!((o.duration - 211.6).abs() < 1e-6, "{}", o.duration);
}

#[test]
fn off_path_spill_resumes_without_consent() {
    let o = run_exact("S1", &mut NoConsent);
    assert_eq!(o.final_action, Action::HaltAutoResume);
    assert!(o.consent_waits.is_empty());
    assert!(o.halts >= 1);
    assert!(o.completed);
}

#[test]
fn covered_spill_is_caught_by_voc() {
    let o = run_exact("S2", &mut AutoConsent { delay_s: 5.0 });
    assert_eq!(o.final_action, Action::HaltAwaitConsent);
    let trigger = o
        .events
        .iter()
        .find_map(|e| match e.kind {
            SkillEventKind::Trigger { x1, x2 } => Some((x1, x2)),
            _ => None,
        })
        .unwrap();
    assert_eq!(trigger.0, 0);
    assert!(f64::from(trigger.1) > 2.5);
    assert_eq!(o.alerts[0].x3.as_ref().unwrap().label, "spillage");
    assert_eq!(o.consent_waits.len(), 1);
    let (a, b) = o.consent_waits[0];
    assert!((b - a - 5.0).abs() < 1e-6);
    assert!(o.completed && !o.workflow_failure);
    assert!((o.duration - 133.2).abs() < 1e-6, "{}", o.duration);
}

#[test]
fn sudden_glove_is_caught_by_vision() {
    let o = run_exact("S3", &mut AutoConsent { delay_s: 5.0 });
    assert_eq!(o.final_action, Action::HaltAwaitConsent);
    assert_eq!(o.alerts.len(), 1);
    assert_eq!(o.alerts[0].x1, 1);
    assert_eq!(o.alerts[0].x3.as_ref().unwrap().label, "contaminated_glove");
    let k = kinds(&o);
    let pos = |s: &str| k.iter().position(|x| *x == s).unwrap();
    assert!(pos("halted") < pos("alert") && pos("alert") < pos("consent") && pos("consent") < pos("resumed"));
    assert!(o.completed);
}

#[test]
fn spill_away_from_target_never_asks() {
    let o = run_exact("S4", &mut NoConsent);
    assert_ne!(o.final_action, Action::HaltAwaitConsent);
    assert!(o.completed);
}

#[test]
fn obstruction_waits_then_completes_on_continue() {
    let o = run_exact("S5", &mut AutoConsent { delay_s: 30.0 });
    assert_eq!(o.final_action, Action::HaltAwaitConsent);
    assert!(o.completed && !o.workflow_failure);
    assert_eq!(kinds(&o).iter().filter(|k| **k == "mid_voc").count(), 1);
}

#[test]
fn unanswered_consent_aborts_at_timeout() {
    let o = run_exact("S5", &mut NoConsent);
    assert!(!o.completed && !o.workflow_failure);
    assert_eq!(o.failure_mode, Some(FailureMode::Abort));
    let (a, b) = o.consent_waits[0];
    assert!((b - a - 600.0).abs() < 1e-6);
}

#[test]
fn uncapped_vial_probes_before_alerting() {
    let o = run_exact("S6", &mut AutoConsent { delay_s: 1.0 });
    let k = kinds(&o);
    let mid = k.iter().position(|x| *x == "mid_voc").unwrap();
    let alert = k.iter().position(|x| *x == "alert").unwrap();
    assert!(mid < alert);
    assert!(o.alerts[0].mid_x2.unwrap() >= 3);
    assert_eq!(o.alerts[0].x3.as_ref().unwrap().label, "capping_failure");
}

#[test]
fn classifier_only_after_a_trigger() {
    for id in ScenarioSpec::builtin_ids() {
        let o = run_exact(id, &mut AutoConsent { delay_s: 2.0 });
        let mut armed = false;
        for e in &o.events {
            match e.kind {
                SkillEventKind::Trigger { .. } => armed = true,
                SkillEventKind::Classified { .. } => {
                    assert!(armed, "{id}: classifier without trigger");
                    armed = false;
                }
                _ => {}
            }
        }
    }
}

#[test]
fn consent_protocol_errors() {
    let Setup { kind, request, world } = setup("S5");
    let mut run = SkillRun::new(
        kind,
        request,
        world,
        Models::exact(),
        Timing::deterministic(),
        RngStreams::new(3),
    )
    .unwrap();
    assert!(matches!(
        run.deliver_consent("S5-1", ConsentCommand::Continue),
        Err(SkillError::NoPendingConsent(_))
    ));
    while run.pending_consent().is_none() {
        run.advance().unwrap();
    }
    assert!(matches!(
        run.deliver_consent("other", ConsentCommand::Continue),
        Err(SkillError::UnknownTask(_))
    ));
    run.deliver_consent("S5-1", ConsentCommand::Continue).unwrap();
    assert!(matches!(
        run.deliver_consent("S5-1", ConsentCommand::Continue),
        Err(SkillError::NoPendingConsent(_))
    ));
    run.advance().unwrap();
    let resumed = run
        .events_since(0)
        .iter()
        .filter(|e| e.kind == SkillEventKind::Resumed)
        .count();
    assert_eq!(resumed, 1);
}

#[test]
fn abort_command_ends_the_run() {
    let mut script = ScriptedConsent::new([(3.0, ConsentCommand::Abort)]);
    let o = run_exact("T1_OH", &mut script);
    assert_eq!(o.failure_mode, Some(FailureMode::Abort));
    assert!(!o.completed);
}

fn nse(id: &str) -> SkillOutcome {
    let Setup {
        kind,
        request,
        mut world,
    } = setup(id);
    run_nse(
        kind,
        request,
        &mut world,
        &Timing::deterministic(),
        &mut RngStreams::new(1),
    )
    .unwrap()
}

#[test]
fn unmonitored_runs() {
    for (id, d) in [("T1_NH", 119.1), ("T2_NH", 131.0), ("T3_NH", 134.9)] {
        let o = nse(id);
        assert!(o.completed);
        assert!((o.duration - d).abs() < 1e-6, "{id} {}", o.duration);
    }
    assert_eq!(nse("T1_OH").failure_mode, Some(FailureMode::Collision));
    assert_eq!(nse("T1_LSH").failure_mode, Some(FailureMode::Collision));
    assert_eq!(nse("T2_OH").failure_mode, Some(FailureMode::UnsafeManipulation));
    assert_eq!(nse("T3_LSH").failure_mode, Some(FailureMode::UnsafeManipulation));
}

#[test]
fn skilled_hazard_runs_never_fail_the_workflow() {
    for task in TaskRef::ALL {
        for kind in ["OH", "LSH"] {
            let id = format!("{}_{kind}", task.name());
            let o = run_exact(&id, &mut AutoConsent { delay_s: 60.0 });
            assert!(o.completed, "{id}");
            assert_eq!(o.final_action, Action::HaltAwaitConsent, "{id}");
        }
    }
}

#[test]
fn stochastic_runs_are_seed_deterministic() {
    let go = |seed| {
        let Setup {
            kind,
            request,
            mut world,
        } = setup("S3");
        let models = Models::for_task(TaskRef::T1).unwrap();
        let mut rng = RngStreams::new(seed);
        let mut consent = RandomDelayConsent::default();
        run_skill(
            kind,
            request,
            &mut world,
            &models,
            &Timing::default(),
            &mut rng,
            &mut consent,
        )
        .unwrap()
    };
    assert_eq!(go(7), go(7));
}
