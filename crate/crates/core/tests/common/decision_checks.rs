//! Decision rules written out case by case, and the trigger hierarchy
//! read back from skill traces.

use std::collections::HashMap;

use prevent_core::bt::{NodeStatus, TreeNode};
use prevent_core::decision::{
    decide_manipulation, decide_navigation, Action, Classification, DecisionError, DecisionInputs, ManipulationPhase,
};
use prevent_core::sensors::{LabelSet, Models, RngStreams};
use prevent_core::skills::{RandomDelayConsent, SkillEventKind, SkillKind, SkillRequest, SkillRun, Timing};
use prevent_core::world::ScenarioSpec;

pub const T: f64 = 2.5;

pub fn inputs<'a>(x1: bool, x2: u32, x3: Option<&'a Classification>, labels: &'a LabelSet) -> DecisionInputs<'a> {
    DecisionInputs {
        x1,
        x2,
        x3,
        t_safe: T,
        labels,
    }
}

/// Written out case by case from the rules.
fn expected_nav(x1: bool, x2: u32, label: Option<&str>, labels: &LabelSet) -> Result<Action, DecisionError> {
    let voc = x2 >= 3; // integer readings against 2.5
    match (x1 || voc, label) {
        (false, None) => Ok(Action::Proceed),
        (false, Some(_)) => Err(DecisionError::SpuriousSecondary),
        (true, None) => Err(DecisionError::MissingSecondary),
        (true, Some(l)) if labels.is_safe(l) => Ok(Action::HaltAutoResume),
        (true, Some(_)) => Ok(Action::HaltAwaitConsent),
    }
}

fn expected_post_vision(x1: bool, label: Option<&str>, labels: &LabelSet) -> Result<Action, DecisionError> {
    match (x1, label) {
        (false, None) => Ok(Action::Proceed),
        (false, Some(_)) => Err(DecisionError::SpuriousSecondary),
        (true, None) => Err(DecisionError::MissingSecondary),
        (true, Some(l)) if labels.is_safe(l) => Ok(Action::HaltAutoResume),
        (true, Some(_)) => Ok(Action::HaltAwaitConsent),
    }
}

/// Every combination of vision flag, small VOC readings and label.
pub fn truth_table() {
    let labels = LabelSet::default();
    let mut choices: Vec<Option<&str>> = vec![None];
    choices.extend(labels.labels().iter().map(|l| Some(l.as_str())));
    for x1 in [false, true] {
        for x2 in 0..=6 {
            for label in &choices {
                let c = label.map(|l| Classification::new(l, 0.9));
                let i = inputs(x1, x2, c.as_ref(), &labels);
                assert_eq!(
                    decide_navigation(&i),
                    expected_nav(x1, x2, *label, &labels),
                    "{x1} {x2} {label:?}"
                );
                assert_eq!(
                    decide_manipulation(&i, ManipulationPhase::PostVision),
                    expected_post_vision(x1, *label, &labels),
                    "{x1} {x2} {label:?}"
                );
                let initial = decide_manipulation(&i, ManipulationPhase::InitialVoc);
                match (x1, label) {
                    (false, None) => {
                        let want = if x2 <= 2 {
                            Action::Proceed
                        } else {
                            Action::HaltAwaitConsent
                        };
                        assert_eq!(initial, Ok(want));
                    }
                    _ => assert!(matches!(initial, Err(DecisionError::PhaseViolation(_)))),
                }
            }
        }
    }
}

pub fn label_index() -> std::ops::Range<usize> {
    0..LabelSet::default().labels().len()
}

/// Classify only when triggered, as the skills do.
pub fn nav_action(x1: bool, x2: u32, label: usize, labels: &LabelSet) -> Action {
    let triggered = x1 || f64::from(x2) > T;
    let c = triggered.then(|| Classification::new(labels.labels()[label].clone(), 0.9));
    decide_navigation(&inputs(x1, x2, c.as_ref(), labels)).unwrap()
}

pub fn severity_rank(labels: &LabelSet, i: usize) -> u8 {
    u8::from(labels.is_unsafe(&labels.labels()[i]))
}

/// The classifier leaf is only ever ticked in a tick where a primary
/// check failed, or while its episode is still open.
pub fn hierarchy(seeds: u64) {
    for id in ScenarioSpec::builtin_ids() {
        let spec = ScenarioSpec::builtin(id).unwrap();
        let models = Models::for_task(spec.task).unwrap();
        for seed in 0..seeds {
            let world = spec.build_world().unwrap();
            let (kind, req) = SkillRequest::for_task(spec.task, &world, "r").unwrap();
            let mut run = SkillRun::new(
                kind,
                req,
                world,
                models.clone(),
                Timing::default(),
                RngStreams::new(seed),
            )
            .unwrap();
            run.run_to_end(&mut RandomDelayConsent::default()).unwrap();
            let gate = match kind {
                SkillKind::Cin => "condition:NoHazardDetected",
                SkillKind::Ibm => "condition:VisionBinaryClear",
            };
            let labels = label_paths(run.tree().root());
            let mut open = false;
            for trace in run.tree().traces() {
                for (path, status) in &trace.visits {
                    match labels[path].as_str() {
                        l if l == gate => open = *status == NodeStatus::Failure,
                        "condition:HazardClassifiedSafe" => assert!(open, "{id} seed {seed} tick {}", trace.tick),
                        _ => {}
                    }
                }
            }
            let outcome = run.outcome();
            let triggers = outcome
                .events
                .iter()
                .filter(|e| matches!(e.kind, SkillEventKind::Trigger { .. }))
                .count();
            assert!(outcome.classifier_calls <= triggers, "{id} seed {seed}");
            let mut armed = false;
            for e in &outcome.events {
                match e.kind {
                    SkillEventKind::Trigger { .. } => armed = true,
                    SkillEventKind::Classified { .. } => {
                        assert!(armed, "{id} seed {seed}");
                        armed = false;
                    }
                    _ => {}
                }
            }
        }
    }
}

fn label_paths(root: &TreeNode) -> HashMap<String, String> {
    fn go(node: &TreeNode, path: String, out: &mut HashMap<String, String>) {
        out.insert(path.clone(), node.label());
        for (i, c) in node.children.iter().enumerate() {
            go(c, format!("{path}{i}/"), out);
        }
    }
    let mut out = HashMap::new();
    go(root, "/".into(), &mut out);
    out
}
