use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decision::{voc_clears_manipulation, voc_triggers_navigation};
use crate::sensors::{
    sample_voc, ClassifierMode, LabelSet, ModelParams, OlfactoryModel, OLFACTORY, RESNET, VIT_FT, VIT_ZS,
};
use crate::world::{
    Chemical, Containment, HazardKind, HazardSpec, Layout, NavEdge, NavGraph, NavNode, Point, TaskRef, World,
    CAPPING_SLOTS,
};

use super::{ExperimentConfig, ExperimentError, ExperimentReport};

pub const TABLE1_MODELS: [&str; 4] = [RESNET, VIT_ZS, VIT_FT, OLFACTORY];

/// Trials per task in the original deployment evaluation.
fn deployment_trials(task: TaskRef) -> usize {
    match task {
        TaskRef::T1 => 30,
        TaskRef::T2 | TaskRef::T3 => 50,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Cell {
    pub model: String,
    pub task: TaskRef,
    pub samples: usize,
    pub accuracy: f64,
    /// 95% normal-approximation interval.
    pub ci: (f64, f64),
    /// Accuracy over a run of deployment size, to show its spread.
    pub deployment_accuracy: f64,
    pub deployment_trials: usize,
    pub reference: f64,
}

impl Table1Cell {
    pub fn deviation(&self) -> f64 {
        (self.accuracy - self.reference).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Result {
    pub cells: Vec<Table1Cell>,
}

impl Table1Result {
    pub fn cell(&self, model: &str, task: TaskRef) -> Option<&Table1Cell> {
        self.cells.iter().find(|c| c.model == model && c.task == task)
    }

    pub fn report(&self, config: &ExperimentConfig) -> ExperimentReport {
        let f = |x: f64| format!("{x:.4}");
        let rows = self
            .cells
            .iter()
            .map(|c| {
                vec![
                    c.model.clone(),
                    c.task.name().to_string(),
                    c.samples.to_string(),
                    f(c.accuracy),
                    f(c.ci.0),
                    f(c.ci.1),
                    f(c.deployment_accuracy),
                    c.deployment_trials.to_string(),
                    f(c.reference),
                ]
            })
            .collect();
        ExperimentReport::new(
            "table1",
            config,
            &[
                "model",
                "task",
                "samples",
                "accuracy",
                "ci_low",
                "ci_high",
                "deployment_accuracy",
                "deployment_trials",
                "reference",
            ],
            rows,
            self,
        )
    }
}

/// Monte Carlo accuracy of every (model, task) pair over the deployment
/// scene mix.
pub fn run_table1(config: &ExperimentConfig) -> Result<Table1Result, ExperimentError> {
    let mut cells = Vec::new();
    for (m, model) in TABLE1_MODELS.iter().enumerate() {
        for (t, &task) in TaskRef::ALL.iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(100 + (m * TaskRef::ALL.len() + t) as u64);
            let mut trial = trial_fn(model, task, config)?;
            let n = config.table1_samples.max(1);
            let hits = (0..n).filter(|_| trial(&mut rng)).count();
            let small = deployment_trials(task);
            let small_hits = (0..small).filter(|_| trial(&mut rng)).count();
            let p = hits as f64 / n as f64;
            let half = 1.96 * (p * (1.0 - p) / n as f64).sqrt();
            cells.push(Table1Cell {
                model: model.to_string(),
                task,
                samples: n,
                accuracy: p,
                ci: ((p - half).max(0.0), (p + half).min(1.0)),
                deployment_accuracy: small_hits as f64 / small as f64,
                deployment_trials: small,
                reference: config.params.accuracy(model, task)?,
            });
        }
    }
    Ok(Table1Result { cells })
}

type Trial = Box<dyn FnMut(&mut ChaCha8Rng) -> bool>;

fn trial_fn(model: &str, task: TaskRef, config: &ExperimentConfig) -> Result<Trial, ExperimentError> {
    let params = &config.params;
    let subtle_fraction = params.deployment.subtle_fraction;
    Ok(match model {
        RESNET => {
            let vision = params.vision_model(task)?;
            Box::new(move |rng| {
                let truth = rng.random_bool(0.5);
                let subtle = rng.random_bool(subtle_fraction);
                vision.sample_with(truth, subtle, rng).x1 == truth
            })
        }
        VIT_ZS | VIT_FT => {
            let mode = if model == VIT_ZS {
                ClassifierMode::ZeroShot
            } else {
                ClassifierMode::FineTuned
            };
            let classifier = params.classifier_model(mode, task)?;
            let labels = LabelSet::default();
            Box::new(move |rng| {
                let all = labels.labels();
                let truth = all[rng.random_range(0..all.len())].clone();
                let subtle = rng.random_bool(subtle_fraction);
                classifier.sample_with(&truth, subtle, &labels, rng).label == truth
            })
        }
        OLFACTORY => {
            let olfactory = params.olfactory_model()?;
            let t_safe = config.calibration.t_safe()?;
            if task.is_navigation() {
                let world = corridor()?;
                let trials = params.clone();
                Box::new(move |rng| navigation_trial(&world, &olfactory, t_safe, &trials, rng))
            } else {
                let world = Layout::builtin("pxrd_lab")?.build_world(task.start_node())?;
                let trials = params.clone();
                Box::new(move |rng| manipulation_trial(&world, task, &olfactory, t_safe, &trials, rng))
            }
        }
        other => return Err(ExperimentError::Unknown(format!("model `{other}`"))),
    })
}

fn corridor() -> Result<World, ExperimentError> {
    let node = |id: &str, x: f64| NavNode {
        id: id.to_string(),
        position: Point::new(x, 0.0),
    };
    let edge = NavEdge {
        from: "a".into(),
        to: "b".into(),
        length: None,
    };
    let graph = NavGraph::new(vec![node("a", 0.0), node("b", 20.0)], &[edge])?;
    Ok(World::new(graph, Vec::new(), "a")?)
}

fn chemical<R: Rng>(rng: &mut R) -> Chemical {
    Chemical::ALL[rng.random_range(0..Chemical::ALL.len())]
}

/// A spilled or unsealed source meets the moving base, either suddenly
/// just ahead or lying on the path from the start. The sensor scores when
/// it crosses the threshold before the base reaches the source.
fn navigation_trial(
    template: &World,
    olfactory: &OlfactoryModel,
    t_safe: f64,
    params: &ModelParams,
    rng: &mut ChaCha8Rng,
) -> bool {
    let nav = &params.olfactory_trials.navigation;
    let mut world = template.clone();
    let sudden = rng.random_bool(nav.sudden_fraction);
    let ahead = if sudden {
        rng.random_range(nav.sudden_distance_m[0]..=nav.sudden_distance_m[1])
    } else {
        nav.preplaced_distance_m
    };
    let spilled = rng.random_bool(nav.spilled_fraction);
    let (kind, containment) = if spilled {
        (HazardKind::Spillage, Containment::Spilled)
    } else {
        (HazardKind::Vial, Containment::Unsealed)
    };
    let mut hazard = HazardSpec::new("h", kind, Point::new(0.0, 0.0), true);
    hazard.position = None;
    hazard.ahead = Some(ahead);
    hazard.chemical = Some(chemical(rng));
    hazard.containment = containment;
    hazard.on_path = true;
    let dt = 0.1;
    world.begin_navigation("b").expect("corridor route");
    if sudden {
        world.step(1.0).expect("corridor step");
    }
    hazard.appears_at = world.clock();
    world.add_hazard(&hazard).expect("valid trial hazard");
    let source = world.hazards()[0].position.expect("materialized");
    loop {
        let pos = world.robot().pose.position;
        if pos.distance(source) <= 0.25 {
            return false;
        }
        if voc_triggers_navigation(sample_voc(&world, pos, olfactory, rng), t_safe) {
            return true;
        }
        world.step(dt).expect("corridor step");
    }
}

/// One pre-manipulation check: an unsealed vial in a rack slot, a spill at
/// the grasp frame, or a clean scene. Correct means the reading at the
/// check pose lands on the right side of the threshold.
fn manipulation_trial(
    template: &World,
    task: TaskRef,
    olfactory: &OlfactoryModel,
    t_safe: f64,
    params: &ModelParams,
    rng: &mut ChaCha8Rng,
) -> bool {
    let m = &params.olfactory_trials.manipulation;
    let mut world = template.clone();
    let station = world.station(task.station()).expect("layout has station").clone();
    let hazard = rng.random_bool(m.hazard_fraction);
    if hazard {
        let spec = if rng.random_bool(m.unsealed_vial_fraction) {
            let slot = rng.random_range(0..CAPPING_SLOTS);
            let mut h = HazardSpec::new("h", HazardKind::UncappedVial, station.slot_position(slot), true);
            h.containment = Containment::Unsealed;
            h
        } else {
            let mut h = HazardSpec::new("h", HazardKind::Spillage, station.grasp_frame, true);
            h.containment = Containment::Spilled;
            h
        };
        let mut spec = spec;
        spec.chemical = Some(chemical(rng));
        spec.in_interaction_zone = true;
        world.add_hazard(&spec).expect("valid trial hazard");
        // Let the source settle past the sensor latency.
        world.step(2.0 * olfactory.latency_s + 0.1).expect("idle step");
    }
    let x2 = sample_voc(&world, station.check_pose, olfactory, rng);
    voc_clears_manipulation(x2, t_safe) != hazard
}
