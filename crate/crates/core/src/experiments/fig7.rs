use serde::{Deserialize, Serialize};

use crate::decision::{voc_clears_manipulation, voc_triggers_navigation, Action};
use crate::sensors::{sample_voc, scene_label, vision_truth, Models, RngStreams, NO_PROBLEM};
use crate::skills::{run_skill, AutoConsent, SkillRequest, Timing};
use crate::world::{MotionState, Region, ScenarioSpec, World};

use super::{ExperimentConfig, ExperimentError, ExperimentReport};

pub const FIG7_SCENARIOS: [&str; 6] = ["S1", "S2", "S3", "S4", "S5", "S6"];

/// Inference cycle of the vision-language model used as a standalone
/// detector.
const VLM_CYCLE_S: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModalityConfig {
    Vision,
    Voc,
    Vlm,
    VisionVoc,
    VisionVlm,
    VocVlm,
    MultiModal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Single {
    Vision,
    Voc,
    Vlm,
}

impl ModalityConfig {
    pub const ALL: [ModalityConfig; 7] = [
        ModalityConfig::Vision,
        ModalityConfig::Voc,
        ModalityConfig::Vlm,
        ModalityConfig::VisionVoc,
        ModalityConfig::VisionVlm,
        ModalityConfig::VocVlm,
        ModalityConfig::MultiModal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModalityConfig::Vision => "vision",
            ModalityConfig::Voc => "voc",
            ModalityConfig::Vlm => "vlm",
            ModalityConfig::VisionVoc => "vision+voc",
            ModalityConfig::VisionVlm => "vision+vlm",
            ModalityConfig::VocVlm => "voc+vlm",
            ModalityConfig::MultiModal => "multi_modal",
        }
    }

    pub fn is_unimodal(self) -> bool {
        matches!(self, ModalityConfig::Vision | ModalityConfig::Voc | ModalityConfig::Vlm)
    }

    pub fn is_dual(self) -> bool {
        matches!(
            self,
            ModalityConfig::VisionVoc | ModalityConfig::VisionVlm | ModalityConfig::VocVlm
        )
    }

    fn parts(self) -> &'static [Single] {
        match self {
            ModalityConfig::Vision => &[Single::Vision],
            ModalityConfig::Voc => &[Single::Voc],
            ModalityConfig::Vlm => &[Single::Vlm],
            ModalityConfig::VisionVoc => &[Single::Vision, Single::Voc],
            ModalityConfig::VisionVlm => &[Single::Vision, Single::Vlm],
            ModalityConfig::VocVlm => &[Single::Voc, Single::Vlm],
            ModalityConfig::MultiModal => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig7Cell {
    pub scenario: String,
    pub config: ModalityConfig,
    pub action: Action,
    pub expected: Action,
    pub false_positive: bool,
    pub false_negative: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig7Result {
    pub cells: Vec<Fig7Cell>,
}

impl Fig7Result {
    pub fn cell(&self, scenario: &str, config: ModalityConfig) -> Option<&Fig7Cell> {
        self.cells.iter().find(|c| c.scenario == scenario && c.config == config)
    }

    pub fn false_positives(&self, config: ModalityConfig, among: &[&str]) -> usize {
        self.count(config, among, |c| c.false_positive)
    }

    pub fn false_negatives(&self, config: ModalityConfig, among: &[&str]) -> usize {
        self.count(config, among, |c| c.false_negative)
    }

    fn count(&self, config: ModalityConfig, among: &[&str], f: impl Fn(&Fig7Cell) -> bool) -> usize {
        self.cells
            .iter()
            .filter(|c| c.config == config && among.contains(&c.scenario.as_str()) && f(c))
            .count()
    }

    pub fn report(&self, config: &ExperimentConfig) -> ExperimentReport {
        let rows = self
            .cells
            .iter()
            .map(|c| {
                vec![
                    c.scenario.clone(),
                    c.config.name().to_string(),
                    c.action.to_string(),
                    c.expected.to_string(),
                    u8::from(c.false_positive).to_string(),
                    u8::from(c.false_negative).to_string(),
                ]
            })
            .collect();
        ExperimentReport::new(
            "fig7",
            config,
            &[
                "scenario",
                "config",
                "action",
                "expected",
                "false_positive",
                "false_negative",
            ],
            rows,
            self,
        )
    }
}

/// One modality alone on a navigation scenario: drive and stop at the
/// first hazard it reports.
fn standalone_nav(
    spec: &ScenarioSpec,
    single: Single,
    models: &Models,
    timing: &Timing,
) -> Result<Action, ExperimentError> {
    let mut world = spec.build_world()?;
    let mut rng = RngStreams::new(spec.seed);
    let dest = world.station(spec.task.station())?.node.clone();
    while world.clock() + 1e-9 < timing.cin_startup_s {
        world.step(timing.dt)?;
    }
    world.begin_navigation(&dest)?;
    let collisions = world.collisions().len();
    let mut action = Action::Proceed;
    let mut next_vlm = world.clock();
    while world.robot().motion == MotionState::Navigating {
        match single {
            Single::Vision => {
                if vision_truth(&world, models.vision.nav_region())?.0 {
                    return Ok(Action::HaltAwaitConsent);
                }
            }
            Single::Voc => {
                let x2 = sample_voc(&world, world.robot().pose.position, &models.olfactory, &mut rng.voc);
                if voc_triggers_navigation(x2, models.t_safe) {
                    return Ok(Action::HaltAwaitConsent);
                }
            }
            Single::Vlm => {
                if world.clock() + 1e-9 >= next_vlm {
                    next_vlm += VLM_CYCLE_S;
                    if let Some(a) = vlm_verdict(&world, Region::NAV_CLASSIFIER, models)? {
                        if a == Action::HaltAwaitConsent {
                            return Ok(a);
                        }
                        action = action.max(a);
                    }
                }
            }
        }
        world.step(timing.dt)?;
        if world.collisions().len() > collisions {
            break;
        }
    }
    Ok(action)
}

/// Label-only verdict: unsafe asks, a safe finding auto-resumes, nothing
/// seen proceeds.
fn vlm_verdict(world: &World, region: Region, models: &Models) -> Result<Option<Action>, ExperimentError> {
    let (label, _) = scene_label(world, region, &models.labels)?;
    Ok(if models.labels.is_unsafe(&label) {
        Some(Action::HaltAwaitConsent)
    } else if label != NO_PROBLEM {
        Some(Action::HaltAutoResume)
    } else {
        None
    })
}

/// One modality alone before a manipulation.
fn standalone_ibm(spec: &ScenarioSpec, single: Single, models: &Models) -> Result<Action, ExperimentError> {
    let world = spec.build_world()?;
    let mut rng = RngStreams::new(spec.seed);
    let station = spec.task.station();
    let halt = |flag: bool| {
        if flag {
            Action::HaltAwaitConsent
        } else {
            Action::Proceed
        }
    };
    Ok(match single {
        Single::Vision => halt(vision_truth(&world, Region::CheckView(station))?.0),
        Single::Voc => {
            // Base sensor first, then the probe at the grasp frame.
            let base = sample_voc(&world, world.robot().pose.position, &models.olfactory, &mut rng.voc);
            let grasp = world.station(station)?.grasp_frame;
            let probe = sample_voc(&world, grasp, &models.olfactory, &mut rng.voc);
            halt(!voc_clears_manipulation(base, models.t_safe) || !voc_clears_manipulation(probe, models.t_safe))
        }
        Single::Vlm => vlm_verdict(&world, Region::CheckView(station), models)?.unwrap_or(Action::Proceed),
    })
}

fn multi_modal(spec: &ScenarioSpec, models: &Models, timing: &Timing) -> Result<Action, ExperimentError> {
    let mut world = spec.build_world()?;
    let (kind, request) = SkillRequest::for_task(spec.task, &world, spec.id.clone())?;
    let mut rng = RngStreams::new(spec.seed);
    let outcome = run_skill(
        kind,
        request,
        &mut world,
        models,
        timing,
        &mut rng,
        &mut AutoConsent { delay_s: 1.0 },
    )?;
    Ok(outcome.final_action)
}

/// Noise-free ablation: each modality reports exactly what it can observe
/// of the scenario's ground truth.
pub fn run_fig7(_config: &ExperimentConfig) -> Result<Fig7Result, ExperimentError> {
    let models = Models::exact();
    let timing = Timing::deterministic();
    let mut cells = Vec::new();
    for id in FIG7_SCENARIOS {
        let spec = ScenarioSpec::builtin(id).map_err(|_| ExperimentError::MissingScenario(id.to_string()))?;
        for config in ModalityConfig::ALL {
            let action = if config == ModalityConfig::MultiModal {
                multi_modal(&spec, &models, &timing)?
            } else {
                let mut worst = Action::Proceed;
                for &single in config.parts() {
                    let a = if spec.task.is_navigation() {
                        standalone_nav(&spec, single, &models, &timing)?
                    } else {
                        standalone_ibm(&spec, single, &models)?
                    };
                    worst = worst.max(a);
                }
                worst
            };
            let expected = spec.expected_action;
            cells.push(Fig7Cell {
                scenario: id.to_string(),
                config,
                action,
                expected,
                false_positive: action == Action::HaltAwaitConsent && expected < Action::HaltAwaitConsent,
                false_negative: action < Action::HaltAwaitConsent && spec.has_unsafe_hazard(),
            });
        }
    }
    Ok(Fig7Result { cells })
}
