use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::classifier::{ClassifierMode, ClassifierModel};
use super::olfactory::{ContainmentFactors, OlfactoryModel};
use super::vision::{Accuracy, VisionBinaryModel};
use super::SensorError;
use crate::world::{Chemical, TaskRef};

pub const MODELS_VERSION: &str = "models 1";
const BUILTIN: &str = include_str!("../../data/models.toml");

pub const RESNET: &str = "resnet18_ft";
pub const VIT_ZS: &str = "vit_l14_zs";
pub const VIT_FT: &str = "vit_l14_ft";
pub const OLFACTORY: &str = "olfactory";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VisionParams {
    pub range_m: f64,
    pub min_quality: f64,
    pub blur_probability: f64,
    pub quality_alpha: f64,
    pub quality_beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OlfactoryParams {
    pub noise_std: f64,
    pub latency_s: f64,
    pub emission: BTreeMap<Chemical, f64>,
    pub containment: ContainmentFactors,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Deployment {
    pub subtle_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NavigationTrials {
    pub sudden_fraction: f64,
    pub sudden_distance_m: [f64; 2],
    pub preplaced_distance_m: f64,
    pub spilled_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManipulationTrials {
    pub hazard_fraction: f64,
    pub unsealed_vial_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OlfactoryTrials {
    pub navigation: NavigationTrials,
    pub manipulation: ManipulationTrials,
}

/// Model parameter file: per-task accuracies keyed `table1.<model>.<task>`
/// plus the sensor surrogate settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub version: String,
    pub table1: BTreeMap<String, BTreeMap<String, f64>>,
    pub deployment: Deployment,
    pub vision: VisionParams,
    pub olfactory: OlfactoryParams,
    pub olfactory_trials: OlfactoryTrials,
}

impl ModelParams {
    pub fn parse(text: &str) -> Result<Self, SensorError> {
        let p: ModelParams = toml::from_str(text).map_err(|e| SensorError::Config(e.to_string()))?;
        if p.version != MODELS_VERSION {
            return Err(SensorError::Config(format!("unsupported version `{}`", p.version)));
        }
        for (model, tasks) in &p.table1 {
            for (task, acc) in tasks {
                if !(0.0..=1.0).contains(acc) {
                    return Err(SensorError::Config(format!(
                        "table1.{model}.{task} = {acc} is outside [0,1]"
                    )));
                }
            }
        }
        Ok(p)
    }

    pub fn builtin() -> Self {
        Self::parse(BUILTIN).expect("shipped model parameters parse")
    }

    pub fn source_text() -> &'static str {
        BUILTIN
    }

    pub fn accuracy(&self, model: &str, task: TaskRef) -> Result<f64, SensorError> {
        self.table1
            .get(model)
            .and_then(|t| t.get(task.key()))
            .copied()
            .ok_or_else(|| SensorError::Config(format!("missing table1.{model}.{}", task.key())))
    }

    fn fine_tuned(&self, model: &str, task: TaskRef) -> Result<Accuracy, SensorError> {
        Accuracy::from_deployment(self.accuracy(model, task)?, self.deployment.subtle_fraction, 1.0)
    }

    pub fn vision_model(&self, task: TaskRef) -> Result<VisionBinaryModel, SensorError> {
        let v = &self.vision;
        VisionBinaryModel::new(
            self.fine_tuned(RESNET, task)?,
            v.range_m,
            v.min_quality,
            v.blur_probability,
            (v.quality_alpha, v.quality_beta),
        )
    }

    pub fn classifier_model(&self, mode: ClassifierMode, task: TaskRef) -> Result<ClassifierModel, SensorError> {
        let accuracy = match mode {
            ClassifierMode::FineTuned => self.fine_tuned(VIT_FT, task)?,
            ClassifierMode::ZeroShot => Accuracy::uniform(self.accuracy(VIT_ZS, task)?)?,
        };
        Ok(ClassifierModel { mode, accuracy })
    }

    pub fn olfactory_model(&self) -> Result<OlfactoryModel, SensorError> {
        let o = &self.olfactory;
        OlfactoryModel::new(o.emission.clone(), o.containment, o.noise_std, o.latency_s)
    }
}
