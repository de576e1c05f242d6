//! Simulated perception: binary vision and label-classifier surrogates
//! driven by deployment accuracies, and a distance-attenuated VOC model.
//!
//! Every sampler takes an explicit random stream; models are immutable.

mod calibration;
mod classifier;
mod frame;
mod labels;
mod olfactory;
mod params;
mod rng;
mod vision;

use thiserror::Error;

pub use calibration::{compute_t_safe, CalibrationData, CALIBRATION_VERSION};
pub use classifier::{sample_classifier, scene_label, ClassifierMode, ClassifierModel};
pub use frame::ModalityFrame;
pub use labels::{LabelSet, LabelSetError, NO_PROBLEM, OFF_PATH};
pub use olfactory::{sample_voc, ContainmentFactors, OlfactoryModel};
pub use params::{
    Deployment, ManipulationTrials, ModelParams, NavigationTrials, OlfactoryParams, OlfactoryTrials, VisionParams,
    MODELS_VERSION, OLFACTORY, RESNET, VIT_FT, VIT_ZS,
};
pub use rng::RngStreams;
pub use vision::{sample_vision_binary, vision_truth, Accuracy, VisionBinaryModel, VisionSample};

use crate::world::TaskRef;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SensorError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("readings must be non-negative")]
    NegativeReading,
    #[error("configuration error: {0}")]
    Config(String),
}

/// Everything a skill needs to perceive: the three surrogates, the label
/// partition and the VOC threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Models {
    pub vision: VisionBinaryModel,
    pub classifier: ClassifierModel,
    pub olfactory: OlfactoryModel,
    pub labels: LabelSet,
    pub t_safe: f64,
}

impl Models {
    /// Stochastic models for `task` from the shipped parameter and
    /// calibration files.
    pub fn for_task(task: TaskRef) -> Result<Self, SensorError> {
        Self::from_params(&ModelParams::builtin(), &CalibrationData::builtin(), task)
    }

    pub fn from_params(
        params: &ModelParams,
        calibration: &CalibrationData,
        task: TaskRef,
    ) -> Result<Self, SensorError> {
        Ok(Models {
            vision: params.vision_model(task)?,
            classifier: params.classifier_model(ClassifierMode::FineTuned, task)?,
            olfactory: params.olfactory_model()?,
            labels: LabelSet::default(),
            t_safe: calibration.t_safe()?,
        })
    }

    /// Noise-free, error-free models over the shipped VOC physics.
    pub fn exact() -> Self {
        let params = ModelParams::builtin();
        Models {
            vision: VisionBinaryModel::exact(),
            classifier: ClassifierModel::exact(),
            olfactory: params.olfactory_model().expect("shipped model is valid").noiseless(),
            labels: LabelSet::default(),
            t_safe: CalibrationData::builtin()
                .t_safe()
                .expect("shipped calibration is valid"),
        }
    }
}
