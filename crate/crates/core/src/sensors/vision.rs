use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use super::SensorError;
use crate::world::{Region, World, WorldError};

/// Probability of a correct prediction, split by scene difficulty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub salient: f64,
    pub subtle: f64,
}

impl Accuracy {
    pub fn uniform(p: f64) -> Result<Self, SensorError> {
        check_probability("accuracy", p)?;
        Ok(Accuracy { salient: p, subtle: p })
    }

    /// Splits an aggregate deployment accuracy: salient scenes get
    /// `salient`, the remaining error mass goes to the subtle share.
    pub fn from_deployment(aggregate: f64, subtle_fraction: f64, salient: f64) -> Result<Self, SensorError> {
        check_probability("accuracy", aggregate)?;
        check_probability("salient accuracy", salient)?;
        if !(subtle_fraction > 0.0 && subtle_fraction <= 1.0) {
            return Err(SensorError::Config(format!(
                "subtle fraction {subtle_fraction} must be in (0,1]"
            )));
        }
        let subtle = (aggregate - (1.0 - subtle_fraction) * salient) / subtle_fraction;
        if !(0.0..=1.0 + 1e-12).contains(&subtle) {
            return Err(SensorError::Config(format!(
                "aggregate accuracy {aggregate} cannot be split with subtle fraction {subtle_fraction}"
            )));
        }
        Ok(Accuracy {
            salient,
            subtle: subtle.min(1.0),
        })
    }

    pub fn for_scene(&self, subtle: bool) -> f64 {
        if subtle {
            self.subtle
        } else {
            self.salient
        }
    }

    /// Expected accuracy for a scene mix.
    pub fn aggregate(&self, subtle_fraction: f64) -> f64 {
        (1.0 - subtle_fraction) * self.salient + subtle_fraction * self.subtle
    }
}

pub(crate) fn check_probability(what: &str, p: f64) -> Result<(), SensorError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(SensorError::Config(format!("{what} {p} is outside [0,1]")))
    }
}

/// Surrogate for the binary hazard / no-hazard image classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisionBinaryModel {
    pub accuracy: Accuracy,
    pub range_m: f64,
    pub min_quality: f64,
    pub blur_probability: f64,
    /// Beta shape of the sharp-frame quality score.
    pub quality_shape: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisionSample {
    pub x1: bool,
    pub quality: f64,
    pub usable: bool,
}

impl VisionBinaryModel {
    pub fn new(
        accuracy: Accuracy,
        range_m: f64,
        min_quality: f64,
        blur_probability: f64,
        quality_shape: (f64, f64),
    ) -> Result<Self, SensorError> {
        check_probability("min quality", min_quality)?;
        check_probability("blur probability", blur_probability)?;
        if !(range_m > 0.0) {
            return Err(SensorError::Config("detection range must be positive".into()));
        }
        Beta::new(quality_shape.0, quality_shape.1).map_err(|e| SensorError::Config(e.to_string()))?;
        Ok(VisionBinaryModel {
            accuracy,
            range_m,
            min_quality,
            blur_probability,
            quality_shape,
        })
    }

    /// Perfect detector with sharp frames, for noise-free ablations.
    pub fn exact() -> Self {
        VisionBinaryModel {
            accuracy: Accuracy {
                salient: 1.0,
                subtle: 1.0,
            },
            range_m: 0.7,
            min_quality: 0.0,
            blur_probability: 0.0,
            quality_shape: (8.0, 1.5),
        }
    }

    /// Plain Bernoulli model with the default quality settings.
    pub fn uniform(accuracy: f64) -> Result<Self, SensorError> {
        Self::new(Accuracy::uniform(accuracy)?, 0.7, 0.35, 0.02, (8.0, 1.5))
    }

    /// Region the navigation camera covers.
    pub fn nav_region(&self) -> Region {
        Region::Ahead {
            range: self.range_m,
            half_width: 0.35,
        }
    }

    fn quality<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if rng.random::<f64>() < self.blur_probability {
            rng.random_range(0.0..0.3)
        } else {
            let (a, b) = self.quality_shape;
            Beta::new(a, b).expect("validated shape").sample(rng)
        }
    }

    /// Samples one frame given the ground truth of the scene.
    pub fn sample_with<R: Rng + ?Sized>(&self, truth: bool, subtle: bool, rng: &mut R) -> VisionSample {
        let quality = self.quality(rng);
        let correct = rng.random::<f64>() < self.accuracy.for_scene(subtle);
        VisionSample {
            x1: if correct { truth } else { !truth },
            quality,
            usable: quality >= self.min_quality,
        }
    }
}

/// Ground truth seen by a camera covering `region`: whether a visible
/// hazard is present, and whether all visible hazards are subtle.
pub fn vision_truth(world: &World, region: Region) -> Result<(bool, bool), WorldError> {
    let seen = world.ground_truth_query(region)?;
    let truth = !seen.is_empty();
    Ok((truth, truth && seen.iter().all(|h| h.subtle)))
}

pub fn sample_vision_binary<R: Rng + ?Sized>(
    world: &World,
    region: Region,
    model: &VisionBinaryModel,
    rng: &mut R,
) -> Result<VisionSample, WorldError> {
    let (truth, subtle) = vision_truth(world, region)?;
    Ok(model.sample_with(truth, subtle, rng))
}
