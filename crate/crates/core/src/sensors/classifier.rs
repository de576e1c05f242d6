use rand::Rng;
use serde::{Deserialize, Serialize};

use super::labels::{LabelSet, NO_PROBLEM};
use super::vision::Accuracy;
use crate::decision::Classification;
use crate::world::{Region, World, WorldError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierMode {
    ZeroShot,
    FineTuned,
}

/// Surrogate for the hazard-label classifier. On an error it reports a
/// uniformly random wrong label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub mode: ClassifierMode,
    pub accuracy: Accuracy,
}

impl ClassifierModel {
    pub fn exact() -> Self {
        ClassifierModel {
            mode: ClassifierMode::FineTuned,
            accuracy: Accuracy {
                salient: 1.0,
                subtle: 1.0,
            },
        }
    }

    pub fn sample_with<R: Rng + ?Sized>(
        &self,
        truth: &str,
        subtle: bool,
        labels: &LabelSet,
        rng: &mut R,
    ) -> Classification {
        let correct = rng.random::<f64>() < self.accuracy.for_scene(subtle);
        let others: Vec<&String> = labels.labels().iter().filter(|l| *l != truth).collect();
        if correct || others.is_empty() {
            Classification::new(truth, rng.random_range(0.5..=1.0))
        } else {
            let wrong = others[rng.random_range(0..others.len())];
            Classification::new(wrong.clone(), rng.random_range(0.0..0.5))
        }
    }
}

/// Ground-truth label of the scene in `region`. The classifier reasons
/// over the whole image, so covered hazards count. An unsafe hazard
/// outranks safe ones; ties go to the lowest hazard id.
pub fn scene_label(world: &World, region: Region, labels: &LabelSet) -> Result<(String, bool), WorldError> {
    let mut seen = world.ground_truth_query_all(region)?;
    if seen.is_empty() {
        return Ok((NO_PROBLEM.to_string(), false));
    }
    seen.sort_by(|a, b| a.id.cmp(&b.id));
    let pick = seen.iter().find(|h| labels.is_unsafe(&h.label)).unwrap_or(&seen[0]);
    Ok((pick.label.clone(), pick.subtle))
}

pub fn sample_classifier<R: Rng + ?Sized>(
    world: &World,
    region: Region,
    model: &ClassifierModel,
    labels: &LabelSet,
    rng: &mut R,
) -> Result<Classification, WorldError> {
    let (truth, subtle) = scene_label(world, region, labels)?;
    Ok(model.sample_with(&truth, subtle, labels, rng))
}
