use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::SensorError;
use crate::world::{Chemical, Containment, Point, World};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContainmentFactors {
    pub sealed: f64,
    pub unsealed: f64,
    pub spilled: f64,
}

impl ContainmentFactors {
    pub fn factor(&self, c: Containment) -> f64 {
        match c {
            Containment::Sealed => self.sealed,
            Containment::Unsealed => self.unsealed,
            Containment::Spilled => self.spilled,
        }
    }
}

/// VOC sensor model: each source contributes
/// `emission * containment / (1 + d^2)`, ramped in over the response
/// latency after it appears; Gaussian noise is added and the result is
/// rounded and clamped at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlfactoryModel {
    pub emission: BTreeMap<Chemical, f64>,
    pub containment: ContainmentFactors,
    pub noise_std: f64,
    pub latency_s: f64,
}

impl OlfactoryModel {
    pub fn new(
        emission: BTreeMap<Chemical, f64>,
        containment: ContainmentFactors,
        noise_std: f64,
        latency_s: f64,
    ) -> Result<Self, SensorError> {
        let c = containment;
        if !(c.spilled > c.unsealed && c.unsealed > c.sealed && c.sealed > 0.0 && c.spilled <= 1.0) {
            return Err(SensorError::Config(
                "containment factors must satisfy 0 < sealed < unsealed < spilled <= 1".into(),
            ));
        }
        if let Some(missing) = Chemical::ALL.iter().find(|ch| !emission.contains_key(ch)) {
            return Err(SensorError::Config(format!("no emission for {}", missing.name())));
        }
        if emission.values().any(|e| !(*e >= 0.0)) || !(noise_std >= 0.0) || !(latency_s >= 0.0) {
            return Err(SensorError::Config(
                "emissions, noise and latency must be non-negative".into(),
            ));
        }
        Ok(OlfactoryModel {
            emission,
            containment,
            noise_std,
            latency_s,
        })
    }

    /// Same physics without noise.
    pub fn noiseless(&self) -> Self {
        OlfactoryModel {
            noise_std: 0.0,
            ..self.clone()
        }
    }

    pub fn source_strength(&self, chemical: Chemical, containment: Containment) -> f64 {
        self.emission[&chemical] * self.containment.factor(containment)
    }

    /// Contribution of one source at distance `d`, `age` seconds after it
    /// appeared.
    pub fn contribution(&self, chemical: Chemical, containment: Containment, d: f64, age: f64) -> f64 {
        let ramp = if self.latency_s > 0.0 {
            (age / self.latency_s).clamp(0.0, 1.0)
        } else {
            1.0
        };
        self.source_strength(chemical, containment) * ramp / (1.0 + d * d)
    }

    /// Noise-free reading at `position`.
    pub fn expected(&self, world: &World, position: Point) -> f64 {
        world
            .present_hazards()
            .filter_map(|h| {
                let chemical = h.chemical?;
                let d = h.position?.distance(position);
                Some(self.contribution(chemical, h.containment, d, world.clock() - h.appears_at))
            })
            .sum()
    }

    /// Integer reading around `mean`.
    pub fn reading<R: Rng + ?Sized>(&self, mean: f64, rng: &mut R) -> u32 {
        let noise = if self.noise_std > 0.0 {
            Normal::new(0.0, self.noise_std).expect("validated std").sample(rng)
        } else {
            0.0
        };
        (mean + noise).round().max(0.0) as u32
    }
}

pub fn sample_voc<R: Rng + ?Sized>(world: &World, position: Point, model: &OlfactoryModel, rng: &mut R) -> u32 {
    model.reading(model.expected(world, position), rng)
}
