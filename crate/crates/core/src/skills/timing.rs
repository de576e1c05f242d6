use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::world::StationId;

/// A duration with run-to-run spread (seconds).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub mean: f64,
    pub std: f64,
}

impl Spread {
    pub const fn new(mean: f64, std: f64) -> Self {
        Spread { mean, std }
    }

    /// Normal draw, floored at a tenth of the mean. A zero std consumes no
    /// randomness.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.std <= 0.0 {
            return self.mean;
        }
        let v = Normal::new(self.mean, self.std).expect("finite spread").sample(rng);
        v.max(0.1 * self.mean)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerStation {
    pub capping: Spread,
    pub chemspeed: Spread,
}

impl PerStation {
    pub fn at(&self, station: StationId) -> Spread {
        match station {
            StationId::Chemspeed => self.chemspeed,
            _ => self.capping,
        }
    }
}

/// Calibrated durations and cadences of the simulated skills.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Timing {
    pub dt: f64,
    /// Monitor start-up before the base moves (model loading, first
    /// inference).
    pub cin_startup_s: f64,
    /// Effective cycle of the binary vision model.
    pub vision_cycle_s: f64,
    /// Relative std of the base speed between runs.
    pub speed_jitter: f64,
    /// Initial VOC read, calibration and arm motion to the check pose.
    pub calibration_and_check: PerStation,
    /// Probe pickup from the deck, motion over the target and read-out.
    pub mid_voc: PerStation,
    /// The manipulation itself.
    pub manipulation: PerStation,
    /// A consent request unanswered this long aborts the run.
    pub abort_timeout_s: f64,
    /// On "continue" the operator removes unsafe hazards this close to the
    /// robot.
    pub clearance_radius_m: f64,
    /// Hard cap on simulated time per skill.
    pub max_run_s: f64,
}

impl Default for Timing {
    fn default() -> Self {
        Timing {
            dt: 0.1,
            cin_startup_s: 9.1,
            vision_cycle_s: 0.35,
            speed_jitter: 0.005,
            calibration_and_check: PerStation {
                capping: Spread::new(20.0, 2.9),
                chemspeed: Spread::new(76.7, 2.4),
            },
            mid_voc: PerStation {
                capping: Spread::new(56.1, 5.0),
                chemspeed: Spread::new(119.9, 4.0),
            },
            manipulation: PerStation {
                capping: Spread::new(131.0, 1.1),
                chemspeed: Spread::new(134.9, 0.3),
            },
            abort_timeout_s: 600.0,
            clearance_radius_m: 3.0,
            max_run_s: 3600.0,
        }
    }
}

impl Timing {
    /// Same calibration with every spread removed.
    pub fn deterministic() -> Self {
        let fix = |p: PerStation| PerStation {
            capping: Spread::new(p.capping.mean, 0.0),
            chemspeed: Spread::new(p.chemspeed.mean, 0.0),
        };
        let d = Timing::default();
        Timing {
            speed_jitter: 0.0,
            calibration_and_check: fix(d.calibration_and_check),
            mid_voc: fix(d.mid_voc),
            manipulation: fix(d.manipulation),
            ..d
        }
    }

    pub fn speed_factor<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Spread::new(1.0, self.speed_jitter).draw(rng)
    }
}
