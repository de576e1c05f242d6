use serde::{Deserialize, Serialize};

use crate::decision::Classification;

/// One joint observation of all modalities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ModalityFrame {
    /// Binary vision flag, 0 or 1.
    pub x1: u8,
    /// VOC index (PPM).
    pub x2: u32,
    /// Classifier output, present only once the classifier was consulted.
    pub x3: Option<Classification>,
    /// Image quality of the frame behind `x1`.
    pub quality: f64,
    pub timestamp: f64,
    /// Ambient channels recorded alongside the VOC index; not used by any
    /// decision.
    pub temperature_c: f64,
}

impl ModalityFrame {
    pub fn vision_flag(&self) -> bool {
        self.x1 == 1
    }
}
