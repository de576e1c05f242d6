use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::SensorError;
use crate::world::Chemical;

pub const CALIBRATION_VERSION: &str = "calibration 1";
const BUILTIN: &str = include_str!("../../data/calibration/voc_trials.toml");

/// Grand mean of sealed-container readings: `sum / (c * t)`.
///
/// `readings` holds one row of `t` trials per chemical.
pub fn compute_t_safe<R: AsRef<[f64]>>(readings: &[R], c: usize, t: usize) -> Result<f64, SensorError> {
    if c == 0 || t == 0 {
        return Err(SensorError::DimensionMismatch(format!(
            "c={c}, t={t}: both must be at least 1"
        )));
    }
    if readings.len() != c {
        return Err(SensorError::DimensionMismatch(format!(
            "{} chemicals supplied, expected {c}",
            readings.len()
        )));
    }
    let mut sum = 0.0;
    for (i, row) in readings.iter().enumerate() {
        let row = row.as_ref();
        if row.len() != t {
            return Err(SensorError::DimensionMismatch(format!(
                "chemical {i} has {} readings, expected {t}",
                row.len()
            )));
        }
        if row.iter().any(|r| !(*r >= 0.0)) {
            return Err(SensorError::NegativeReading);
        }
        sum += row.iter().sum::<f64>();
    }
    Ok(sum / (c * t) as f64)
}

/// Per-chemical VOC trial readings under each containment condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationData {
    pub version: String,
    pub sealed: BTreeMap<Chemical, Vec<u32>>,
    #[serde(default)]
    pub unsealed: BTreeMap<Chemical, Vec<u32>>,
    #[serde(default)]
    pub spilled: BTreeMap<Chemical, Vec<u32>>,
}

impl CalibrationData {
    pub fn parse(text: &str) -> Result<Self, SensorError> {
        let data: CalibrationData = toml::from_str(text).map_err(|e| SensorError::Config(e.to_string()))?;
        if data.version != CALIBRATION_VERSION {
            return Err(SensorError::Config(format!("unsupported version `{}`", data.version)));
        }
        Ok(data)
    }

    pub fn builtin() -> Self {
        Self::parse(BUILTIN).expect("shipped calibration parses")
    }

    pub fn source_text() -> &'static str {
        BUILTIN
    }

    /// T_safe over the sealed readings of every chemical in the file.
    pub fn t_safe(&self) -> Result<f64, SensorError> {
        let rows: Vec<Vec<f64>> = self
            .sealed
            .values()
            .map(|r| r.iter().map(|&v| f64::from(v)).collect())
            .collect();
        let t = rows.first().map_or(0, Vec::len);
        compute_t_safe(&rows, rows.len(), t)
    }
}
