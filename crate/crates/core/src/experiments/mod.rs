//! Seeded experiment harness: the modality ablation over S1 to S6, the
//! per-model deployment accuracy estimates, and the end-to-end task table.
//!
//! Every report carries the seed and a digest of the full configuration;
//! the same pair reproduces the same bytes.

mod fig7;
mod single;
mod table1;
mod table2;


use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::orchestrator::OrchestratorError;
use crate::sensors::{CalibrationData, ModelParams, SensorError};
use crate::skills::{SkillError, Timing};
use crate::world::{ScenarioSpec, WorldError};

pub use fig7::{run_fig7, Fig7Cell, Fig7Result, ModalityConfig, FIG7_SCENARIOS};
pub use single::{run_single, SingleOptions, SingleRun};
pub use table1::{run_table1, Table1Cell, Table1Result, TABLE1_MODELS};
pub use table2::{run_table2, Condition, Table2Cell, Table2Result};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("missing scenario: {0}")]
    MissingScenario(String),
    #[error("unknown {0}")]
    Unknown(String),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Sensor(#[from] SensorError),
    #[error(transparent)]
    Skill(#[from] SkillError),
    #[error(transparent)]
    Orchestrator(#[from] OrchestratorError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub params: ModelParams,
    pub calibration: CalibrationData,
    pub timing: Timing,
    /// Monte Carlo samples per accuracy cell.
    pub table1_samples: usize,
    /// Runs per (task, mode); half without hazards.
    pub table2_runs: usize,
    /// Operator response time range for hazard runs, seconds.
    pub consent_delay_s: (f64, f64),
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 2024,
            params: ModelParams::builtin(),
            calibration: CalibrationData::builtin(),
            timing: Timing::default(),
            table1_samples: 10_000,
            table2_runs: 20,
            consent_delay_s: (60.0, 300.0),
        }
    }
}

impl ExperimentConfig {
    pub fn with_seed(seed: u64) -> Self {
        ExperimentConfig {
            seed,
            ..Self::default()
        }
    }

    /// SHA-256 over the configuration and every shipped scenario.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(self).expect("config serializes"));
        for id in ScenarioSpec::builtin_ids() {
            let spec = ScenarioSpec::builtin(id).expect("shipped scenarios load");
            h.update(serde_json::to_vec(&spec).expect("scenario serializes"));
        }
        hex::encode(h.finalize())
    }
}

/// A finished experiment: a flat table for CSV plus the typed results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub seed: u64,
    pub config_digest: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub results: serde_json::Value,
}

impl ExperimentReport {
    pub(crate) fn new<T: Serialize>(
        experiment: &str,
        config: &ExperimentConfig,
        header: &[&str],
        rows: Vec<Vec<String>>,
        results: &T,
    ) -> Self {
        ExperimentReport {
            experiment: experiment.to_string(),
            seed: config.seed,
            config_digest: config.digest(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows,
            results: serde_json::to_value(results).expect("results serialize"),
        }
    }

    pub fn to_csv(&self) -> Result<String, ExperimentError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    pub fn to_json(&self) -> Result<String, ExperimentError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes `<experiment>.csv` and `<experiment>.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>, ExperimentError> {
        fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{}.csv", self.experiment));
        let json_path = dir.join(format!("{}.json", self.experiment));
        fs::write(&csv_path, self.to_csv()?)?;
        fs::write(&json_path, self.to_json()? + "\n")?;
        Ok(vec![csv_path, json_path])
    }
}

/// Runs an experiment by name.
pub fn run_experiment(name: &str, config: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    match name {
        "fig7" => Ok(run_fig7(config)?.report(config)),
        "table1" => Ok(run_table1(config)?.report(config)),
        "table2" => Ok(run_table2(config)?.report(config)),
        other => Err(ExperimentError::Unknown(format!("experiment `{other}`"))),
    }
}

pub const EXPERIMENTS: [&str; 3] = ["fig7", "table1", "table2"];

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
