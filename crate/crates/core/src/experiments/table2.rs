use serde::{Deserialize, Serialize};

use crate::orchestrator::{submit_task, Mode, SessionConfig, TaskMessage};
use crate::skills::RandomDelayConsent;
use crate::world::{ScenarioSpec, TaskRef};

use super::{mean_std, ExperimentConfig, ExperimentError, ExperimentReport};

/// Hazard condition of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Condition {
    Nh,
    Oh,
    Lsh,
}

impl Condition {
    pub fn name(self) -> &'static str {
        match self {
            Condition::Nh => "NH",
            Condition::Oh => "OH",
            Condition::Lsh => "LSH",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2Cell {
    pub task: TaskRef,
    pub mode: Mode,
    pub condition: Condition,
    pub runs: usize,
    pub mean: f64,
    pub std: f64,
    pub successes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2Result {
    pub cells: Vec<Table2Cell>,
}

impl Table2Result {
    pub fn cell(&self, task: TaskRef, mode: Mode, condition: Condition) -> Option<&Table2Cell> {
        self.cells
            .iter()
            .find(|c| c.task == task && c.mode == mode && c.condition == condition)
    }

    /// Share of all runs of `(task, mode)` that completed without a
    /// workflow failure.
    pub fn success_rate(&self, task: TaskRef, mode: Mode) -> f64 {
        let (ok, n) = self
            .cells
            .iter()
            .filter(|c| c.task == task && c.mode == mode)
            .fold((0, 0), |(ok, n), c| (ok + c.successes, n + c.runs));
        if n == 0 {
            0.0
        } else {
            ok as f64 / n as f64
        }
    }

    /// Relative time cost of skilled over plain execution on clean runs,
    /// in percent.
    pub fn overhead_pct(&self, task: TaskRef) -> Option<f64> {
        let skilled = self.cell(task, Mode::Skilled, Condition::Nh)?.mean;
        let nse = self.cell(task, Mode::Nse, Condition::Nh)?.mean;
        Some((skilled / nse - 1.0) * 100.0)
    }

    pub fn report(&self, config: &ExperimentConfig) -> ExperimentReport {
        let rows = self
            .cells
            .iter()
            .map(|c| {
                vec![
                    c.task.name().to_string(),
                    c.mode.name().to_string(),
                    c.condition.name().to_string(),
                    c.runs.to_string(),
                    format!("{:.2}", c.mean),
                    format!("{:.2}", c.std),
                    c.successes.to_string(),
                    self.overhead_pct(c.task).map(|o| format!("{o:.2}")).unwrap_or_default(),
                ]
            })
            .collect();
        ExperimentReport::new(
            "table2",
            config,
            &[
                "task",
                "mode",
                "condition",
                "runs",
                "mean_s",
                "std_s",
                "successes",
                "overhead_pct",
            ],
            rows,
            self,
        )
    }
}

/// Half of the runs are clean; the rest split between an obstruction and
/// a lab-safety hazard.
fn condition_of(run: usize, runs: usize) -> Condition {
    let clean = runs / 2;
    let obstruction = (runs - clean) / 2;
    if run < clean {
        Condition::Nh
    } else if run < clean + obstruction {
        Condition::Oh
    } else {
        Condition::Lsh
    }
}

/// End-to-end runs of every task with and without the skills, stochastic
/// perception and operator responses.
pub fn run_table2(config: &ExperimentConfig) -> Result<Table2Result, ExperimentError> {
    let mut cells = Vec::new();
    for (t, &task) in TaskRef::ALL.iter().enumerate() {
        for (m, mode) in [Mode::Skilled, Mode::Nse].into_iter().enumerate() {
            let mut groups: Vec<(Condition, Vec<f64>, usize)> = Vec::new();
            for run in 0..config.table2_runs {
                let condition = condition_of(run, config.table2_runs);
                let scenario = format!("{}_{}", task.name(), condition.name());
                let spec =
                    ScenarioSpec::builtin(&scenario).map_err(|_| ExperimentError::MissingScenario(scenario.clone()))?;
                let session = SessionConfig {
                    scenario: scenario.clone(),
                    mode,
                    seed: config
                        .seed
                        .wrapping_mul(1_000_003)
                        .wrapping_add((t * 10_000 + m * 1_000 + run) as u64),
                    exact_models: false,
                    timing: config.timing.clone(),
                };
                let (lo, hi) = config.consent_delay_s;
                let mut consent = RandomDelayConsent::new(lo, hi);
                let record = submit_task(
                    TaskMessage::for_task(task, format!("run{run}")),
                    &spec,
                    session,
                    &mut consent,
                )?;
                match groups.iter_mut().find(|g| g.0 == condition) {
                    Some(g) => {
                        g.1.push(record.total_duration);
                        g.2 += usize::from(record.success);
                    }
                    None => groups.push((condition, vec![record.total_duration], usize::from(record.success))),
                }
            }
            for (condition, durations, successes) in groups {
                let (mean, std) = mean_std(&durations);
                cells.push(Table2Cell {
                    task,
                    mode,
                    condition,
                    runs: durations.len(),
                    mean,
                    std,
                    successes,
                });
            }
        }
    }
    Ok(Table2Result { cells })
}
