use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::orchestrator::Mode;
use crate::sensors::{Models, RngStreams};
use crate::skills::{run_nse, AutoConsent, ConsentSource, NoConsent, SkillOutcome, SkillRequest, SkillRun, Timing};
use crate::world::ScenarioSpec;

use super::ExperimentError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleOptions {
    /// Builtin scenario id or scenario file path.
    pub scenario: String,
    pub mode: Mode,
    pub seed: u64,
    pub exact_models: bool,
    pub deterministic_timing: bool,
    /// Answer every consent request with `continue` after this delay.
    pub auto_consent_s: Option<f64>,
}

impl SingleOptions {
    pub fn new(scenario: impl Into<String>) -> Self {
        SingleOptions {
            scenario: scenario.into(),
            mode: Mode::Skilled,
            seed: 0,
            exact_models: false,
            deterministic_timing: false,
            auto_consent_s: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleRun {
    pub scenario: String,
    pub mode: Mode,
    pub seed: u64,
    pub outcome: SkillOutcome,
    /// Tick trace as JSON lines; empty for plain execution.
    pub trace: String,
}

impl SingleRun {
    /// Writes `trace.jsonl`, `events.jsonl` and `outcome.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>, ExperimentError> {
        fs::create_dir_all(dir)?;
        let trace = dir.join("trace.jsonl");
        fs::write(&trace, &self.trace)?;
        let events = dir.join("events.jsonl");
        let mut w = BufWriter::new(fs::File::create(&events)?);
        for e in &self.outcome.events {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        let outcome = dir.join("outcome.json");
        fs::write(&outcome, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(vec![trace, events, outcome])
    }
}

/// Runs the scenario's own skill once and keeps the full tick trace.
pub fn run_single(options: &SingleOptions) -> Result<SingleRun, ExperimentError> {
    let spec = ScenarioSpec::resolve(&options.scenario)?;
    let mut world = spec.build_world()?;
    let (kind, request) = SkillRequest::for_task(spec.task, &world, spec.id.clone())?;
    let timing = if options.deterministic_timing {
        Timing::deterministic()
    } else {
        Timing::default()
    };
    let rng = RngStreams::new(options.seed);
    let (outcome, trace) = match options.mode {
        Mode::Nse => {
            let mut rng = rng;
            (run_nse(kind, request, &mut world, &timing, &mut rng)?, String::new())
        }
        Mode::Skilled => {
            let models = if options.exact_models {
                Models::exact()
            } else {
                Models::for_task(spec.task)?
            };
            let mut run = SkillRun::new(kind, request, world, models, timing, rng)?;
            let mut auto;
            let mut none = NoConsent;
            let consent: &mut dyn ConsentSource = match options.auto_consent_s {
                Some(delay_s) => {
                    auto = AutoConsent { delay_s };
                    &mut auto
                }
                None => &mut none,
            };
            run.run_to_end(consent)?;
            let mut buf = Vec::new();
            run.tree().write_trace_log(&mut buf)?;
            (run.outcome(), String::from_utf8(buf).expect("trace is UTF-8"))
        }
    };
    Ok(SingleRun {
        scenario: spec.id,
        mode: options.mode,
        seed: options.seed,
        outcome,
        trace,
    })
}
