use std::fs;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use prevent_cli::gateway::{serve, Gateway, GatewayConfig};
use prevent_core::dsl;
use prevent_core::experiments::{run_experiment, run_single, ExperimentConfig, SingleOptions, EXPERIMENTS};
use prevent_core::orchestrator::Mode;
use prevent_core::skills::{SkillKind, CIN_LEAVES, IBM_LEAVES};
use prevent_core::world::ScenarioSpec;
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "prevent",
    version,
    about = "Hazard-aware skill execution for a simulated mobile lab robot"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario and write its trace, events and outcome.
    Run {
        /// Builtin scenario id (S1..S6, T1_NH, ...) or a scenario file.
        #[arg(long)]
        scenario: String,
        /// Skill to run; must match the scenario's task.
        #[arg(long, value_enum)]
        skill: Option<SkillArg>,
        #[arg(long, value_enum, default_value = "skilled")]
        mode: ModeArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Answer every consent request with `continue` after SECS.
        #[arg(long, value_name = "SECS")]
        auto_consent: Option<f64>,
        /// Noise-free perception and fixed durations.
        #[arg(long)]
        exact: bool,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run an experiment (or `all`) and write CSV and JSON reports.
    Experiment {
        #[arg(value_parser = ["fig7", "table1", "table2", "all"])]
        name: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Monte Carlo samples per deployment-accuracy cell.
        #[arg(long)]
        samples: Option<usize>,
        /// Runs per (task, mode) cell of the end-to-end experiment.
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Serve the HTTP gateway.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: IpAddr,
        /// Wall-clock milliseconds per 0.1 s simulation tick.
        #[arg(long, default_value_t = 10)]
        tick_ms: u64,
    },
    /// Parse a `.bt` file and check its leaves against the skill library.
    Validate {
        file: PathBuf,
        /// Only accept leaves of this skill.
        #[arg(long, value_enum)]
        skill: Option<SkillArg>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SkillArg {
    Cin,
    Ibm,
}

impl SkillArg {
    fn kind(self) -> SkillKind {
        match self {
            SkillArg::Cin => SkillKind::Cin,
            SkillArg::Ibm => SkillKind::Ibm,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Skilled,
    Nse,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Skilled => Mode::Skilled,
            ModeArg::Nse => Mode::Nse,
        }
    }
}

type CliResult = Result<ExitCode, Box<dyn std::error::Error>>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Run {
            scenario,
            skill,
            mode,
            seed,
            auto_consent,
            exact,
            out,
        } => run(scenario, skill, mode.into(), seed, auto_consent, exact, &out),
        Cmd::Experiment {
            name,
            out,
            seed,
            samples,
            runs,
        } => experiment(&name, &out, seed, samples, runs),
        Cmd::Serve { port, bind, tick_ms } => serve_gateway(SocketAddr::new(bind, port), tick_ms),
        Cmd::Validate { file, skill } => validate(&file, skill),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}

fn run(
    scenario: String,
    skill: Option<SkillArg>,
    mode: Mode,
    seed: u64,
    auto_consent: Option<f64>,
    exact: bool,
    out: &Path,
) -> CliResult {
    let spec = ScenarioSpec::resolve(&scenario)?;
    let own = if spec.task.is_navigation() {
        SkillKind::Cin
    } else {
        SkillKind::Ibm
    };
    if let Some(s) = skill.map(SkillArg::kind).filter(|&s| s != own) {
        return Err(format!("scenario {} exercises {}, not {}", spec.id, own.name(), s.name()).into());
    }
    let options = SingleOptions {
        scenario,
        mode,
        seed,
        exact_models: exact,
        deterministic_timing: exact,
        auto_consent_s: auto_consent,
    };
    let result = run_single(&options)?;
    let dir = out.join(format!("{}-{}-{seed}", result.scenario, mode.name()));
    let files = result.write_to(&dir)?;
    let o = &result.outcome;
    let summary = json!({
        "scenario": result.scenario,
        "skill": o.skill,
        "mode": mode,
        "final_action": o.final_action,
        "halts": o.halts,
        "alerts": o.alerts.len(),
        "consent_waits": o.consent_waits,
        "duration": o.duration,
        "completed": o.completed,
        "failure_mode": o.failure_mode,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    for f in files {
        eprintln!("wrote {}", f.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn experiment(name: &str, out: &Path, seed: Option<u64>, samples: Option<usize>, runs: Option<usize>) -> CliResult {
    let mut config = seed.map(ExperimentConfig::with_seed).unwrap_or_default();
    if let Some(n) = samples {
        config.table1_samples = n;
    }
    if let Some(n) = runs {
        config.table2_runs = n;
    }
    let names: Vec<&str> = if name == "all" {
        EXPERIMENTS.to_vec()
    } else {
        vec![name]
    };
    for name in names {
        let report = run_experiment(name, &config)?;
        println!(
            "# {name} (seed {}, config {})",
            report.seed,
            &report.config_digest[..12]
        );
        print!("{}", report.to_csv()?);
        for f in report.write_to(out)? {
            eprintln!("wrote {}", f.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn serve_gateway(addr: SocketAddr, tick_ms: u64) -> CliResult {
    let gateway = Gateway::new(GatewayConfig {
        tick_interval: Duration::from_millis(tick_ms),
    });
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(serve(addr, gateway))?;
    Ok(ExitCode::SUCCESS)
}

fn validate(file: &Path, skill: Option<SkillArg>) -> CliResult {
    let bytes = fs::read(file)?;
    let name = file.display();
    let doc = match dsl::parse_bytes(&bytes) {
        Ok(doc) => doc,
        Err(e) => {
            match e.position() {
                Some(_) => println!("{name}:{e}"),
                None => println!("{name}: {e}"),
            }
            return Ok(ExitCode::FAILURE);
        }
    };
    let known: Vec<&str> = match skill.map(SkillArg::kind) {
        Some(SkillKind::Cin) => CIN_LEAVES.to_vec(),
        Some(SkillKind::Ibm) => IBM_LEAVES.to_vec(),
        None => CIN_LEAVES.iter().chain(IBM_LEAVES.iter()).copied().collect(),
    };
    let diags = dsl::validate_with(&doc, |leaf| known.contains(&leaf));
    for d in &diags {
        match d.span {
            Some(s) => println!("{name}:{}:{}: {}", s.start.line, s.start.col, d.message),
            None => println!("{name}: {} at {}", d.message, d.path),
        }
    }
    if diags.is_empty() {
        println!("{name}: ok");
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::FAILURE)
    }
}
