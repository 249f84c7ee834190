use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use salvo_core::output::{reproduce, run_resolved, sweep, Figure, OutputError, RunOutput, SweepSpec};
use salvo_core::scenario::{load_scenario, ScenarioError};

const EXIT_VALIDATION: u8 = 2;
const EXIT_CERTIFICATION: u8 = 3;
const EXIT_RUNTIME: u8 = 4;

#[derive(Parser)]
#[command(name = "salvo", version, about = "Cooperative salvo guidance simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write timeseries.csv and summary.json.
    Run {
        /// Scenario file, or a preset name such as `paper_baseline`.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the gain and mu conditions for a scenario.
    Certify {
        #[arg(long)]
        config: PathBuf,
    },
    /// Re-run a figure preset (fig3, fig4, fig5 or fig6).
    Reproduce {
        figure: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a batch of scenario variations in parallel.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Parse and validate a scenario without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Error paired with its exit status.
struct Failure(u8, String);

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        Failure(EXIT_VALIDATION, e.to_string())
    }
}

impl From<OutputError> for Failure {
    fn from(e: OutputError) -> Self {
        let code = match &e {
            OutputError::Scenario(_) | OutputError::UnknownFigure(_) => EXIT_VALIDATION,
            OutputError::Certification(_) => EXIT_CERTIFICATION,
            OutputError::Runtime(_) | OutputError::Write { .. } => EXIT_RUNTIME,
        };
        Failure(code, e.to_string())
    }
}

fn print_run(label: &str, r: &RunOutput) {
    let m = &r.record.metrics;
    let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4}"));
    println!(
        "{label}: consensus {} s, impact mean {} s, spread {} s, joint cost {:.3} (euclidean {:.3})",
        fmt(m.consensus_time),
        fmt(m.mean_impact_time),
        fmt(m.impact_spread),
        m.joint_cost,
        m.joint_cost_l2
    );
    for note in &m.notes {
        println!("  note: {note}");
    }
}

fn runtime_check(runs: &[(String, RunOutput)]) -> Result<(), Failure> {
    match runs.iter().find_map(|(l, r)| r.error.as_ref().map(|e| format!("{l}: {e}"))) {
        Some(msg) => Err(Failure(EXIT_RUNTIME, msg)),
        None => Ok(()),
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate { config } => {
            let r = load_scenario(&config)?;
            println!(
                "{}: valid ({} interceptors, {} graphs)",
                config.display(),
                r.engagement.len(),
                r.engagement.network.graphs().len()
            );
            Ok(())
        }
        Command::Certify { config } => {
            let r = load_scenario(&config)?;
            println!("{}", r.certification);
            if r.certified() {
                Ok(())
            } else {
                Err(Failure(EXIT_CERTIFICATION, "certification failed".into()))
            }
        }
        Command::Run { config, out } => {
            let run = run_resolved(load_scenario(&config)?)?;
            run.write_bundle(&out)?;
            print_run(&run.resolved.scenario.name, &run);
            runtime_check(&[(run.resolved.scenario.name.clone(), run)])
        }
        Command::Reproduce { figure, out } => {
            let fig: Figure = figure.parse()?;
            let runs = reproduce(fig, &out)?;
            for (label, r) in &runs {
                print_run(label, r);
            }
            runtime_check(&runs)
        }
        Command::Sweep { spec, out } => {
            let text = std::fs::read_to_string(&spec)
                .map_err(|e| Failure(EXIT_VALIDATION, format!("cannot read {}: {e}", spec.display())))?;
            let spec = SweepSpec::parse(&text)?;
            let (report, _) = sweep(&spec, Some(&out))?;
            println!(
                "{} samples, {} failed; consensus time max {:?}, impact spread max {:?}",
                report.entries.len(),
                report.failures,
                report.consensus_time.max,
                report.impact_spread.max
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
