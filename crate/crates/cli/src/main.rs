use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use netwave_cli::analyze::{analyze, render};
use netwave_cli::simulate::{simulate, SimulateOptions};
use netwave_cli::verify::{verify, Status};
use netwave_cli::{CliError, Scenario};

#[derive(Parser)]
#[command(name = "netwave", version, about = "Linear transport on metric graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the solution at the given times and write CSV snapshots.
    Simulate {
        scenario: PathBuf,
        /// Comma-separated output times; defaults to `run.times`.
        #[arg(long, value_delimiter = ',')]
        times: Option<Vec<f64>>,
        #[arg(long)]
        out: PathBuf,
        /// Use the numerical oracle instead of the explicit formula.
        #[arg(long)]
        oracle_only: bool,
        /// Oracle grid size; defaults to `run.oracle_grid`.
        #[arg(long, requires = "oracle_only")]
        grid: Option<usize>,
    },
    /// Spectral decomposition and long-time classification.
    Analyze {
        scenario: PathBuf,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Seeded consistency checks against the independent solvers.
    Verify {
        scenario: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("NETWAVE_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| CliError::Parse(format!("NETWAVE_THREADS: invalid value {v:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Simulate {
            scenario,
            times,
            out,
            oracle_only,
            grid,
        } => {
            let sc = Scenario::load(&scenario)?;
            let opts = SimulateOptions {
                times,
                oracle_only,
                grid,
            };
            let m = simulate(&sc, &opts, &out)?;
            println!(
                "wrote {} snapshot(s) to {} ({} mode)",
                m.snapshots.len(),
                out.display(),
                m.mode
            );
        }
        Command::Analyze { scenario, json } => {
            let sc = Scenario::load(&scenario)?;
            let report = analyze(&sc)?;
            print!("{}", render(&report));
            if let Some(path) = json {
                let text = serde_json::to_string_pretty(&report)
                    .map_err(|e| CliError::Runtime(e.to_string()))?;
                std::fs::write(path, text + "\n")?;
            }
        }
        Command::Verify { scenario, seed } => {
            let sc = Scenario::load(&scenario)?;
            let results = verify(&sc, seed)?;
            for r in &results {
                println!("{}", r.line());
            }
            let failed: Vec<String> = results
                .iter()
                .filter(|r| r.status == Status::Fail)
                .map(|r| r.name.to_string())
                .collect();
            if !failed.is_empty() {
                return Err(CliError::ChecksFailed(failed));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("netwave: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
