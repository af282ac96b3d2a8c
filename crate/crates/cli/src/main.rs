//! `nhtdse`: run metric-aware non-hermitian evolution experiments from
//! TOML scenario files.

mod bundle;
mod config;
mod scenario;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use config::{parse_override, ScenarioConfig};
use scenario::{Failure, Scenario};

const EXIT_IO: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "nhtdse", version, about = "Metric-aware time evolution for non-hermitian Hamiltonians")]
#[command(after_help = "\
Scenario files are TOML with a top-level `kind` (evolve, compare-tdse, quench,
lrb-probe, geomphase, anyon-quench), an optional `seed` (default 0), an
optional `output_dir` (default nhtdse-out/<kind>) and a section named after
the kind with underscores ([evolve], [compare_tdse], ...). Unknown keys are
rejected.

Numerical defaults ([integrator] table): rtol = 1e-9, atol = 1e-11,
max_step = 0.5, damping_step = 1e-2, derivative_step = 1e-3,
defect_tol = 1e-8; samples = 100; geomphase steps = 4000.
Physical parameters have no defaults.

Exit codes: 0 success, 2 invalid config (nothing written), 3 numerical
failure (summary.json names the error), 1 I/O failure.
Logging: NHTDSE_LOG=error|info|debug.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file.
    config: PathBuf,
    /// Override a config entry, e.g. `--set evolve.variant=\"gong\"` or `--set integrator.rtol=1e-10`.
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_override)]
    overrides: Vec<(String, String)>,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized models and states (overrides `seed`).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its tables and summary.json.
    Run(RunArgs),
    /// Run an evolve or compare-tdse scenario under every variant and print the comparison table.
    Compare(RunArgs),
    /// Check a scenario without running it.
    Validate(RunArgs),
}

fn load(args: &RunArgs) -> Result<ScenarioConfig, String> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| format!("cannot read {}: {e}", args.config.display()))?;
    let mut config = ScenarioConfig::parse(&text, &args.overrides)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = &args.out {
        config.output_dir = Some(out.clone());
    }
    Ok(config)
}

fn invalid(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_INVALID)
}

fn execute(scenario: Scenario, started: Instant, print_table: bool) -> ExitCode {
    let dir = scenario.config.output_dir();
    log::info!("running {} into {}", scenario.config.kind.as_str(), dir.display());
    match scenario.execute() {
        Ok(outcome) => {
            if print_table {
                for t in &outcome.tables {
                    print!("{}", String::from_utf8_lossy(&t.bytes));
                }
            }
            match bundle::write_success(&dir, &scenario.config, &outcome, started.elapsed()) {
                Ok(_) => {
                    log::info!("wrote {} tables to {}", outcome.tables.len(), dir.display());
                    ExitCode::SUCCESS
                }
                Err(e) => io_failure(&dir, e),
            }
        }
        Err(err) => {
            eprintln!("numerical failure ({}): {err}", err.name());
            match bundle::write_failure(&dir, &scenario.config, &err, started.elapsed()) {
                Ok(_) => ExitCode::from(EXIT_NUMERICAL),
                Err(e) => io_failure(&dir, e),
            }
        }
    }
}

fn io_failure(dir: &Path, e: std::io::Error) -> ExitCode {
    eprintln!("error: cannot write results to {}: {e}", dir.display());
    ExitCode::from(EXIT_IO)
}

/// Numerical failures while building inputs still get a summary.
fn prepare_failed(config: &ScenarioConfig, failure: Failure, started: Instant) -> ExitCode {
    match failure {
        Failure::Invalid(msg) => invalid(&msg),
        Failure::Numerical(err) => {
            eprintln!("numerical failure ({}): {err}", err.name());
            let dir = config.output_dir();
            match bundle::write_failure(&dir, config, &err, started.elapsed()) {
                Ok(_) => ExitCode::from(EXIT_NUMERICAL),
                Err(e) => io_failure(&dir, e),
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NHTDSE_LOG", "error")).init();
    let cli = Cli::parse();
    let started = Instant::now();
    match cli.command {
        Command::Run(args) => {
            let config = match load(&args) {
                Ok(c) => c,
                Err(msg) => return invalid(&msg),
            };
            match Scenario::prepare(config.clone()) {
                Ok(s) => execute(s, started, false),
                Err(f) => prepare_failed(&config, f, started),
            }
        }
        Command::Compare(args) => {
            let config = match load(&args) {
                Ok(c) => c,
                Err(msg) => return invalid(&msg),
            };
            match Scenario::prepare_comparison(config.clone()) {
                Ok(s) => execute(s, started, true),
                Err(f) => prepare_failed(&config, f, started),
            }
        }
        Command::Validate(args) => {
            let config = match load(&args) {
                Ok(c) => c,
                Err(msg) => return invalid(&msg),
            };
            let hash = config.hash();
            let kind = config.kind.as_str();
            match Scenario::prepare(config) {
                Ok(_) => {
                    println!("ok: {kind} scenario, config hash {hash}");
                    ExitCode::SUCCESS
                }
                Err(Failure::Invalid(msg)) => invalid(&msg),
                Err(Failure::Numerical(err)) => {
                    eprintln!("numerical failure ({}): {err}", err.name());
                    ExitCode::from(EXIT_NUMERICAL)
                }
            }
        }
    }
}
