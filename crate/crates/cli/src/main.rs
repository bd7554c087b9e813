//! `minislot` binary: simulate one scenario, run an experiment preset, or
//! verify the library against its reference results.
//!
//! Exit codes: 0 on success, 1 on invalid input (bad flags, malformed or
//! infeasible configs, unknown presets/suites, failed verification), 2 on
//! runtime failures (simulation or I/O errors after validation).

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use minislot_cli::checks::{render_table, solver_checks, structure_checks, CheckResult};
use minislot_cli::error::{AppError, AppResult};
use minislot_cli::experiments::run_experiment;
use minislot_cli::presets::Preset;
use minislot_cli::simspec::SimulationSpec;
use minislot_core::config::validate_config;
use minislot_core::sched::Scheduler;
use minislot_core::sim::{run_simulation, SimOptions};
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "minislot",
    about = "Slot/minislot wireless scheduling simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario described by a JSON config file.
    Simulate {
        /// Path to the scenario JSON (system, scheduler, placement, queue).
        #[arg(long)]
        config: PathBuf,
        /// Base RNG seed; equal seeds reproduce equal outputs byte for byte.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Slots to simulate.
        #[arg(long, default_value_t = 10_000)]
        slots: u64,
        /// Output directory for summary.json and trace.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a packaged experiment preset and write its CSV.
    Experiment {
        /// Preset name: convex-vs-rp, threshold, delta-tradeoff, linear-sanity.
        #[arg(long)]
        preset: String,
        /// Output directory for the preset's CSV file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-derive the library's reference results and report pass/fail.
    Verify {
        /// Suite to run: theorems (structural results), solver, or all.
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            // clap renders help to stdout and errors to stderr.
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> AppResult<ExitCode> {
    match cli.command {
        Command::Simulate { config, seed, slots, out } => {
            simulate(&config, seed, slots, &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Experiment { preset, out } => {
            let preset: Preset = preset.parse()?;
            let path = run_experiment(preset, &out)?;
            println!("wrote {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { suite } => {
            let results = verify(&suite)?;
            print!("{}", render_table(&results));
            if results.iter().all(|r| r.passed) {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(1))
            }
        }
    }
}

fn simulate(config: &PathBuf, seed: u64, slots: u64, out: &PathBuf) -> AppResult<()> {
    let text = fs::read_to_string(config).map_err(|e| {
        AppError::validation(format!("cannot read config {}: {e}", config.display()))
    })?;
    let spec: SimulationSpec = serde_json::from_str(&text).map_err(|e| {
        AppError::validation(format!("config {} is not valid: {e}", config.display()))
    })?;
    let report = validate_config(&spec.system);
    if !report.is_valid() {
        return Err(AppError::validation(format!(
            "config {} violates system invariants:\n{report}",
            config.display()
        )));
    }
    let sched_spec = spec.scheduler_spec();
    // Construct the scheduler up front so shape errors (for example static
    // shares of the wrong length) surface as validation failures.
    Scheduler::new(&spec.system, sched_spec.clone())
        .map_err(|e| AppError::validation(format!("scheduler rejected config: {e}")))?;

    if slots == 0 {
        return Err(AppError::validation("--slots must be at least 1"));
    }
    let opts = SimOptions {
        slots,
        seed,
        replication: 0,
        warmup: spec.warmup,
        queue: spec.queue,
        record_trace: true,
    };
    let (summary, trace) = run_simulation(&spec.system, sched_spec, &opts)?;

    fs::create_dir_all(out)
        .map_err(|e| AppError::runtime(format!("cannot create {}: {e}", out.display())))?;
    let summary_path = out.join("summary.json");
    let json = serde_json::to_string_pretty(&summary)
        .map_err(|e| AppError::runtime(format!("cannot serialize summary: {e}")))?;
    fs::write(&summary_path, json + "\n")
        .map_err(|e| AppError::runtime(format!("cannot write {}: {e}", summary_path.display())))?;
    let trace_path = out.join("trace.csv");
    let mut buf = Vec::new();
    trace
        .expect("record_trace was set")
        .write_csv(&mut buf)
        .map_err(|e| AppError::runtime(format!("cannot format trace: {e}")))?;
    fs::write(&trace_path, buf)
        .map_err(|e| AppError::runtime(format!("cannot write {}: {e}", trace_path.display())))?;
    println!("wrote {} and {}", summary_path.display(), trace_path.display());
    Ok(())
}

fn verify(suite: &str) -> AppResult<Vec<CheckResult>> {
    match suite {
        "theorems" => Ok(structure_checks()),
        "solver" => Ok(solver_checks()),
        "all" => {
            let mut all = structure_checks();
            all.extend(solver_checks());
            Ok(all)
        }
        other => Err(AppError::validation(format!(
            "unknown suite '{other}': expected theorems, solver, or all"
        ))),
    }
}
