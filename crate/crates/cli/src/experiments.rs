//! Experiment execution and CSV emission.
//!
//! Sweep presets fan their `(sweep value, scheduler, seed)` jobs out across a
//! thread pool and reduce results in job order, so output is independent of
//! scheduling. Floats are written with Rust's shortest round-trip formatting:
//! identical `(config, seed)` inputs produce identical CSV bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use minislot_core::oracle::two_user_linear_example;
use minislot_core::sched::{PlacementKind, SchedulerKind, SchedulerSpec};
use minislot_core::sim::{run_simulation, SimOptions};
use rayon::prelude::*;

use crate::error::{AppError, AppResult};
use crate::presets::{
    linear_sanity_config, sweep_jobs, Preset, SweepJob, LINEAR_SANITY_SLOTS, ROBUST_USERS,
};

/// Environment variable capping worker threads for experiment sweeps.
pub const THREADS_ENV: &str = "SCHED_SIM_THREADS";

/// Header of the sweep CSVs.
pub const SWEEP_CSV_HEADER: &str = "preset,scheduler,rho_or_delta,seed,sum_utility,\
mean_rate_robust,mean_rate_sensitive,any_loss_prob,urllc_delay_tail";

/// One line of a sweep CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRow {
    pub preset: &'static str,
    pub scheduler: &'static str,
    /// Load `rho` or sharing parameter `delta`, depending on the preset.
    pub rho_or_delta: f64,
    pub seed: u64,
    pub sum_utility: f64,
    /// Mean rate over the robust user class (first half of the users).
    pub mean_rate_robust: f64,
    /// Mean rate over the sensitive user class (second half).
    pub mean_rate_sensitive: f64,
    /// Fraction of slots in which some user lost throughput.
    pub any_loss_prob: f64,
    /// `P(delay > 2 minislots)`; empty column outside queue mode.
    pub urllc_delay_tail: Option<f64>,
}

/// One line of the linear sanity CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearSanityRow {
    pub policy: &'static str,
    /// Closed-form mean sum rate.
    pub analytic_rate: f64,
    /// Simulated mean sum rate.
    pub simulated_rate: f64,
}

/// Builds the worker pool, honoring [`THREADS_ENV`] when set.
pub fn build_pool() -> AppResult<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let threads: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| {
                AppError::validation(format!(
                    "{THREADS_ENV} must be a positive integer, got {raw:?}"
                ))
            })?;
        builder = builder.num_threads(threads);
    }
    builder
        .build()
        .map_err(|e| AppError::runtime(format!("cannot build thread pool: {e}")))
}

fn class_mean(rates: &[f64], range: std::ops::Range<usize>) -> f64 {
    let slice = &rates[range];
    slice.iter().sum::<f64>() / slice.len() as f64
}

fn run_job(job: &SweepJob) -> AppResult<ExperimentRow> {
    let opts = SimOptions {
        slots: job.slots,
        seed: job.seed,
        replication: 0,
        warmup: 0,
        queue: job.queue,
        record_trace: false,
    };
    let (summary, _) = run_simulation(&job.config, job.spec.clone(), &opts)?;
    let users = job.config.users;
    Ok(ExperimentRow {
        preset: job.preset.name(),
        scheduler: job.scheduler_label,
        rho_or_delta: job.sweep_value,
        seed: job.seed,
        sum_utility: summary.sum_utility,
        mean_rate_robust: class_mean(&summary.mean_rates, 0..ROBUST_USERS.min(users)),
        mean_rate_sensitive: class_mean(&summary.mean_rates, ROBUST_USERS.min(users)..users),
        any_loss_prob: summary.any_loss_prob,
        urllc_delay_tail: summary.delay_tail,
    })
}

/// Runs every job of a sweep preset and returns rows in deterministic job
/// order.
pub fn run_sweep(preset: Preset) -> AppResult<Vec<ExperimentRow>> {
    let jobs = sweep_jobs(preset)?;
    let pool = build_pool()?;
    pool.install(|| jobs.par_iter().map(run_job).collect())
}

/// Runs the three closed-form policies of the linear sanity preset next to
/// their analytic mean sum rates.
pub fn run_linear_sanity(seed: u64, slots: u64) -> AppResult<Vec<LinearSanityRow>> {
    let analytic = two_user_linear_example();
    let policies: [(&'static str, SchedulerSpec, f64, f64); 3] = [
        (
            "static-even-split-no-urllc",
            SchedulerSpec::new(
                SchedulerKind::StaticSplit { shares: vec![0.5, 0.5] },
                PlacementKind::UniformRandom,
            ),
            1.0,
            analytic.static_no_urllc,
        ),
        (
            "static-even-split-random-placement",
            SchedulerSpec::new(
                SchedulerKind::StaticSplit { shares: vec![0.5, 0.5] },
                PlacementKind::UniformRandom,
            ),
            0.0,
            analytic.static_random,
        ),
        (
            "opportunistic-best-user",
            SchedulerSpec::new(SchedulerKind::MaxRate, PlacementKind::UniformRandom),
            0.0,
            analytic.opportunistic,
        ),
    ];

    let mut rows = Vec::with_capacity(policies.len());
    for (policy, spec, p0, analytic_rate) in policies {
        let cfg = linear_sanity_config(p0);
        let opts = SimOptions {
            slots,
            seed,
            replication: 0,
            warmup: 0,
            queue: false,
            record_trace: false,
        };
        let (summary, _) = run_simulation(&cfg, spec, &opts)?;
        rows.push(LinearSanityRow {
            policy,
            analytic_rate,
            simulated_rate: summary.mean_rates.iter().sum(),
        });
    }
    Ok(rows)
}

/// Renders sweep rows as CSV text (stable header and row order).
pub fn sweep_csv(rows: &[ExperimentRow]) -> String {
    let mut out = String::new();
    out.push_str(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.preset,
            r.scheduler,
            r.rho_or_delta,
            r.seed,
            r.sum_utility,
            r.mean_rate_robust,
            r.mean_rate_sensitive,
            r.any_loss_prob
        );
        match r.urllc_delay_tail {
            Some(tail) => {
                let _ = writeln!(out, ",{tail}");
            }
            None => out.push_str(",\n"),
        }
    }
    out
}

/// Renders linear sanity rows as CSV text.
pub fn linear_sanity_csv(rows: &[LinearSanityRow]) -> String {
    let mut out = String::from("policy,analytic_rate,simulated_rate\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.policy, r.analytic_rate, r.simulated_rate);
    }
    out
}

/// Runs a preset and writes its CSV inside `out_dir`; returns the file path.
pub fn run_experiment(preset: Preset, out_dir: &Path) -> AppResult<PathBuf> {
    let text = match preset {
        Preset::LinearSanity => linear_sanity_csv(&run_linear_sanity(0, LINEAR_SANITY_SLOTS)?),
        _ => sweep_csv(&run_sweep(preset)?),
    };
    fs::create_dir_all(out_dir)
        .map_err(|e| AppError::runtime(format!("cannot create {}: {e}", out_dir.display())))?;
    let path = out_dir.join(preset.csv_file_name());
    fs::write(&path, text)
        .map_err(|e| AppError::runtime(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_csv_formats_missing_delay_tail_as_empty() {
        let row = ExperimentRow {
            preset: "convex-vs-rp",
            scheduler: "stochastic-approx",
            rho_or_delta: 0.3,
            seed: 1,
            sum_utility: 2.5,
            mean_rate_robust: 4.0,
            mean_rate_sensitive: 1.25,
            any_loss_prob: 0.75,
            urllc_delay_tail: None,
        };
        let text = sweep_csv(&[row.clone()]);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(SWEEP_CSV_HEADER));
        assert_eq!(
            lines.next(),
            Some("convex-vs-rp,stochastic-approx,0.3,1,2.5,4,1.25,0.75,")
        );
        let mut with_tail = row;
        with_tail.urllc_delay_tail = Some(0.125);
        assert!(sweep_csv(&[with_tail]).ends_with(",0.125\n"));
    }

    #[test]
    fn linear_sanity_simulations_match_the_closed_forms() {
        let rows = run_linear_sanity(7, 20_000).unwrap();
        assert_eq!(rows.len(), 3);
        let analytic: Vec<f64> = rows.iter().map(|r| r.analytic_rate).collect();
        assert_eq!(analytic, vec![1.5, 0.75, 0.875]);
        for r in &rows {
            assert!(
                (r.simulated_rate - r.analytic_rate).abs() < 0.02,
                "{}: simulated {} vs analytic {}",
                r.policy,
                r.simulated_rate,
                r.analytic_rate
            );
        }
    }

    #[test]
    fn identical_jobs_produce_identical_rows() {
        let jobs = sweep_jobs(Preset::DeltaTradeoff).unwrap();
        let a = run_job(&jobs[0]).unwrap();
        let b = run_job(&jobs[0]).unwrap();
        assert_eq!(a, b);
    }
}
