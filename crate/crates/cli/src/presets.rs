//! Canned experiment presets.
//!
//! Four scenarios exercise the scheduler families end to end:
//!
//! * `convex-vs-rp` — two user classes with polynomial losses; compares the
//!   per-slot optimal scheduler against plain gradient scheduling with
//!   rate-proportional placement while sweeping the low-latency load.
//! * `threshold` — all-or-nothing per-state loss thresholds with heavy-tailed
//!   demand; compares the optimal scheduler against the threshold-gradient
//!   scheduler with threshold-proportional placement over a load sweep.
//! * `delta-tradeoff` — queued low-latency arrivals; sweeps the sharing
//!   parameter `delta` to trade broadband utility against queueing delay.
//! * `linear-sanity` — a two-user linear-loss instance whose mean rates have
//!   closed forms, simulated next to the analytic values.
//!
//! Rate matrices are synthesized once per seed: "robust" users draw peak
//! rates uniformly from {4..10} Mbps (mean 7) and "sensitive" users from
//! {1..5} Mbps (mean 3), i.i.d. across users and states.

use std::fmt;
use std::str::FromStr;

use minislot_core::config::{AlphaSpec, LossModel, SystemConfig, Utility};
use minislot_core::demand::DemandSpec;
use minislot_core::oracle::linear_example_peaks;
use minislot_core::rng::{substream, STREAM_SYNTHESIS};
use minislot_core::sched::{PlacementKind, SchedulerKind, SchedulerSpec};
use rand::Rng;

use crate::error::AppError;

/// Users in each class for the sweep presets.
pub const ROBUST_USERS: usize = 10;
/// See [`ROBUST_USERS`].
pub const SENSITIVE_USERS: usize = 10;
/// Channel states for the sweep presets (all equally likely).
pub const SWEEP_STATES: usize = 100;
/// Independent replications per sweep point.
pub const SWEEP_SEEDS: u64 = 5;
/// Simulated slots per sweep replication.
pub const SWEEP_SLOTS: u64 = 10_000;
/// Simulated slots per policy in the linear sanity preset.
pub const LINEAR_SANITY_SLOTS: u64 = 100_000;

/// Low-latency load sweep for `convex-vs-rp` and `threshold`.
pub const RHO_SWEEP: [f64; 6] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
/// Sharing-parameter sweep for `delta-tradeoff`.
pub const DELTA_SWEEP: [f64; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];

/// The four canned experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    ConvexVsRp,
    Threshold,
    DeltaTradeoff,
    LinearSanity,
}

/// All preset names, in CLI spelling.
pub const PRESET_NAMES: [&str; 4] = [
    "convex-vs-rp",
    "threshold",
    "delta-tradeoff",
    "linear-sanity",
];

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::ConvexVsRp => PRESET_NAMES[0],
            Preset::Threshold => PRESET_NAMES[1],
            Preset::DeltaTradeoff => PRESET_NAMES[2],
            Preset::LinearSanity => PRESET_NAMES[3],
        }
    }

    /// CSV file the preset writes inside the output directory.
    pub fn csv_file_name(self) -> &'static str {
        match self {
            Preset::ConvexVsRp => "convex_vs_rp.csv",
            Preset::Threshold => "threshold.csv",
            Preset::DeltaTradeoff => "delta_tradeoff.csv",
            Preset::LinearSanity => "linear_sanity.csv",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = AppError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "convex-vs-rp" => Ok(Preset::ConvexVsRp),
            "threshold" => Ok(Preset::Threshold),
            "delta-tradeoff" => Ok(Preset::DeltaTradeoff),
            "linear-sanity" => Ok(Preset::LinearSanity),
            other => Err(AppError::validation(format!(
                "unknown preset {other:?}; available presets: {}",
                PRESET_NAMES.join(", ")
            ))),
        }
    }
}

/// One simulation of a sweep: a scheduler on a materialized config at one
/// sweep coordinate, under one seed.
#[derive(Clone, Debug)]
pub struct SweepJob {
    pub preset: Preset,
    pub scheduler_label: &'static str,
    pub spec: SchedulerSpec,
    /// Sweep coordinate: nominal load `rho` for the load sweeps, `delta` for
    /// the sharing-parameter sweep.
    pub sweep_value: f64,
    pub seed: u64,
    pub config: SystemConfig,
    /// Queue excess demand (and measure delays) instead of blocking it.
    pub queue: bool,
    pub slots: u64,
}

/// Synthesizes the per-seed `[user][state]` rate matrix for the sweep
/// presets; the synthesis stream is disjoint from every simulation stream.
pub fn synthesize_rate_matrix(seed: u64) -> Vec<Vec<f64>> {
    let mut rng = substream(seed, 0, STREAM_SYNTHESIS);
    let users = ROBUST_USERS + SENSITIVE_USERS;
    let mut rates = Vec::with_capacity(users);
    for user in 0..users {
        let row = (0..SWEEP_STATES)
            .map(|_| {
                let u: f64 = rng.gen();
                if user < ROBUST_USERS {
                    4.0 + (u * 7.0).floor()
                } else {
                    1.0 + (u * 5.0).floor()
                }
            })
            .collect();
        rates.push(row);
    }
    rates
}

fn sweep_base_config(seed: u64, delta: f64, offset: f64) -> SystemConfig {
    let users = ROBUST_USERS + SENSITIVE_USERS;
    SystemConfig {
        users,
        states: SWEEP_STATES,
        minislots: 8,
        delta,
        rb_count: 100,
        state_probs: vec![1.0 / SWEEP_STATES as f64; SWEEP_STATES],
        peak_rates: synthesize_rate_matrix(seed),
        utilities: vec![Utility::log_plus(offset); users],
        loss_models: Vec::new(),
        demand: DemandSpec::BinomialMinislot { p0: 1.0 },
    }
}

/// `convex-vs-rp` scenario at nominal load `rho`: robust users lose `x^2`,
/// sensitive users lose `(x / 0.7)^2` saturating at one; demand is 0 or the
/// full admissible minislot volume, with `P(zero)` chosen so the mean slot
/// load is `rho`.
pub fn convex_vs_rp_config(rho: f64, seed: u64) -> SystemConfig {
    let delta = 0.3;
    let mut cfg = sweep_base_config(seed, delta, 0.0);
    cfg.loss_models = class_models(
        LossModel::Monomial { k: 1.0, q: 2.0 },
        LossModel::PiecewiseQuadratic { tau: 0.7, zero_loss_above: false },
    );
    cfg.demand = DemandSpec::BinomialMinislot { p0: 1.0 - rho / (1.0 - delta) };
    cfg
}

/// `threshold` scenario at nominal load `rho`: per-state loss thresholds of
/// 0.3 on the first half of the states and 0.7 on the rest, heavy-tailed
/// aggregate demand with tail exponent 2 and lower endpoint chosen so the
/// *uncapped* law has mean `rho`.
pub fn threshold_config(rho: f64, seed: u64) -> SystemConfig {
    let mut cfg = sweep_base_config(seed, 0.1, 6.5);
    let alphas: Vec<f64> = (0..SWEEP_STATES)
        .map(|s| if s < SWEEP_STATES / 2 { 0.3 } else { 0.7 })
        .collect();
    cfg.loss_models =
        vec![LossModel::Threshold { alpha: AlphaSpec::PerState(alphas) }; cfg.users];
    // For tail exponent 2 on [x_min, 1], the mean is 2 x_min / (1 + x_min);
    // inverting gives the endpoint for a nominal mean of rho.
    cfg.demand = DemandSpec::TruncatedParetoAggregate { eta: 2.0, x_min: rho / (2.0 - rho) };
    cfg
}

/// `delta-tradeoff` scenario: uniform per-minislot arrivals queued beyond the
/// admission cap; half the users carry a mildly load-sensitive exponential
/// loss, half a sharply sensitive one.
pub fn delta_tradeoff_config(delta: f64, seed: u64) -> SystemConfig {
    let mut cfg = sweep_base_config(seed, delta, 4.2);
    cfg.loss_models = class_models(
        LossModel::Exponential { kappa: 0.2 },
        LossModel::Exponential { kappa: 0.7 },
    );
    cfg.demand = DemandSpec::UniformMinislot { lo: 0.0, hi: 0.125 };
    cfg
}

/// Two-user linear-loss reference instance; `p0` is the probability that a
/// minislot carries no demand (1 disables low-latency traffic entirely).
pub fn linear_sanity_config(p0: f64) -> SystemConfig {
    let peaks = linear_example_peaks();
    let states = peaks[0].len();
    SystemConfig {
        users: 2,
        states,
        minislots: 8,
        delta: 0.5,
        rb_count: 100,
        state_probs: vec![1.0 / states as f64; states],
        peak_rates: peaks,
        utilities: vec![Utility::log_plus(0.0); 2],
        loss_models: vec![LossModel::Linear; 2],
        demand: DemandSpec::BinomialMinislot { p0 },
    }
}

fn class_models(robust: LossModel, sensitive: LossModel) -> Vec<LossModel> {
    let mut models = vec![robust; ROBUST_USERS];
    models.extend(vec![sensitive; SENSITIVE_USERS]);
    models
}

fn optimal_spec() -> SchedulerSpec {
    // The per-slot optimizer derives its own placement; the placement field
    // is inert for this kind.
    SchedulerSpec::new(SchedulerKind::StochasticApprox, PlacementKind::Rp)
}

/// Materializes every `(sweep value, scheduler, seed)` job of a sweep preset,
/// in deterministic order. `linear-sanity` has its own runner and is not a
/// sweep.
pub fn sweep_jobs(preset: Preset) -> Result<Vec<SweepJob>, AppError> {
    let mut jobs = Vec::new();
    match preset {
        Preset::ConvexVsRp => {
            for &rho in &RHO_SWEEP {
                for (label, spec) in [
                    ("stochastic-approx", optimal_spec()),
                    (
                        "gradient-rp",
                        SchedulerSpec::new(SchedulerKind::LinearGradient, PlacementKind::Rp),
                    ),
                ] {
                    for seed in 0..SWEEP_SEEDS {
                        jobs.push(SweepJob {
                            preset,
                            scheduler_label: label,
                            spec: spec.clone(),
                            sweep_value: rho,
                            seed,
                            config: convex_vs_rp_config(rho, seed),
                            queue: false,
                            slots: SWEEP_SLOTS,
                        });
                    }
                }
            }
        }
        Preset::Threshold => {
            for &rho in &RHO_SWEEP {
                for (label, spec) in [
                    ("stochastic-approx", optimal_spec()),
                    (
                        "threshold-gradient-tp",
                        SchedulerSpec::new(SchedulerKind::ThresholdGradient, PlacementKind::Tp),
                    ),
                ] {
                    for seed in 0..SWEEP_SEEDS {
                        jobs.push(SweepJob {
                            preset,
                            scheduler_label: label,
                            spec: spec.clone(),
                            sweep_value: rho,
                            seed,
                            config: threshold_config(rho, seed),
                            queue: false,
                            slots: SWEEP_SLOTS,
                        });
                    }
                }
            }
        }
        Preset::DeltaTradeoff => {
            for &delta in &DELTA_SWEEP {
                for seed in 0..SWEEP_SEEDS {
                    jobs.push(SweepJob {
                        preset,
                        scheduler_label: "stochastic-approx",
                        spec: optimal_spec(),
                        sweep_value: delta,
                        seed,
                        config: delta_tradeoff_config(delta, seed),
                        queue: true,
                        slots: SWEEP_SLOTS,
                    });
                }
            }
        }
        Preset::LinearSanity => {
            return Err(AppError::validation(
                "linear-sanity is not a sweep; use the dedicated runner",
            ));
        }
    }
    Ok(jobs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use minislot_core::config::validate_config;

    #[test]
    fn preset_names_round_trip() {
        for name in PRESET_NAMES {
            let p: Preset = name.parse().unwrap();
            assert_eq!(p.name(), name);
        }
        assert!("nonesuch".parse::<Preset>().is_err());
    }

    #[test]
    fn every_sweep_config_validates() {
        for preset in [Preset::ConvexVsRp, Preset::Threshold, Preset::DeltaTradeoff] {
            for job in sweep_jobs(preset).unwrap() {
                let report = validate_config(&job.config);
                assert!(report.is_valid(), "{preset}: {report}");
            }
        }
        for p0 in [0.0, 1.0] {
            let report = validate_config(&linear_sanity_config(p0));
            assert!(report.is_valid(), "{report}");
        }
    }

    #[test]
    fn rate_matrix_classes_have_the_right_support() {
        let rates = synthesize_rate_matrix(3);
        assert_eq!(rates.len(), 20);
        for (user, row) in rates.iter().enumerate() {
            assert_eq!(row.len(), SWEEP_STATES);
            for &r in row {
                assert_eq!(r, r.floor(), "rates are whole Mbps");
                if user < ROBUST_USERS {
                    assert!((4.0..=10.0).contains(&r));
                } else {
                    assert!((1.0..=5.0).contains(&r));
                }
            }
        }
        // Empirical class means sit near the designed 7 and 3 Mbps.
        let mean = |rows: &[Vec<f64>]| -> f64 {
            rows.iter().flatten().sum::<f64>() / (rows.len() * SWEEP_STATES) as f64
        };
        assert!((mean(&rates[..ROBUST_USERS]) - 7.0).abs() < 0.5);
        assert!((mean(&rates[ROBUST_USERS..]) - 3.0).abs() < 0.5);
    }

    #[test]
    fn binomial_demand_hits_the_nominal_load() {
        use minislot_core::demand::DemandModel;
        for &rho in &RHO_SWEEP {
            let cfg = convex_vs_rp_config(rho, 0);
            let model = DemandModel::new(cfg.demand, cfg.minislots, cfg.delta).unwrap();
            assert!((model.rho() - rho).abs() < 1e-12, "rho {rho}");
        }
    }
}
