//! Joint scheduling of broadband and sporadic low-latency traffic on a
//! shared wireless band.
//!
//! Broadband users receive bandwidth shares at slot boundaries; low-latency
//! demand arrives mid-slot and immediately punctures those grants minislot by
//! minislot. This crate models the resulting throughput loss (linear, convex
//! and threshold families), provides exact or closed-form demand statistics,
//! solves the per-slot joint allocation/placement problem, and simulates
//! online schedulers against an offline benchmark.
//!
//! Module map:
//!
//! * [`config`] - scenario description, loss families, validation.
//! * [`demand`] - per-minislot demand processes and the aggregate demand law.
//! * [`loss`] - realized/expected rates, placement weights, concavity probes.
//! * [`solver`] - per-slot optimizer (projection + gradient ascent) and a
//!   grid-search reference.
//! * [`sched`] - online schedulers and placement policies.
//! * [`sim`] - slot-level simulation harness, queueing of excess demand.
//! * [`oracle`] - offline optimum and independent verification constructions.
//! * [`rng`] - deterministic seed-derived random substreams.

pub mod config;
pub mod demand;
pub mod error;
pub mod loss;
pub mod oracle;
pub mod rng;
pub mod sched;
pub mod sim;
pub mod solver;

pub use config::{
    check_joint_feasibility, validate_config, AllocationMatrix, AlphaSpec, LossModel,
    PlacementMatrix, StateLoss, SystemConfig, ThresholdFn, Utility, ValidationReport,
};
pub use demand::{AggregateLaw, DemandModel, DemandSpec, MinislotSample};
pub use error::{Error, Result};
pub use loss::{
    concavity_probe, expected_rate_convex, expected_rate_threshold, loss_fraction,
    loss_probability, pooled_loss_bound, realized_rate, tp_weights, GFunction, RateResult,
};
pub use oracle::{
    equivalent_unpunctured_shares, minislot_dependent_bruteforce, offline_optimum,
    slicing_comparison, two_user_linear_example, OfflineOptimum,
};
pub use sched::{PlacementKind, Scheduler, SchedulerKind, SchedulerSpec, SlotOutcome, StepSchedule};
pub use sim::{run_simulation, sum_utility, SimOptions, SimSummary, SimTrace, UrllcQueue};
pub use solver::{grid_oracle, project_feasible, solve_per_slot, SlotSolution};
