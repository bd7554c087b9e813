//! Online slot-by-slot schedulers and low-latency placement policies.
//!
//! A scheduler observes the channel state at the start of each slot, splits
//! bandwidth among throughput users, and (directly or via a placement policy)
//! determines how the slot's sporadic low-latency demand punctures each
//! user's band. Realized rates feed back into smoothed per-user estimates
//! that drive the next slot's decisions:
//!
//! * [`SchedulerKind::StaticSplit`] / [`SchedulerKind::MaxRate`] - fixed and
//!   opportunistic baselines,
//! * [`SchedulerKind::LinearGradient`] / [`SchedulerKind::ThresholdGradient`]
//!   - per-resource-block utility-gradient scheduling,
//! * [`SchedulerKind::StochasticApprox`] - solves the joint per-slot
//!   allocation/placement problem with weights `U'(r_bar)` and tracks the
//!   long-run optimum.

use rand::Rng;

use crate::config::{StateLoss, SystemConfig, ThresholdFn};
use crate::demand::MinislotSample;
use crate::error::{Error, Result};
use crate::loss::{realized_rate, tp_weights, GFunction};
use crate::solver::{solve_per_slot_with, ONLINE_SOLVE};

/// Rate estimates are clamped to at least this before taking marginals.
pub const RATE_FLOOR: f64 = 1e-3;

/// Default fixed step for the per-resource-block gradient schedulers.
pub const GRADIENT_STEP: f64 = 0.01;

/// Step-size schedule for the smoothed rate estimates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepSchedule {
    /// Fixed step (tracks drifting loads, never fully converges).
    Constant(f64),
    /// Diminishing step `a / (b + t)` for slot index `t = 0, 1, ...`.
    Decreasing { a: f64, b: f64 },
}

impl StepSchedule {
    pub fn step_size(&self, t: u64) -> f64 {
        match *self {
            StepSchedule::Constant(e) => e,
            StepSchedule::Decreasing { a, b } => a / (b + t as f64),
        }
    }
}

impl Default for StepSchedule {
    fn default() -> Self {
        StepSchedule::Decreasing { a: 1.0, b: 9.0 }
    }
}

/// How throughput bandwidth is split each slot.
#[derive(Clone, Debug, PartialEq)]
pub enum SchedulerKind {
    /// Fixed shares every slot regardless of state.
    StaticSplit { shares: Vec<f64> },
    /// Entire band to the user with the highest peak rate (smallest index
    /// wins ties).
    MaxRate,
    /// Per resource block, serve the user maximizing
    /// `U'(r_tilde_u) * r_hat_u(s) * (1 - rho)`.
    LinearGradient,
    /// Per resource block, serve the user maximizing
    /// `U'(r_tilde_u) * r_hat_u(s) * P(D < t_u(s))` (constant thresholds).
    ThresholdGradient,
    /// Per slot, maximize `sum_u U'(r_bar_u) g_u(phi_u, gamma_u)` jointly over
    /// shares and placement fractions.
    StochasticApprox,
}

/// How low-latency demand is mapped onto the band.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlacementKind {
    /// Each minislot's demand occupies a circular frequency interval with an
    /// independent uniform start; loads hit users in proportion to the band
    /// they own, on average.
    UniformRandom,
    /// Rate-proportional: homogeneous fractions `gamma = phi`.
    Rp,
    /// Threshold-proportional: `gamma_u` proportional to `phi_u t_u(phi_u)`
    /// (threshold models only).
    Tp,
    /// Waterfill onto users in ascending peak-rate order (exact ties split
    /// evenly), protecting the strongest users.
    WorstUser,
}

/// Complete scheduler configuration.
#[derive(Clone, Debug)]
pub struct SchedulerSpec {
    pub kind: SchedulerKind,
    pub placement: PlacementKind,
    pub step: StepSchedule,
}

impl SchedulerSpec {
    /// Pairs the kind with its conventional step schedule: a fixed step for
    /// the per-resource-block gradient schedulers (their estimates track a
    /// stationary target), the decaying default otherwise.
    pub fn new(kind: SchedulerKind, placement: PlacementKind) -> Self {
        let step = match kind {
            SchedulerKind::LinearGradient | SchedulerKind::ThresholdGradient => {
                StepSchedule::Constant(GRADIENT_STEP)
            }
            _ => StepSchedule::default(),
        };
        SchedulerSpec { kind, placement, step }
    }
}

/// Everything a slot produced: decisions, realized loads and rates.
#[derive(Clone, Debug)]
pub struct SlotOutcome {
    /// Bandwidth shares used this slot (sums to 1).
    pub phi: Vec<f64>,
    /// Placement fractions when the placement was minislot-homogeneous.
    pub gamma: Option<Vec<f64>>,
    /// Absolute low-latency load landing on each user's band.
    pub loads: Vec<f64>,
    /// Realized rates after puncturing.
    pub rates: Vec<f64>,
    /// Whether any user lost throughput to puncturing this slot.
    pub any_loss: bool,
    /// Total low-latency demand served this slot.
    pub demand_total: f64,
}

/// Online scheduler state machine. Feed it one `(state, demand)` pair per
/// slot via [`Scheduler::step`].
pub struct Scheduler {
    cfg: SystemConfig,
    spec: SchedulerSpec,
    evaluators: Vec<Vec<GFunction>>,
    /// Mean of the aggregate per-slot demand.
    rho: f64,
    /// `P(D < t)` factors for the threshold-gradient score, per state/user.
    threshold_factors: Option<Vec<Vec<f64>>>,
    r_tilde: Vec<f64>,
    warm: Vec<Option<(Vec<f64>, Vec<f64>)>>,
    t: u64,
}

impl Scheduler {
    pub fn new(cfg: &SystemConfig, spec: SchedulerSpec) -> Result<Self> {
        if let SchedulerKind::StaticSplit { shares } = &spec.kind {
            if shares.len() != cfg.users {
                return Err(Error::DimensionMismatch(format!(
                    "{} static shares vs {} users",
                    shares.len(),
                    cfg.users
                )));
            }
            let sum: f64 = shares.iter().sum();
            if (sum - 1.0).abs() > 1e-9 || shares.iter().any(|&s| s < 0.0) {
                return Err(Error::invalid("shares", "must be a probability vector"));
            }
        }
        let (law, evaluators) = crate::loss::build_state_evaluators(cfg)?;
        let rho = law.mean();
        let threshold_factors = if spec.kind == SchedulerKind::ThresholdGradient {
            let mut per_state = Vec::with_capacity(cfg.states);
            for s in 0..cfg.states {
                let mut row = Vec::with_capacity(cfg.users);
                for u in 0..cfg.users {
                    match cfg.loss_models[u].at_state(s) {
                        StateLoss::Threshold(ThresholdFn::Constant(alpha)) => {
                            row.push(1.0 - law.survival(alpha));
                        }
                        other => {
                            return Err(Error::Unsupported(format!(
                                "threshold-gradient scheduling needs constant thresholds, \
                                 user {u} state {s} has {other:?}"
                            )));
                        }
                    }
                }
                per_state.push(row);
            }
            Some(per_state)
        } else {
            None
        };
        Ok(Scheduler {
            cfg: cfg.clone(),
            spec,
            evaluators,
            rho,
            threshold_factors,
            r_tilde: vec![0.0; cfg.users],
            warm: vec![None; cfg.states],
            t: 0,
        })
    }

    /// Smoothed per-user rate estimates driving the allocation decisions.
    pub fn rate_estimates(&self) -> &[f64] {
        &self.r_tilde
    }

    /// Slots processed so far.
    pub fn slots_seen(&self) -> u64 {
        self.t
    }

    fn marginal(&self, u: usize, r: f64) -> f64 {
        self.cfg.utilities[u].marginal(r.max(RATE_FLOOR))
    }

    /// Runs one slot: choose shares, place the sampled demand, realize rates,
    /// and fold them into the smoothed estimates.
    pub fn step<R: Rng>(
        &mut self,
        state: usize,
        demand: &MinislotSample,
        rng: &mut R,
    ) -> Result<SlotOutcome> {
        if state >= self.cfg.states {
            return Err(Error::invalid("state", "index out of range"));
        }
        let n = self.cfg.users;
        let eps = self.spec.step.step_size(self.t);

        // -- 1. bandwidth shares ------------------------------------------
        let (phi, solver_gamma) = match &self.spec.kind {
            SchedulerKind::StaticSplit { shares } => (shares.clone(), None),
            SchedulerKind::MaxRate => {
                let best = (0..n)
                    .max_by(|&a, &b| {
                        self.cfg
                            .peak_rate(a, state)
                            .partial_cmp(&self.cfg.peak_rate(b, state))
                            .unwrap()
                            .then(b.cmp(&a)) // smallest index wins ties
                    })
                    .expect("at least one user");
                let mut phi = vec![0.0; n];
                phi[best] = 1.0;
                (phi, None)
            }
            SchedulerKind::LinearGradient | SchedulerKind::ThresholdGradient => {
                let factors: Vec<f64> = (0..n)
                    .map(|u| match &self.threshold_factors {
                        Some(per_state) => per_state[state][u],
                        None => 1.0 - self.rho,
                    })
                    .collect();
                let b = self.cfg.rb_count;
                // Iterate over resource blocks with a within-slot scratch copy
                // of the estimates: each block goes to the highest
                // marginal-utility-weighted expected rate, and the winner's
                // scratch estimate absorbs one block's worth of discounted
                // peak rate so later blocks can rotate to other users. The
                // persistent estimates are only updated at slot end, from
                // realized rates.
                let mut work = self.r_tilde.clone();
                let mut wins = vec![0usize; n];
                for _ in 0..b {
                    let winner = (0..n)
                        .max_by(|&x, &y| {
                            let sx = self.marginal(x, work[x])
                                * self.cfg.peak_rate(x, state)
                                * factors[x];
                            let sy = self.marginal(y, work[y])
                                * self.cfg.peak_rate(y, state)
                                * factors[y];
                            sx.partial_cmp(&sy).unwrap().then(y.cmp(&x))
                        })
                        .expect("at least one user");
                    wins[winner] += 1;
                    for u in 0..n {
                        let inc = if u == winner {
                            self.cfg.peak_rate(u, state) * factors[u] / b as f64
                        } else {
                            0.0
                        };
                        work[u] = (1.0 - eps) * work[u] + eps * inc;
                    }
                }
                let phi = wins.iter().map(|&w| w as f64 / b as f64).collect();
                (phi, None)
            }
            SchedulerKind::StochasticApprox => {
                let weights: Vec<f64> = (0..n).map(|u| self.marginal(u, self.r_tilde[u])).collect();
                let warm = self.warm[state]
                    .as_ref()
                    .map(|(p, g)| (p.as_slice(), g.as_slice()));
                let sol = solve_per_slot_with(
                    &self.evaluators[state],
                    &weights,
                    self.cfg.delta,
                    warm,
                    ONLINE_SOLVE,
                )?;
                self.warm[state] = Some((sol.phi.clone(), sol.gamma.clone()));
                (sol.phi, Some(sol.gamma))
            }
        };

        // -- 2. placement --------------------------------------------------
        let d_total = demand.total();
        let (gamma, loads) = match (&self.spec.kind, self.spec.placement) {
            (SchedulerKind::StochasticApprox, _) => {
                let gamma = solver_gamma.expect("solver placement");
                let loads = gamma.iter().map(|&g| g * d_total).collect();
                (Some(gamma), loads)
            }
            (_, PlacementKind::Rp) => {
                let gamma = phi.clone();
                let loads = gamma.iter().map(|&g| g * d_total).collect();
                (Some(gamma), loads)
            }
            (_, PlacementKind::Tp) => {
                let tfns = self.state_thresholds(state)?;
                let gamma = tp_weights(&phi, &tfns)?;
                let loads = gamma.iter().map(|&g| g * d_total).collect();
                (Some(gamma), loads)
            }
            (_, PlacementKind::UniformRandom) => {
                (None, uniform_random_placement(&phi, demand, self.cfg.minislots, rng))
            }
            (_, PlacementKind::WorstUser) => {
                let peaks: Vec<f64> = (0..n).map(|u| self.cfg.peak_rate(u, state)).collect();
                (None, worst_user_waterfill(&phi, &peaks, d_total))
            }
        };

        // -- 3. realized rates ---------------------------------------------
        let mut rates = vec![0.0; n];
        let mut any_loss = false;
        for u in 0..n {
            if phi[u] <= 0.0 {
                rates[u] = 0.0;
                continue;
            }
            let load = loads[u].min(phi[u]);
            let loss = self.cfg.loss_models[u].at_state(state);
            let outcome = realized_rate(self.cfg.peak_rate(u, state), phi[u], load, &loss)?;
            rates[u] = outcome.rate;
            if load > 0.0 && outcome.loss_fraction > 0.0 {
                any_loss = true;
            }
        }

        // -- 4. estimate update ---------------------------------------------
        // Every kind folds the realized (post-puncturing) rates into its
        // smoothed estimates, so puncturing feeds back into future decisions.
        for u in 0..n {
            self.r_tilde[u] += eps * (rates[u] - self.r_tilde[u]);
        }
        self.t += 1;

        Ok(SlotOutcome {
            phi,
            gamma,
            loads,
            rates,
            any_loss,
            demand_total: d_total,
        })
    }

    fn state_thresholds(&self, state: usize) -> Result<Vec<ThresholdFn>> {
        (0..self.cfg.users)
            .map(|u| match self.cfg.loss_models[u].at_state(state) {
                StateLoss::Threshold(tfn) => Ok(tfn),
                other => Err(Error::Unsupported(format!(
                    "threshold-proportional placement needs threshold models, \
                     user {u} state {state} has {other:?}"
                ))),
            })
            .collect()
    }
}

/// Length of the circular overlap of `[start, start + width)` (mod 1) with
/// `[a, b)`.
fn circular_overlap(start: f64, width: f64, a: f64, b: f64) -> f64 {
    let overlap = |x1: f64, x2: f64| (x2.min(b) - x1.max(a)).max(0.0);
    let end = start + width;
    if end <= 1.0 {
        overlap(start, end)
    } else {
        overlap(start, 1.0) + overlap(0.0, end - 1.0)
    }
}

/// Places each minislot's demand as a circular frequency interval with an
/// independent uniform start over users owning contiguous bands in index
/// order. Returns per-user absolute loads; they sum to the total demand and
/// never exceed the owner's share.
pub fn uniform_random_placement<R: Rng>(
    phi: &[f64],
    demand: &MinislotSample,
    minislots: usize,
    rng: &mut R,
) -> Vec<f64> {
    let n = phi.len();
    let f = 1.0 / minislots as f64;
    // Cumulative band edges in user index order.
    let mut edges = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    edges.push(0.0);
    for &p in phi {
        acc += p;
        edges.push(acc.min(1.0));
    }
    let mut loads = vec![0.0; n];
    for &d in &demand.demands {
        if d <= 0.0 {
            continue;
        }
        // The demand occupies `d` resources = a band fraction d / f for the
        // duration f of the minislot.
        let width = (d / f).min(1.0);
        let start: f64 = rng.gen::<f64>();
        for u in 0..n {
            let o = circular_overlap(start, width, edges[u], edges[u + 1]);
            loads[u] += o * f;
        }
    }
    loads
}

/// Waterfills total demand onto users in ascending peak-rate order, splitting
/// evenly within groups of exactly equal peaks, capping each user's load at
/// its share.
pub fn worst_user_waterfill(phi: &[f64], peaks: &[f64], mut remaining: f64) -> Vec<f64> {
    let n = phi.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| peaks[a].partial_cmp(&peaks[b]).unwrap().then(a.cmp(&b)));
    let mut loads = vec![0.0; n];
    let mut i = 0;
    while i < n && remaining > 1e-15 {
        // Group of users with exactly equal peaks.
        let mut j = i;
        while j < n && peaks[order[j]] == peaks[order[i]] {
            j += 1;
        }
        let mut group: Vec<usize> = order[i..j].to_vec();
        // Even split within the group, re-spreading what capped users reject.
        while !group.is_empty() && remaining > 1e-15 {
            let share = remaining / group.len() as f64;
            let mut next_group = Vec::new();
            for &u in &group {
                let room = phi[u] - loads[u];
                let take = share.min(room);
                loads[u] += take;
                remaining -= take;
                if room - take > 1e-15 {
                    next_group.push(u);
                }
            }
            if next_group.len() == group.len() {
                break; // everyone absorbed the full share
            }
            group = next_group;
        }
        i = j;
    }
    loads
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{AlphaSpec, LossModel, Utility};
    use crate::demand::{DemandModel, DemandSpec};
    use crate::rng::substream;

    fn two_user_cfg(loss: LossModel, demand: DemandSpec, delta: f64) -> SystemConfig {
        SystemConfig {
            users: 2,
            states: 2,
            minislots: 8,
            delta,
            rb_count: 100,
            state_probs: vec![0.5, 0.5],
            peak_rates: vec![vec![2.0, 1.0], vec![1.0, 2.0]],
            utilities: vec![Utility::log_plus(0.0); 2],
            loss_models: vec![loss.clone(), loss],
            demand,
        }
    }

    fn opportunistic_cfg() -> SystemConfig {
        // Four equally likely joint states, one per combination of per-user
        // peaks in {2, 1}; E[max] = 1.75.
        SystemConfig {
            users: 2,
            states: 4,
            minislots: 8,
            delta: 0.5,
            rb_count: 100,
            state_probs: vec![0.25; 4],
            peak_rates: vec![vec![2.0, 2.0, 1.0, 1.0], vec![1.0, 2.0, 1.0, 2.0]],
            utilities: vec![Utility::log_plus(0.0); 2],
            loss_models: vec![LossModel::Linear, LossModel::Linear],
            demand: DemandSpec::BinomialMinislot { p0: 0.0 },
        }
    }

    #[test]
    fn step_schedule_values() {
        let dec = StepSchedule::default();
        assert!((dec.step_size(0) - 1.0 / 9.0).abs() < 1e-15);
        assert!((dec.step_size(91) - 0.01).abs() < 1e-15);
        assert_eq!(StepSchedule::Constant(0.05).step_size(7), 0.05);
    }

    #[test]
    fn static_split_keeps_shares_and_maxrate_picks_peak() {
        let cfg = opportunistic_cfg();
        let model = DemandModel::new(cfg.demand.clone(), cfg.minislots, cfg.delta).unwrap();
        let mut rng = substream(3, 0, 0);

        let mut stat = Scheduler::new(
            &cfg,
            SchedulerSpec::new(
                SchedulerKind::StaticSplit { shares: vec![0.5, 0.5] },
                PlacementKind::UniformRandom,
            ),
        )
        .unwrap();
        let d = model.sample_minislots(&mut rng);
        let out = stat.step(0, &d, &mut rng).unwrap();
        assert_eq!(out.phi, vec![0.5, 0.5]);

        let mut opp = Scheduler::new(
            &cfg,
            SchedulerSpec::new(SchedulerKind::MaxRate, PlacementKind::UniformRandom),
        )
        .unwrap();
        // State 0: peaks (2, 1) -> user 0; state 3: peaks (1, 2) -> user 1;
        // state 1: tie (2, 2) -> smallest index.
        let out = opp.step(0, &d, &mut rng).unwrap();
        assert_eq!(out.phi, vec![1.0, 0.0]);
        let out = opp.step(3, &d, &mut rng).unwrap();
        assert_eq!(out.phi, vec![0.0, 1.0]);
        let out = opp.step(1, &d, &mut rng).unwrap();
        assert_eq!(out.phi, vec![1.0, 0.0]);
    }

    #[test]
    fn uniform_placement_conserves_demand_and_respects_shares() {
        let mut rng = substream(5, 0, 0);
        let phi = vec![0.25, 0.125, 0.625];
        let spec = DemandSpec::UniformMinislot { lo: 0.0, hi: 0.05 };
        let model = DemandModel::new(spec, 8, 0.2).unwrap();
        for _ in 0..100 {
            let sample = model.sample_minislots(&mut rng);
            let loads = uniform_random_placement(&phi, &sample, 8, &mut rng);
            let total: f64 = loads.iter().sum();
            assert!((total - sample.total()).abs() < 1e-12);
            for (u, &l) in loads.iter().enumerate() {
                assert!(l <= phi[u] + 1e-12, "load {l} exceeds share {}", phi[u]);
            }
        }
    }

    #[test]
    fn waterfill_prefers_weak_users_and_splits_ties() {
        let phi = vec![0.5, 0.5];
        // Weak user absorbs everything it can hold first.
        let loads = worst_user_waterfill(&phi, &[2.0, 1.0], 0.3);
        assert_eq!(loads, vec![0.0, 0.3]);
        let loads = worst_user_waterfill(&phi, &[2.0, 1.0], 0.7);
        assert!((loads[1] - 0.5).abs() < 1e-12 && (loads[0] - 0.2).abs() < 1e-12);
        // Exact ties split evenly.
        let loads = worst_user_waterfill(&phi, &[1.0, 1.0], 0.4);
        assert!((loads[0] - 0.2).abs() < 1e-12 && (loads[1] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn rp_and_tp_placements_expose_fractions() {
        let cfg = two_user_cfg(
            LossModel::Threshold { alpha: AlphaSpec::Constant(0.5) },
            DemandSpec::TruncatedParetoAggregate { eta: 2.0, x_min: 0.1 },
            0.3,
        );
        let model = DemandModel::new(cfg.demand.clone(), cfg.minislots, cfg.delta).unwrap();
        let mut rng = substream(11, 0, 0);
        let d = model.sample_minislots(&mut rng);

        let mut rp = Scheduler::new(
            &cfg,
            SchedulerSpec::new(
                SchedulerKind::StaticSplit { shares: vec![0.7, 0.3] },
                PlacementKind::Rp,
            ),
        )
        .unwrap();
        let out = rp.step(0, &d, &mut rng).unwrap();
        assert_eq!(out.gamma.as_deref(), Some(&[0.7, 0.3][..]));
        assert!((out.loads[0] - 0.7 * d.total()).abs() < 1e-12);

        let mut tp = Scheduler::new(
            &cfg,
            SchedulerSpec::new(
                SchedulerKind::StaticSplit { shares: vec![0.7, 0.3] },
                PlacementKind::Tp,
            ),
        )
        .unwrap();
        let out = tp.step(0, &d, &mut rng).unwrap();
        // Equal constant thresholds make threshold-proportional equal to
        // rate-proportional.
        let gamma = out.gamma.unwrap();
        assert!((gamma[0] - 0.7).abs() < 1e-12 && (gamma[1] - 0.3).abs() < 1e-12);

        // Threshold-proportional placement on a fractional model is an error.
        let bad = two_user_cfg(
            LossModel::Linear,
            DemandSpec::TruncatedParetoAggregate { eta: 2.0, x_min: 0.1 },
            0.3,
        );
        let mut sched = Scheduler::new(
            &bad,
            SchedulerSpec::new(
                SchedulerKind::StaticSplit { shares: vec![0.5, 0.5] },
                PlacementKind::Tp,
            ),
        )
        .unwrap();
        assert!(sched.step(0, &d, &mut rng).is_err());
    }

    #[test]
    fn linear_gradient_time_shares_symmetric_users() {
        let cfg = two_user_cfg(
            LossModel::Linear,
            DemandSpec::BinomialMinislot { p0: 0.65 },
            0.3,
        );
        let model = DemandModel::new(cfg.demand.clone(), cfg.minislots, cfg.delta).unwrap();
        let mut sched = Scheduler::new(
            &cfg,
            SchedulerSpec::new(SchedulerKind::LinearGradient, PlacementKind::UniformRandom),
        )
        .unwrap();
        let mut rng = substream(13, 0, 0);
        let mut share_sums = [0.0, 0.0];
        let slots = 400;
        for t in 0..slots {
            let state = (t % 2) as usize; // alternate symmetric states
            let d = model.sample_minislots(&mut rng);
            let out = sched.step(state, &d, &mut rng).unwrap();
            if t >= slots / 2 {
                share_sums[0] += out.phi[0];
                share_sums[1] += out.phi[1];
            }
        }
        let ratio = share_sums[0] / (share_sums[0] + share_sums[1]);
        assert!(
            (ratio - 0.5).abs() < 0.1,
            "symmetric users should time-share, got ratio {ratio}"
        );
        assert!(sched.rate_estimates().iter().all(|&r| r > 0.0));
    }

    #[test]
    fn gradient_blocks_alternate_between_tied_users() {
        let cfg = opportunistic_cfg(); // state 1 has equal peaks (2, 2)
        let model = DemandModel::new(cfg.demand.clone(), cfg.minislots, cfg.delta).unwrap();
        let mut sched = Scheduler::new(
            &cfg,
            SchedulerSpec::new(SchedulerKind::LinearGradient, PlacementKind::UniformRandom),
        )
        .unwrap();
        let mut rng = substream(23, 0, 0);
        let d = model.sample_minislots(&mut rng);
        // The winner's within-slot estimate absorbs one block's discounted
        // rate, so tied users trade blocks and the slot splits the band in
        // half (up to one block).
        let out = sched.step(1, &d, &mut rng).unwrap();
        assert!(
            (out.phi[0] - 0.5).abs() <= 0.01 + 1e-12,
            "tied users should split the band, got {:?}",
            out.phi
        );
    }

    #[test]
    fn stochastic_approx_produces_feasible_joint_decisions() {
        let cfg = two_user_cfg(
            LossModel::Monomial { k: 1.0, q: 2.0 },
            DemandSpec::BinomialMinislot { p0: 0.65 },
            0.3,
        );
        let model = DemandModel::new(cfg.demand.clone(), cfg.minislots, cfg.delta).unwrap();
        let mut sched = Scheduler::new(
            &cfg,
            SchedulerSpec::new(SchedulerKind::StochasticApprox, PlacementKind::Rp),
        )
        .unwrap();
        let mut rng = substream(17, 0, 0);
        for t in 0..50 {
            let state = (t % 2) as usize;
            let d = model.sample_minislots(&mut rng);
            let out = sched.step(state, &d, &mut rng).unwrap();
            let gamma = out.gamma.as_ref().unwrap();
            assert!((out.phi.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            assert!((gamma.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            for u in 0..2 {
                assert!(out.phi[u] - (1.0 - cfg.delta) * gamma[u] >= -1e-6);
                assert!(out.loads[u] <= out.phi[u] + 1e-9);
            }
        }
        assert_eq!(sched.slots_seen(), 50);
    }
}
