//! Verification suites behind `verify --suite ...`.
//!
//! The *structural* suite (`--suite theorems`) re-derives the library's
//! documented structural results at desk scale with independent arithmetic:
//! the punctured/unpunctured time-share equivalence, optimality of
//! minislot-homogeneous placement, the pooling-beats-slicing loss comparison,
//! and attainment of the pooled loss bound by threshold-proportional
//! placement, plus the concavity probes those results lean on.
//!
//! The *solver* suite cross-checks the per-slot optimizer against exhaustive
//! grid search, the feasibility projection against its defining properties,
//! and the online scheduler against the offline optimum on a small instance.
//!
//! All checks are deterministic (fixed seeds) and finish in seconds.

use minislot_core::config::{
    validate_config, LossModel, StateLoss, SystemConfig, ThresholdFn, Utility,
};
use minislot_core::demand::{AggregateLaw, DemandModel, DemandSpec};
use minislot_core::loss::{
    concavity_probe, loss_probability, pooled_loss_bound, tp_weights, GFunction,
};
use minislot_core::oracle::{
    equivalent_unpunctured_shares, minislot_dependent_bruteforce, offline_optimum,
    slicing_comparison, two_user_linear_example,
};
use minislot_core::rng::substream;
use minislot_core::sched::{PlacementKind, SchedulerKind, SchedulerSpec};
use minislot_core::sim::{run_simulation, SimOptions};
use minislot_core::solver::{grid_oracle, project_feasible, solve_per_slot};
use rand::Rng;
use std::fmt::Write as _;
use std::sync::Arc;

/// Outcome of one verification check.
#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed deviation or a failure description.
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        CheckResult { name, passed, detail }
    }
}

/// Renders results as an aligned pass/fail table with a summary line.
pub fn render_table(results: &[CheckResult]) -> String {
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for r in results {
        let _ = writeln!(
            out,
            "[{}] {:width$}  {}",
            if r.passed { "pass" } else { "FAIL" },
            r.name,
            r.detail,
        );
    }
    let passed = results.iter().filter(|r| r.passed).count();
    let _ = writeln!(out, "{passed} passed, {} failed", results.len() - passed);
    out
}

fn random_simplex<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().max(1e-12).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

// ---------------------------------------------------------------------------
// Structural checks
// ---------------------------------------------------------------------------

fn check_time_share_equivalence() -> CheckResult {
    let name = "time-share equivalence maps punctured shares exactly";
    let mut rng = substream(101, 0, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = 2 + (rng.gen::<f64>() * 4.0) as usize;
        let phi = random_simplex(&mut rng, n);
        let gamma = random_simplex(&mut rng, n);
        let rho_max = phi
            .iter()
            .zip(&gamma)
            .map(|(&p, &g)| p / g)
            .fold(f64::INFINITY, f64::min)
            .min(0.95);
        let rho = rng.gen::<f64>() * rho_max;
        let shares = match equivalent_unpunctured_shares(&phi, &gamma, rho) {
            Ok(s) => s,
            Err(e) => return CheckResult::new(name, false, format!("construction failed: {e}")),
        };
        let sum: f64 = shares.iter().sum();
        worst = worst.max((sum - 1.0).abs());
        for u in 0..n {
            let punctured = phi[u] - rho * gamma[u];
            let unpunctured = (1.0 - rho) * shares[u];
            worst = worst.max((punctured - unpunctured).abs());
            worst = worst.max((-shares[u]).max(0.0));
        }
    }
    CheckResult::new(name, worst <= 1e-12, format!("max deviation {worst:.2e}"))
}

fn check_homogeneous_placement_optimal() -> CheckResult {
    let name = "minislot-homogeneous placement matches the dependent optimum";
    let atoms = [(0.0, 0.5), (0.25, 0.5)];
    let mut worst = f64::NEG_INFINITY;
    for loss in [StateLoss::Monomial { k: 1.0, q: 1.0 }, StateLoss::Monomial { k: 1.0, q: 2.0 }] {
        for m in 1..=3 {
            let search = match minislot_dependent_bruteforce(
                &[2.0, 1.0],
                &[loss.clone(), loss.clone()],
                &[1.0, 1.0],
                &[0.6, 0.4],
                &atoms,
                m,
                0.3,
                0.05,
            ) {
                Ok(s) => s,
                Err(e) => return CheckResult::new(name, false, format!("search failed: {e}")),
            };
            worst = worst.max(search.best_dependent - search.best_homogeneous);
        }
    }
    CheckResult::new(name, worst <= 1e-9, format!("max dependent advantage {worst:.2e}"))
}

fn check_slicing_never_beats_pooling() -> CheckResult {
    let name = "dedicated slices never lose less than pooled bandwidth";
    let mut rng = substream(103, 0, 0);
    let mut worst = f64::NEG_INFINITY;
    for case in 0..100 {
        let (loss, reach) = match case % 3 {
            0 => (
                StateLoss::Monomial { k: rng.gen::<f64>(), q: 1.0 + 2.0 * rng.gen::<f64>() },
                1.0,
            ),
            1 => (StateLoss::Exponential { kappa: 0.2 + 2.0 * rng.gen::<f64>() }, 1.0),
            _ => {
                let tau = 0.2 + 0.8 * rng.gen::<f64>();
                (StateLoss::PiecewiseQuadratic { tau, zero_loss_above: false }, tau)
            }
        };
        let m1 = 1 + (rng.gen::<f64>() * 3.0) as usize;
        let m2 = 1 + (rng.gen::<f64>() * 3.0) as usize;
        let p = 0.2 + 0.6 * rng.gen::<f64>();
        let atoms = [
            (0.0, 1.0 - p),
            (reach / (m1 + m2) as f64 * rng.gen::<f64>(), p),
        ];
        match slicing_comparison(&loss, &atoms, m1, m2) {
            Ok(cmp) => worst = worst.max(cmp.pooled_loss - cmp.sliced_loss),
            Err(e) => return CheckResult::new(name, false, format!("comparison failed: {e}")),
        }
        // Linear loss: expectation is linear, so both sides must coincide.
        if let Ok(cmp) =
            slicing_comparison(&StateLoss::Monomial { k: 0.8, q: 1.0 }, &atoms, m1, m2)
        {
            worst = worst.max((cmp.pooled_loss - cmp.sliced_loss).abs());
        }
    }
    // Enumerated reference pair: quadratic loss, fair-coin demand, one
    // dedicated minislot out of two -> sliced 0.5, pooled 0.375.
    let cmp = slicing_comparison(
        &StateLoss::Monomial { k: 1.0, q: 2.0 },
        &[(0.0, 0.5), (1.0, 0.5)],
        1,
        1,
    )
    .expect("enumerated case");
    let enumerated_dev = (cmp.sliced_loss - 0.5).abs().max((cmp.pooled_loss - 0.375).abs());
    CheckResult::new(
        name,
        worst <= 1e-12 && enumerated_dev <= 1e-12,
        format!("max pooled excess {worst:.2e}, enumerated deviation {enumerated_dev:.2e}"),
    )
}

fn check_tp_attains_pooled_bound() -> CheckResult {
    let name = "threshold-proportional placement attains the pooled loss bound";
    let mut rng = substream(107, 0, 0);
    let binom = DemandModel::new(DemandSpec::BinomialMinislot { p0: 0.4 }, 8, 0.2)
        .expect("binomial model")
        .aggregate_law();
    let pareto = DemandModel::new(
        DemandSpec::TruncatedParetoAggregate { eta: 2.0, x_min: 0.1 },
        8,
        0.2,
    )
    .expect("pareto model")
    .aggregate_law();
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let n = 2 + (rng.gen::<f64>() * 3.0) as usize;
        let phi = random_simplex(&mut rng, n);
        let tfns: Vec<ThresholdFn> = (0..n)
            .map(|_| ThresholdFn::Constant(0.2 + 0.8 * rng.gen::<f64>()))
            .collect();
        let law = if case % 2 == 0 { &binom } else { &pareto };
        let gamma = match tp_weights(&phi, &tfns) {
            Ok(g) => g,
            Err(e) => return CheckResult::new(name, false, format!("weights failed: {e}")),
        };
        worst = worst.max((gamma.iter().sum::<f64>() - 1.0).abs());
        let bound = pooled_loss_bound(&phi, &tfns, law).expect("bound");
        let eps = loss_probability(&phi, &gamma, &tfns, law).expect("losses");
        for &e in &eps {
            worst = worst.max((e - bound).abs());
        }
    }
    CheckResult::new(name, worst <= 1e-12, format!("max deviation {worst:.2e}"))
}

fn check_concavity_probes() -> CheckResult {
    let name = "expected rates are concave (and the step-law counterexample is caught)";
    let mut rng = substream(109, 0, 0);
    let binom = DemandModel::new(DemandSpec::BinomialMinislot { p0: 0.5 }, 8, 0.3)
        .expect("binomial model")
        .aggregate_law();
    let pareto = DemandModel::new(
        DemandSpec::TruncatedParetoAggregate { eta: 2.0, x_min: 0.1 },
        8,
        0.3,
    )
    .expect("pareto model")
    .aggregate_law();

    let mut worst: f64 = 0.0;
    let probes: [GFunction; 3] = [
        GFunction::new(2.0, StateLoss::Monomial { k: 1.0, q: 2.0 }, binom.clone()),
        GFunction::new(1.5, StateLoss::Monomial { k: 0.7, q: 3.0 }, pareto.clone()),
        GFunction::new(2.0, StateLoss::Threshold(ThresholdFn::Constant(0.5)), pareto),
    ];
    for g in &probes {
        let report = concavity_probe(|p, c| g.value(p, c), 0.3, 2_000, 1e-9, &mut rng);
        if !report.is_concave() {
            return CheckResult::new(
                name,
                false,
                format!("probe found gap {:.2e}", report.worst_gap),
            );
        }
        worst = worst.max(report.worst_gap);
    }

    // A point mass produces a step in the threshold survival, which must be
    // flagged as non-concave.
    let step_law = Arc::new(AggregateLaw::from_atoms(vec![(0.5, 1.0)], true));
    let step = GFunction::new(2.0, StateLoss::Threshold(ThresholdFn::Constant(0.5)), step_law);
    let counter = concavity_probe(|p, c| step.value(p, c), 0.3, 2_000, 1e-9, &mut rng);
    CheckResult::new(
        name,
        counter.violations > 0,
        format!(
            "max smooth-family gap {worst:.2e}; step law flagged {} times",
            counter.violations
        ),
    )
}

/// Structural results, re-derived with independent arithmetic.
pub fn structure_checks() -> Vec<CheckResult> {
    vec![
        check_time_share_equivalence(),
        check_homogeneous_placement_optimal(),
        check_slicing_never_beats_pooling(),
        check_tp_attains_pooled_bound(),
        check_concavity_probes(),
    ]
}

// ---------------------------------------------------------------------------
// Solver checks
// ---------------------------------------------------------------------------

fn check_projection_properties() -> CheckResult {
    let name = "feasibility projection is idempotent and lands in the set";
    let mut rng = substream(211, 0, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = 2 + (rng.gen::<f64>() * 4.0) as usize;
        let delta = 0.1 + 0.8 * rng.gen::<f64>();
        let mut phi: Vec<f64> = (0..n).map(|_| 2.0 * rng.gen::<f64>() - 0.5).collect();
        let mut gamma: Vec<f64> = (0..n).map(|_| 2.0 * rng.gen::<f64>() - 0.5).collect();
        if let Err(e) = project_feasible(&mut phi, &mut gamma, delta) {
            return CheckResult::new(name, false, format!("projection failed: {e}"));
        }
        worst = worst.max((phi.iter().sum::<f64>() - 1.0).abs());
        worst = worst.max((gamma.iter().sum::<f64>() - 1.0).abs());
        for u in 0..n {
            worst = worst.max(((1.0 - delta) * gamma[u] - phi[u]).max(0.0));
            worst = worst.max((-phi[u]).max(0.0)).max((-gamma[u]).max(0.0));
        }
        let (p0, g0) = (phi.clone(), gamma.clone());
        if let Err(e) = project_feasible(&mut phi, &mut gamma, delta) {
            return CheckResult::new(name, false, format!("re-projection failed: {e}"));
        }
        for u in 0..n {
            worst = worst.max((phi[u] - p0[u]).abs()).max((gamma[u] - g0[u]).abs());
        }
    }
    CheckResult::new(name, worst <= 1e-8, format!("max deviation {worst:.2e}"))
}

fn check_ascent_matches_grid() -> CheckResult {
    let name = "per-slot ascent reaches the exhaustive grid optimum";
    let mut rng = substream(223, 0, 0);
    let binom = DemandModel::new(DemandSpec::BinomialMinislot { p0: 0.5 }, 8, 0.3)
        .expect("binomial model")
        .aggregate_law();
    let pareto = DemandModel::new(
        DemandSpec::TruncatedParetoAggregate { eta: 2.0, x_min: 0.1 },
        8,
        0.3,
    )
    .expect("pareto model")
    .aggregate_law();
    let mut worst = f64::NEG_INFINITY;
    for case in 0..50 {
        let delta = 0.3;
        let weights: Vec<f64> = (0..2).map(|_| 0.1 + 0.9 * rng.gen::<f64>()).collect();
        let evals: Vec<GFunction> = (0..2)
            .map(|u| {
                let r_hat = 1.0 + 3.0 * rng.gen::<f64>();
                match (case + u) % 4 {
                    0 => GFunction::new(
                        r_hat,
                        StateLoss::Monomial { k: rng.gen::<f64>(), q: 1.0 + 2.0 * rng.gen::<f64>() },
                        binom.clone(),
                    ),
                    1 => GFunction::new(
                        r_hat,
                        StateLoss::Exponential { kappa: 0.2 + rng.gen::<f64>() },
                        binom.clone(),
                    ),
                    2 => GFunction::new(
                        r_hat,
                        StateLoss::PiecewiseQuadratic { tau: 0.7, zero_loss_above: false },
                        binom.clone(),
                    ),
                    _ => GFunction::new(
                        r_hat,
                        StateLoss::Threshold(ThresholdFn::Constant(0.3 + 0.6 * rng.gen::<f64>())),
                        pareto.clone(),
                    ),
                }
            })
            .collect();
        let reference = match grid_oracle(&evals, &weights, delta, 0.01) {
            Ok(s) => s,
            Err(e) => return CheckResult::new(name, false, format!("grid failed: {e}")),
        };
        let solved = match solve_per_slot(&evals, &weights, delta, None) {
            Ok(s) => s,
            Err(e) => return CheckResult::new(name, false, format!("ascent failed: {e}")),
        };
        worst = worst.max(reference.objective - solved.objective);
    }
    CheckResult::new(name, worst <= 1e-3, format!("max shortfall vs grid {worst:.2e}"))
}

fn desk_scale_config() -> SystemConfig {
    SystemConfig {
        users: 2,
        states: 2,
        minislots: 8,
        delta: 0.3,
        rb_count: 100,
        state_probs: vec![0.5, 0.5],
        peak_rates: vec![vec![2.0, 1.0], vec![1.0, 2.0]],
        utilities: vec![Utility::log_plus(0.0); 2],
        loss_models: vec![
            LossModel::Monomial { k: 1.0, q: 2.0 },
            LossModel::PiecewiseQuadratic { tau: 0.7, zero_loss_above: false },
        ],
        demand: DemandSpec::BinomialMinislot { p0: 0.5 },
    }
}

fn check_online_matches_offline() -> CheckResult {
    let name = "online rate estimates converge to the offline optimum";
    let cfg = desk_scale_config();
    if !validate_config(&cfg).is_valid() {
        return CheckResult::new(name, false, "desk-scale config invalid".into());
    }
    let reference = match offline_optimum(&cfg) {
        Ok(o) => o,
        Err(e) => return CheckResult::new(name, false, format!("offline solve failed: {e}")),
    };
    let scale = reference
        .mean_rates
        .iter()
        .fold(0.0f64, |a, &b| a.max(b.abs()));
    let mut worst: f64 = 0.0;
    for seed in 0..2 {
        let opts = SimOptions { slots: 10_000, seed, ..SimOptions::default() };
        let spec = SchedulerSpec::new(SchedulerKind::StochasticApprox, PlacementKind::Rp);
        let (summary, _) = match run_simulation(&cfg, spec, &opts) {
            Ok(r) => r,
            Err(e) => return CheckResult::new(name, false, format!("simulation failed: {e}")),
        };
        for (est, opt) in summary.final_estimates.iter().zip(&reference.mean_rates) {
            worst = worst.max((est - opt).abs());
        }
    }
    CheckResult::new(
        name,
        worst <= 0.02 * scale,
        format!("max estimate error {worst:.4} (limit {:.4})", 0.02 * scale),
    )
}

fn check_linear_reference_rates() -> CheckResult {
    let name = "two-user linear example reproduces its closed-form rates";
    let rates = two_user_linear_example();
    let dev = (rates.static_no_urllc - 1.5)
        .abs()
        .max((rates.static_random - 0.75).abs())
        .max((rates.opportunistic - 0.875).abs());
    CheckResult::new(name, dev == 0.0, format!("deviation {dev:.2e}"))
}

/// Optimizer and scheduler checks.
pub fn solver_checks() -> Vec<CheckResult> {
    vec![
        check_projection_properties(),
        check_ascent_matches_grid(),
        check_online_matches_offline(),
        check_linear_reference_rates(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_structure_checks_pass() {
        for result in structure_checks() {
            assert!(result.passed, "{}: {}", result.name, result.detail);
        }
    }

    #[test]
    fn all_solver_checks_pass() {
        for result in solver_checks() {
            assert!(result.passed, "{}: {}", result.name, result.detail);
        }
    }

    #[test]
    fn table_marks_failures() {
        let rows = vec![
            CheckResult::new("alpha", true, "ok".into()),
            CheckResult::new("beta", false, "broke".into()),
        ];
        let table = render_table(&rows);
        assert!(table.contains("[pass] alpha"));
        assert!(table.contains("[FAIL] beta"));
        assert!(table.contains("1 passed, 1 failed"));
    }
}
