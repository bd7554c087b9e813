//! Property-based invariants of the public API: monotonicity of loss
//! families, feasibility of projections, conservation laws of placements and
//! queues, and serialization round trips.

use minislot_core::config::{AlphaSpec, LossModel, StateLoss, ThresholdFn, Utility};
use minislot_core::demand::{DemandModel, DemandSpec, MinislotSample};
use minislot_core::loss::{
    expected_rate_convex, loss_fraction, loss_probability, pooled_loss_bound, tp_weights,
};
use minislot_core::oracle::equivalent_unpunctured_shares;
use minislot_core::rng::substream;
use minislot_core::sched::{uniform_random_placement, worst_user_waterfill};
use minislot_core::sim::{urllc_queue_step, UrllcQueue};
use minislot_core::solver::project_feasible;
use minislot_core::SystemConfig;
use proptest::prelude::*;

fn simplex(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.01..1.0f64, n).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    })
}

fn monotone_loss() -> impl Strategy<Value = StateLoss> {
    prop_oneof![
        (0.0..=1.0f64, 1.0..4.0f64).prop_map(|(k, q)| StateLoss::Monomial { k, q }),
        (0.05..3.0f64).prop_map(|kappa| StateLoss::Exponential { kappa }),
        (0.1..=1.0f64).prop_map(|tau| StateLoss::PiecewiseQuadratic {
            tau,
            zero_loss_above: false
        }),
        (0.05..=1.0f64).prop_map(|a| StateLoss::Threshold(ThresholdFn::Constant(a))),
    ]
}

proptest! {
    #[test]
    fn loss_fraction_is_monotone_and_bounded(
        loss in monotone_loss(),
        a in 0.0..=1.0f64,
        b in 0.0..=1.0f64,
    ) {
        let (x1, x2) = if a <= b { (a, b) } else { (b, a) };
        let h1 = loss_fraction(&loss, x1).unwrap();
        let h2 = loss_fraction(&loss, x2).unwrap();
        prop_assert!((0.0..=1.0).contains(&h1) && (0.0..=1.0).contains(&h2));
        prop_assert!(h1 <= h2 + 1e-12, "h({x1}) = {h1} > h({x2}) = {h2}");
    }

    #[test]
    fn projection_is_feasible_and_idempotent(
        raw_phi in proptest::collection::vec(-2.0..2.0f64, 2..5),
        raw_gamma in proptest::collection::vec(-2.0..2.0f64, 2..5),
        delta in 0.05..0.95f64,
    ) {
        let n = raw_phi.len().min(raw_gamma.len());
        let mut phi = raw_phi[..n].to_vec();
        let mut gamma = raw_gamma[..n].to_vec();
        project_feasible(&mut phi, &mut gamma, delta).unwrap();
        prop_assert!((phi.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        prop_assert!((gamma.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        for u in 0..n {
            prop_assert!(phi[u] >= -1e-9 && gamma[u] >= -1e-9);
            prop_assert!(phi[u] - (1.0 - delta) * gamma[u] >= -1e-8);
        }
        // Projecting a feasible point moves it (almost) nowhere.
        let phi0 = phi.clone();
        let gamma0 = gamma.clone();
        project_feasible(&mut phi, &mut gamma, delta).unwrap();
        for u in 0..n {
            prop_assert!((phi[u] - phi0[u]).abs() < 1e-7);
            prop_assert!((gamma[u] - gamma0[u]).abs() < 1e-7);
        }
    }

    #[test]
    fn uniform_placement_conserves_and_caps(
        phi in simplex(3),
        seed in 0u64..1000,
        p0 in 0.0..=1.0f64,
    ) {
        let model = DemandModel::new(DemandSpec::BinomialMinislot { p0 }, 8, 0.3).unwrap();
        let mut rng = substream(seed, 0, 0);
        let sample = model.sample_minislots(&mut rng);
        let loads = uniform_random_placement(&phi, &sample, 8, &mut rng);
        let total: f64 = loads.iter().sum();
        prop_assert!((total - sample.total()).abs() < 1e-12);
        for (u, &l) in loads.iter().enumerate() {
            prop_assert!(l >= 0.0 && l <= phi[u] + 1e-12);
        }
    }

    #[test]
    fn waterfill_conserves_and_caps(
        phi in simplex(4),
        peaks in proptest::collection::vec(0.5..4.0f64, 4),
        demand in 0.0..0.9f64,
    ) {
        let loads = worst_user_waterfill(&phi, &peaks, demand);
        let total: f64 = loads.iter().sum();
        prop_assert!((total - demand.min(1.0)).abs() < 1e-9);
        for (u, &l) in loads.iter().enumerate() {
            prop_assert!(l >= 0.0 && l <= phi[u] + 1e-12);
        }
    }

    #[test]
    fn equivalence_identity_holds_for_feasible_pairs(
        raw_phi in proptest::collection::vec(0.0..1.0f64, 3),
        raw_gamma in proptest::collection::vec(0.0..1.0f64, 3),
        rho in 0.05..0.9f64,
    ) {
        let mut phi = raw_phi;
        let mut gamma = raw_gamma;
        // Coupling with 1 - delta = rho yields rho * gamma_u <= phi_u.
        project_feasible(&mut phi, &mut gamma, 1.0 - rho).unwrap();
        let prime = equivalent_unpunctured_shares(&phi, &gamma, rho).unwrap();
        prop_assert!((prime.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        for u in 0..3 {
            let punctured = phi[u] - rho * gamma[u];
            prop_assert!((punctured - (1.0 - rho) * prime[u]).abs() < 1e-12);
        }
    }

    #[test]
    fn tp_weights_lie_on_simplex_and_attain_pooled_bound(
        phi in simplex(3),
        alphas in proptest::collection::vec(0.1..=1.0f64, 3),
    ) {
        let tfns: Vec<ThresholdFn> = alphas.iter().map(|&a| ThresholdFn::Constant(a)).collect();
        let gamma = tp_weights(&phi, &tfns).unwrap();
        prop_assert!((gamma.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(gamma.iter().all(|&g| g >= 0.0));

        let model = DemandModel::new(
            DemandSpec::TruncatedParetoAggregate { eta: 2.0, x_min: 0.1 },
            8,
            0.1,
        )
        .unwrap();
        let law = model.aggregate_law();
        let eps = loss_probability(&phi, &gamma, &tfns, &law).unwrap();
        let pooled = pooled_loss_bound(&phi, &tfns, &law).unwrap();
        for &e in &eps {
            prop_assert!((e - pooled).abs() < 1e-12);
        }
    }

    #[test]
    fn expected_rate_stays_within_trivial_bounds(
        loss in monotone_loss(),
        phi in 0.05..=1.0f64,
        frac in 0.0..=1.0f64,
        p0 in 0.1..0.9f64,
    ) {
        // gamma within the coupling cap phi / (1 - delta).
        let delta = 0.3;
        let gamma = (frac * (phi / (1.0 - delta)).min(1.0)).min(1.0);
        let model = DemandModel::new(DemandSpec::BinomialMinislot { p0 }, 8, delta).unwrap();
        let law = model.aggregate_law();
        let g = match loss {
            StateLoss::Threshold(tfn) => {
                minislot_core::loss::expected_rate_threshold(3.0, phi, gamma, &tfn, &law).unwrap()
            }
            other => expected_rate_convex(3.0, phi, gamma, &other, &law, delta).unwrap(),
        };
        prop_assert!(g >= -1e-12, "negative expected rate {g}");
        prop_assert!(g <= 3.0 * phi + 1e-12, "expected rate {g} above ceiling {}", 3.0 * phi);
    }

    #[test]
    fn queue_conserves_volume_and_respects_capacity(
        arrivals in proptest::collection::vec(0.0..0.12f64, 1..40),
        capacity in 0.01..0.1f64,
    ) {
        let mut q = UrllcQueue::new(capacity);
        let mut arrived = 0.0;
        let mut served = 0.0;
        for &a in &arrivals {
            arrived += a;
            let s = urllc_queue_step(&mut q, a);
            prop_assert!(s <= capacity + 1e-12);
            served += s;
        }
        prop_assert!((arrived - served - q.backlog()).abs() < 1e-9);
    }

    #[test]
    fn loss_model_round_trips_through_json(
        idx in 0usize..5,
        k in 0.0..=1.0f64,
        q in 1.0..4.0f64,
        a in 0.05..=1.0f64,
    ) {
        let model = match idx {
            0 => LossModel::Linear,
            1 => LossModel::Monomial { k, q },
            2 => LossModel::Exponential { kappa: q },
            3 => LossModel::PiecewiseQuadratic { tau: a, zero_loss_above: false },
            _ => LossModel::Threshold { alpha: AlphaSpec::Constant(a) },
        };
        let text = serde_json::to_string(&model).unwrap();
        let back: LossModel = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(model, back);
    }

    #[test]
    fn demand_samples_respect_the_admission_cap(
        spec_idx in 0usize..3,
        p in 0.05..0.95f64,
        delta in 0.1..0.9f64,
    ) {
        let spec = match spec_idx {
            0 => DemandSpec::BinomialMinislot { p0: p },
            1 => DemandSpec::UniformMinislot { lo: 0.0, hi: 0.2 },
            _ => DemandSpec::TruncatedParetoAggregate { eta: 2.0, x_min: 0.05 },
        };
        let model = match DemandModel::new(spec, 8, delta) {
            Ok(m) => m,
            Err(_) => return Ok(()), // spec/delta combination rejected up front
        };
        let cap = model.cap();
        let mut rng = substream(99, 0, 0);
        for _ in 0..20 {
            let MinislotSample { demands, .. } = model.sample_minislots(&mut rng);
            for &d in &demands {
                prop_assert!(d >= 0.0 && d <= cap + 1e-12);
            }
        }
    }
}

#[test]
fn config_round_trips_with_every_loss_family() {
    let cfg = SystemConfig {
        users: 5,
        states: 2,
        minislots: 8,
        delta: 0.4,
        rb_count: 50,
        state_probs: vec![0.25, 0.75],
        peak_rates: vec![vec![1.0, 2.0]; 5],
        utilities: vec![Utility::log_plus(1.0); 5],
        loss_models: vec![
            LossModel::Linear,
            LossModel::Monomial { k: 0.9, q: 2.0 },
            LossModel::Exponential { kappa: 0.5 },
            LossModel::PiecewiseQuadratic { tau: 0.7, zero_loss_above: false },
            LossModel::Threshold { alpha: AlphaSpec::PerState(vec![0.3, 0.6]) },
        ],
        demand: DemandSpec::UniformMinislot { lo: 0.0, hi: 0.05 },
    };
    let text = serde_json::to_string_pretty(&cfg).unwrap();
    let back: SystemConfig = serde_json::from_str(&text).unwrap();
    assert_eq!(cfg.loss_models, back.loss_models);
    assert_eq!(cfg.peak_rates, back.peak_rates);
    assert!(minislot_core::validate_config(&back).is_valid());
}
