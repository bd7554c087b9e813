//! Independent reference computations used to verify the scheduler and the
//! structural properties the per-slot optimizer relies on.
//!
//! Everything here is deliberately redundant with the fast paths elsewhere in
//! the crate: enumerations, brute-force searches and small closed-form
//! examples that other code must reproduce.

use crate::config::{AllocationMatrix, PlacementMatrix, StateLoss, SystemConfig};
use crate::demand::convolve_atoms;
use crate::error::{Error, Result};
use crate::loss::{build_state_evaluators, loss_fraction, GFunction};
use crate::sched::RATE_FLOOR;
use crate::solver::{project_feasible, simplex_grid, FD_STEP};

/// Long-run optimum of `sum_u U_u(mean rate)` over per-state shares and
/// placements, used as the benchmark online schedulers are measured against.
#[derive(Clone, Debug)]
pub struct OfflineOptimum {
    /// Optimal bandwidth shares, `[state][user]`.
    pub phi: AllocationMatrix,
    /// Optimal placement fractions, `[state][user]`.
    pub gamma: PlacementMatrix,
    /// Mean rate per user at the optimum.
    pub mean_rates: Vec<f64>,
    /// `sum_u U_u(mean_rate_u)` at the optimum.
    pub objective: f64,
    /// Ascent iterations used.
    pub iterations: usize,
}

fn mean_rates(
    cfg: &SystemConfig,
    evals: &[Vec<GFunction>],
    phi: &[Vec<f64>],
    gamma: &[Vec<f64>],
) -> Vec<f64> {
    let mut rates = vec![0.0; cfg.users];
    for s in 0..cfg.states {
        let pi = cfg.state_probs[s];
        if pi == 0.0 {
            continue;
        }
        for u in 0..cfg.users {
            rates[u] += pi * evals[s][u].value(phi[s][u], gamma[s][u]);
        }
    }
    rates
}

fn utility_of(cfg: &SystemConfig, rates: &[f64]) -> f64 {
    rates
        .iter()
        .zip(&cfg.utilities)
        .map(|(&r, u)| u.value(r.max(RATE_FLOOR)).expect("clamped positive"))
        .sum()
}

/// Maximizes `sum_u U_u(sum_s pi_s g_su(phi_su, gamma_su))` by projected
/// gradient ascent over all states jointly.
///
/// The objective is concave whenever every per-state expected-rate function
/// is concave (utilities are concave and increasing), so the monotone ascent
/// converges to the global long-run optimum.
pub fn offline_optimum(cfg: &SystemConfig) -> Result<OfflineOptimum> {
    let report = crate::config::validate_config(cfg);
    if !report.is_valid() {
        return Err(Error::invalid("config", report.to_string()));
    }
    let (_, evals) = build_state_evaluators(cfg)?;
    let n = cfg.users;
    let s_count = cfg.states;
    let mut phi = vec![vec![1.0 / n as f64; n]; s_count];
    let mut gamma = vec![vec![1.0 / n as f64; n]; s_count];

    let mut rates = mean_rates(cfg, &evals, &phi, &gamma);
    let mut obj = utility_of(cfg, &rates);
    let mut step_memory = 0.25;
    let mut iterations = 0;

    for _ in 0..20_000 {
        iterations += 1;
        // Gradient of U(mean rates) through the chain rule.
        let weights: Vec<f64> = (0..n)
            .map(|u| cfg.utilities[u].marginal(rates[u].max(RATE_FLOOR)))
            .collect();
        let mut d_phi = vec![vec![0.0; n]; s_count];
        let mut d_gamma = vec![vec![0.0; n]; s_count];
        for s in 0..s_count {
            let pi = cfg.state_probs[s];
            if pi == 0.0 {
                continue;
            }
            for u in 0..n {
                let g = &evals[s][u];
                let (dp, dg) = g.grad(phi[s][u], gamma[s][u]).unwrap_or_else(|| {
                    let dp = (g.value(phi[s][u] + FD_STEP, gamma[s][u])
                        - g.value(phi[s][u] - FD_STEP, gamma[s][u]))
                        / (2.0 * FD_STEP);
                    let dg = (g.value(phi[s][u], gamma[s][u] + FD_STEP)
                        - g.value(phi[s][u], gamma[s][u] - FD_STEP))
                        / (2.0 * FD_STEP);
                    (dp, dg)
                });
                d_phi[s][u] = weights[u] * pi * dp;
                d_gamma[s][u] = weights[u] * pi * dg;
            }
        }
        // Cap the direction at unit sup-norm so cold-start marginals (up to
        // 1/RATE_FLOOR) cannot fling candidates far outside the feasible box.
        let g_inf = d_phi
            .iter()
            .chain(d_gamma.iter())
            .flat_map(|row| row.iter())
            .fold(0.0f64, |m, &v| m.max(v.abs()));
        if g_inf > 1.0 {
            for row in d_phi.iter_mut().chain(d_gamma.iter_mut()) {
                for v in row.iter_mut() {
                    *v /= g_inf;
                }
            }
        }

        let mut step = step_memory;
        let mut accepted = false;
        for _ in 0..60 {
            let mut cand_phi = phi.clone();
            let mut cand_gamma = gamma.clone();
            for s in 0..s_count {
                for u in 0..n {
                    cand_phi[s][u] += step * d_phi[s][u];
                    cand_gamma[s][u] += step * d_gamma[s][u];
                }
                project_feasible(&mut cand_phi[s], &mut cand_gamma[s], cfg.delta)?;
            }
            let cand_rates = mean_rates(cfg, &evals, &cand_phi, &cand_gamma);
            let cand_obj = utility_of(cfg, &cand_rates);
            if cand_obj > obj + 1e-15 {
                let gain = cand_obj - obj;
                phi = cand_phi;
                gamma = cand_gamma;
                rates = cand_rates;
                obj = cand_obj;
                step_memory = (step * 2.0).min(1.0);
                accepted = true;
                if gain < 1e-10 {
                    return Ok(OfflineOptimum {
                        phi: AllocationMatrix::new(phi),
                        gamma: PlacementMatrix::new(gamma),
                        mean_rates: rates,
                        objective: obj,
                        iterations,
                    });
                }
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok(OfflineOptimum {
        phi: AllocationMatrix::new(phi),
        gamma: PlacementMatrix::new(gamma),
        mean_rates: rates,
        objective: obj,
        iterations,
    })
}

// ---------------------------------------------------------------------------
// Two-user linear reference example
// ---------------------------------------------------------------------------

/// Mean sum rates of the canonical two-user example with linear loss: two
/// per-user peaks in {2, 1} Mbps, all four joint states equally likely,
/// deterministic low-latency demand of half the band (`rho = 1/2`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearExampleRates {
    /// Equal static split, no low-latency traffic.
    pub static_no_urllc: f64,
    /// Equal static split, demand placed uniformly at random.
    pub static_random: f64,
    /// Full band to the best user each state, demand landing on it.
    pub opportunistic: f64,
}

/// Per-user peaks `[user][state]` of the reference example.
pub fn linear_example_peaks() -> Vec<Vec<f64>> {
    vec![vec![2.0, 2.0, 1.0, 1.0], vec![1.0, 2.0, 1.0, 2.0]]
}

/// Computes the three reference mean sum rates by exhaustive enumeration of
/// the four joint states (no simulation, no optimizer).
pub fn two_user_linear_example() -> LinearExampleRates {
    let peaks = linear_example_peaks();
    let rho = 0.5;
    let states = 4;
    let pi = 1.0 / states as f64;

    let mut static_no_urllc = 0.0;
    let mut static_random = 0.0;
    let mut opportunistic = 0.0;
    for s in 0..states {
        let (r1, r2) = (peaks[0][s], peaks[1][s]);
        // Equal split: each user keeps half the band.
        static_no_urllc += pi * 0.5 * (r1 + r2);
        // Linear loss removes exactly the punctured fraction in expectation,
        // and uniform placement spreads rho over the band: factor (1 - rho).
        static_random += pi * 0.5 * (r1 + r2) * (1.0 - rho);
        // The whole band goes to the peak user, which then absorbs all of the
        // demand: max(r) * (1 - rho).
        opportunistic += pi * r1.max(r2) * (1.0 - rho);
    }
    LinearExampleRates {
        static_no_urllc,
        static_random,
        opportunistic,
    }
}

// ---------------------------------------------------------------------------
// Punctured/unpunctured equivalence
// ---------------------------------------------------------------------------

/// Maps shares of the punctured system with mean per-user loads
/// `mean_loads_u = rho * gamma_u` to equivalent shares of an unpunctured
/// system: `phi'_u = (phi_u - rho gamma_u) / (1 - rho)`.
///
/// When `phi` and `gamma` both lie on the simplex the image does too, and the
/// linear-loss expected rate satisfies
/// `r_hat (phi_u - rho gamma_u) = (1 - rho) * r_hat * phi'_u` identically, so
/// optimizing either system yields the other's optimum.
pub fn equivalent_unpunctured_shares(phi: &[f64], gamma: &[f64], rho: f64) -> Result<Vec<f64>> {
    if phi.len() != gamma.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} shares vs {} placements",
            phi.len(),
            gamma.len()
        )));
    }
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::invalid("rho", "mean demand must lie in [0, 1)"));
    }
    let shares: Vec<f64> = phi
        .iter()
        .zip(gamma)
        .map(|(&p, &g)| (p - rho * g) / (1.0 - rho))
        .collect();
    if let Some(&bad) = shares.iter().find(|&&x| x < -1e-12) {
        return Err(Error::Infeasible(format!(
            "share {bad} negative: placement exceeds phi/rho for some user"
        )));
    }
    Ok(shares)
}

// ---------------------------------------------------------------------------
// Minislot-dependent placement brute force
// ---------------------------------------------------------------------------

/// Best weighted expected rates over minislot-dependent and
/// minislot-homogeneous placements, for a fixed share vector.
#[derive(Clone, Debug)]
pub struct DependentSearch {
    /// Optimum over per-minislot placement fractions on the grid.
    pub best_dependent: f64,
    /// Optimum over placements constant across minislots, same grid.
    pub best_homogeneous: f64,
    /// Grid spacing used.
    pub step: f64,
}

/// Exhaustively searches placements that may differ per minislot and compares
/// them against placements held constant across minislots, both on the same
/// simplex grid (two users, fractional loss families only).
///
/// Placements are chosen before demand realizes; loads are
/// `L_u = sum_m gamma_(u,m) D_m` with `D_m` i.i.d. across minislots with the
/// given atom distribution. Demand convexity makes spreading optimal, so the
/// dependent search should never beat the homogeneous one by more than grid
/// rounding.
pub fn minislot_dependent_bruteforce(
    peaks: &[f64],
    losses: &[StateLoss],
    weights: &[f64],
    phi: &[f64],
    minislot_atoms: &[(f64, f64)],
    minislots: usize,
    delta: f64,
    step: f64,
) -> Result<DependentSearch> {
    let n = peaks.len();
    if n != 2 {
        return Err(Error::Unsupported(format!(
            "dependent-placement brute force supports exactly 2 users, got {n}"
        )));
    }
    if losses.len() != n || weights.len() != n || phi.len() != n {
        return Err(Error::DimensionMismatch("peaks/losses/weights/phi length".into()));
    }
    if losses.iter().any(StateLoss::is_threshold) {
        return Err(Error::Unsupported(
            "dependent-placement brute force handles fractional families only".into(),
        ));
    }
    if minislots == 0 || minislots > 4 {
        return Err(Error::invalid("minislots", "supported range is 1..=4"));
    }
    let mass: f64 = minislot_atoms.iter().map(|a| a.1).sum();
    if (mass - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("minislot_atoms", "probabilities must sum to 1"));
    }

    // Joint demand outcomes (product law over minislots).
    let mut outcomes: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 1.0)];
    for _ in 0..minislots {
        let mut next = Vec::with_capacity(outcomes.len() * minislot_atoms.len());
        for (ds, p) in &outcomes {
            for &(d, q) in minislot_atoms {
                let mut ds2 = ds.clone();
                ds2.push(d);
                next.push((ds2, p * q));
            }
        }
        outcomes = next;
    }

    let cap = 1.0 / (1.0 - delta);
    let steps = (1.0 / step).round() as usize;
    // Per-minislot options: gamma_m = (b, 1 - b) on the grid, respecting the
    // per-user placement cap gamma_(u,m) <= phi_u / (1 - delta).
    let options: Vec<f64> = (0..=steps)
        .map(|k| k as f64 / steps as f64)
        .filter(|&b| b <= phi[0] * cap + 1e-12 && 1.0 - b <= phi[1] * cap + 1e-12)
        .collect();
    if options.is_empty() {
        return Err(Error::Infeasible("no grid placement satisfies the caps".into()));
    }

    let evaluate = |gammas: &[f64]| -> f64 {
        // gammas[m] is user 0's fraction of minislot m's demand.
        let mut total = 0.0;
        for (ds, p) in &outcomes {
            let mut l0 = 0.0;
            for (m, &d) in ds.iter().enumerate() {
                l0 += gammas[m] * d;
            }
            let l1: f64 = ds.iter().sum::<f64>() - l0;
            for (u, load) in [l0, l1].into_iter().enumerate() {
                let x = (load / phi[u]).min(1.0);
                let h = loss_fraction(&losses[u], x).unwrap_or(1.0);
                total += p * weights[u] * peaks[u] * phi[u] * (1.0 - h);
            }
        }
        total
    };

    // Homogeneous: one option applied to every minislot.
    let mut best_homogeneous = f64::NEG_INFINITY;
    for &b in &options {
        best_homogeneous = best_homogeneous.max(evaluate(&vec![b; minislots]));
    }

    // Dependent: full product over minislots.
    let mut best_dependent = f64::NEG_INFINITY;
    let mut idx = vec![0usize; minislots];
    loop {
        let gammas: Vec<f64> = idx.iter().map(|&i| options[i]).collect();
        best_dependent = best_dependent.max(evaluate(&gammas));
        // Odometer increment.
        let mut m = 0;
        loop {
            if m == minislots {
                return Ok(DependentSearch {
                    best_dependent,
                    best_homogeneous,
                    step,
                });
            }
            idx[m] += 1;
            if idx[m] < options.len() {
                break;
            }
            idx[m] = 0;
            m += 1;
        }
    }
}

// ---------------------------------------------------------------------------
// Slicing vs. pooling comparison
// ---------------------------------------------------------------------------

/// Expected losses of serving a user on `m1` dedicated minislots versus a
/// proportional share of all `m1 + m2` minislots.
#[derive(Clone, Copy, Debug)]
pub struct SlicingComparison {
    /// `E[h(R_1 + ... + R_m1)]`: the user absorbs its minislots' entire load.
    pub sliced_loss: f64,
    /// `E[h(nu * (R_1 + ... + R_(m1+m2)))]` with `nu = m1 / (m1 + m2)`.
    pub pooled_loss: f64,
}

/// Computes both sides by exact convolution of the per-minislot relative-load
/// atoms. For convex `h`, pooling averages the load over more minislots and
/// can only reduce the expected loss: `sliced_loss >= pooled_loss`.
pub fn slicing_comparison(
    loss: &StateLoss,
    minislot_atoms: &[(f64, f64)],
    m1: usize,
    m2: usize,
) -> Result<SlicingComparison> {
    if m1 == 0 {
        return Err(Error::invalid("m1", "the sliced system needs at least one minislot"));
    }
    if loss.is_threshold() {
        return Err(Error::Unsupported(
            "slicing comparison is stated for fractional families".into(),
        ));
    }
    let mass: f64 = minislot_atoms.iter().map(|a| a.1).sum();
    if (mass - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("minislot_atoms", "probabilities must sum to 1"));
    }
    let nu = m1 as f64 / (m1 + m2) as f64;

    let mut sum_m1: Vec<(f64, f64)> = vec![(0.0, 1.0)];
    for _ in 0..m1 {
        sum_m1 = convolve_atoms(&sum_m1, minislot_atoms);
    }
    let mut sum_all = sum_m1.clone();
    for _ in 0..m2 {
        sum_all = convolve_atoms(&sum_all, minislot_atoms);
    }

    let expect_h = |atoms: &[(f64, f64)], scale: f64| -> Result<f64> {
        let mut e = 0.0;
        for &(v, p) in atoms {
            e += p * loss_fraction(loss, (scale * v).clamp(0.0, 1.0))?;
        }
        Ok(e)
    };
    Ok(SlicingComparison {
        sliced_loss: expect_h(&sum_m1, 1.0)?,
        pooled_loss: expect_h(&sum_all, nu)?,
    })
}

/// Convenience: all simplex grid rows for `users` dimensions with `steps`
/// increments (re-exported for brute-force comparisons in tests).
pub fn placement_grid(users: usize, steps: usize) -> Vec<Vec<f64>> {
    simplex_grid(users, steps)
}
