//! Rate loss under puncturing: realized rates, expected rates and the
//! structural checks the per-slot optimizer relies on.
//!
//! A user granted bandwidth share `phi` at peak rate `r_hat` and hit by
//! absolute load `L` keeps
//!
//! ```text
//! rate = r_hat * phi * (1 - h(L / phi))
//! ```
//!
//! for the fractional (convex) families, and
//!
//! ```text
//! rate = r_hat * phi * 1{ L < phi * t(phi) }
//! ```
//!
//! for threshold families, where a load exactly at the threshold counts as
//! lost. With minislot-homogeneous placement the load is `L = gamma * D`, so
//! the expected rate is a function `g(phi, gamma)` of the decision variables
//! only; [`GFunction`] evaluates it (closed-form where the model/demand pair
//! allows) together with analytic partial derivatives where available.

use std::sync::Arc;

use rand::Rng;

use crate::config::{StateLoss, SystemConfig, ThresholdFn};
use crate::demand::{AggregateLaw, DemandModel};
use crate::error::{Error, Result};

/// Tolerance for load/coupling feasibility checks.
pub const FEAS_TOL: f64 = 1e-9;

/// Fraction of throughput lost at relative load `x in [0, 1]`.
///
/// Scaled thresholds depend on the allocation itself and are resolved by
/// [`realized_rate`]; asking for their fraction here is an error.
pub fn loss_fraction(loss: &StateLoss, x: f64) -> Result<f64> {
    if !(-1e-12..=1.0 + 1e-12).contains(&x) {
        return Err(Error::OutOfDomain(format!("relative load {x} outside [0, 1]")));
    }
    let x = x.clamp(0.0, 1.0);
    match loss {
        StateLoss::Monomial { k, q } => Ok(k * x.powf(*q)),
        StateLoss::Exponential { kappa } => Ok((kappa * (x - 1.0)).exp()),
        StateLoss::PiecewiseQuadratic { tau, zero_loss_above } => {
            if x <= *tau {
                Ok((x / tau) * (x / tau))
            } else if *zero_loss_above {
                Ok(0.0)
            } else {
                Ok(1.0)
            }
        }
        StateLoss::Threshold(ThresholdFn::Constant(alpha)) => {
            Ok(if x >= *alpha { 1.0 } else { 0.0 })
        }
        StateLoss::Threshold(ThresholdFn::Scaled(_)) => Err(Error::Unsupported(
            "allocation-scaled threshold needs the allocation; use realized_rate".into(),
        )),
    }
}

/// Throughput outcome of one slot for one user.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateResult {
    /// Realized rate in Mbps.
    pub rate: f64,
    /// Fraction of `r_hat * phi` lost to puncturing.
    pub loss_fraction: f64,
}

/// Realized rate of a user with allocation `phi > 0` under absolute load `L`.
pub fn realized_rate(r_hat: f64, phi: f64, load: f64, loss: &StateLoss) -> Result<RateResult> {
    if !(phi > 0.0) {
        return Err(Error::OutOfDomain(format!("allocation {phi} must be positive")));
    }
    if load < -FEAS_TOL || load > phi + FEAS_TOL {
        return Err(Error::Infeasible(format!(
            "load {load} outside [0, {phi}] for allocation {phi}"
        )));
    }
    let load = load.clamp(0.0, phi);
    let h = match loss {
        StateLoss::Threshold(tfn) => {
            let t = tfn.value(phi);
            if load < phi * t {
                0.0
            } else {
                1.0
            }
        }
        _ => loss_fraction(loss, load / phi)?,
    };
    Ok(RateResult {
        rate: r_hat * phi * (1.0 - h),
        loss_fraction: h,
    })
}

/// Expected rate `g(phi, gamma) = r_hat * phi * (1 - E[h(gamma D / phi)])`
/// for a fractional loss family under minislot-homogeneous placement.
///
/// Closed form for monomial families (`g = r_hat (phi - k gamma^q E[D^q] /
/// phi^(q-1))`) and exponential families (via the MGF); exhaustive sum for
/// finite-support demand; quadrature otherwise.
pub fn expected_rate_convex(
    r_hat: f64,
    phi: f64,
    gamma: f64,
    loss: &StateLoss,
    law: &AggregateLaw,
    delta: f64,
) -> Result<f64> {
    if loss.is_threshold() {
        return Err(Error::Unsupported(
            "threshold families are handled by expected_rate_threshold".into(),
        ));
    }
    if phi < -FEAS_TOL || gamma < -FEAS_TOL || (1.0 - delta) * gamma > phi + FEAS_TOL {
        return Err(Error::Infeasible(format!(
            "(phi, gamma) = ({phi}, {gamma}) violates (1 - delta) gamma <= phi with delta = {delta}"
        )));
    }
    Ok(convex_value(r_hat, phi.max(0.0), gamma.max(0.0), loss, law))
}

fn convex_value(r_hat: f64, phi: f64, gamma: f64, loss: &StateLoss, law: &AggregateLaw) -> f64 {
    if phi <= 0.0 {
        return 0.0;
    }
    let z = gamma / phi;
    let expected_h = match loss {
        StateLoss::Monomial { k, q } => k * z.powf(*q) * law.moment(*q),
        StateLoss::Exponential { kappa } => (-kappa).exp() * law.mgf(kappa * z),
        StateLoss::PiecewiseQuadratic { tau, zero_loss_above } => law.expect(|d| {
            let x = z * d;
            if x <= *tau {
                (x / tau) * (x / tau)
            } else if *zero_loss_above {
                0.0
            } else {
                1.0
            }
        }),
        StateLoss::Threshold(_) => unreachable!("rejected above"),
    };
    r_hat * phi * (1.0 - expected_h)
}

/// Expected rate `r_hat * phi * P(D < phi t(phi) / gamma)` for a threshold
/// family. `gamma = 0` means the user is never punctured and keeps `r_hat *
/// phi`.
pub fn expected_rate_threshold(
    r_hat: f64,
    phi: f64,
    gamma: f64,
    tfn: &ThresholdFn,
    law: &AggregateLaw,
) -> Result<f64> {
    if phi < -FEAS_TOL || gamma < -FEAS_TOL {
        return Err(Error::Infeasible(format!("negative decision ({phi}, {gamma})")));
    }
    let phi = phi.max(0.0);
    if phi == 0.0 {
        return Ok(0.0);
    }
    if gamma <= 0.0 {
        return Ok(r_hat * phi);
    }
    let x = phi * tfn.value(phi) / gamma;
    Ok(r_hat * phi * (1.0 - law.survival(x)))
}

/// Threshold-proportional placement weights `gamma_u = phi_u t_u(phi_u) /
/// sum_v phi_v t_v(phi_v)`.
///
/// This is the placement that equalizes loss probabilities across users and
/// attains the pooled bound; see [`pooled_loss_bound`].
pub fn tp_weights(phi: &[f64], tfns: &[ThresholdFn]) -> Result<Vec<f64>> {
    if phi.len() != tfns.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} allocations vs {} thresholds",
            phi.len(),
            tfns.len()
        )));
    }
    let masses: Vec<f64> = phi.iter().zip(tfns).map(|(&p, t)| p * t.value(p)).collect();
    let total: f64 = masses.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Infeasible(
            "threshold-proportional placement undefined: every phi * t(phi) is zero".into(),
        ));
    }
    Ok(masses.into_iter().map(|m| m / total).collect())
}

/// Per-user loss probabilities `P(D >= phi_u t_u(phi_u) / gamma_u)` under
/// minislot-homogeneous placement `gamma`.
///
/// Demand exactly at the threshold counts as loss (matching
/// [`realized_rate`]). Users with `gamma_u = 0` are never punctured; users
/// with `phi_u = 0` hold no resources to lose. Both get probability 0.
pub fn loss_probability(
    phi: &[f64],
    gamma: &[f64],
    tfns: &[ThresholdFn],
    law: &AggregateLaw,
) -> Result<Vec<f64>> {
    if phi.len() != gamma.len() || phi.len() != tfns.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} allocations, {} placements, {} thresholds",
            phi.len(),
            gamma.len(),
            tfns.len()
        )));
    }
    Ok(phi
        .iter()
        .zip(gamma)
        .zip(tfns)
        .map(|((&p, &g), t)| {
            if p <= 0.0 || g <= 0.0 {
                0.0
            } else {
                law.survival(p * t.value(p) / g)
            }
        })
        .collect())
}

/// Lower bound `P(D >= sum_u phi_u t_u(phi_u))` on the probability that *some*
/// user suffers a threshold loss, valid for every placement. Threshold-
/// proportional placement attains it exactly.
pub fn pooled_loss_bound(phi: &[f64], tfns: &[ThresholdFn], law: &AggregateLaw) -> Result<f64> {
    if phi.len() != tfns.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} allocations vs {} thresholds",
            phi.len(),
            tfns.len()
        )));
    }
    let total: f64 = phi.iter().zip(tfns).map(|(&p, t)| p * t.value(p)).sum();
    Ok(law.survival(total))
}

/// Result of a randomized midpoint-concavity probe.
#[derive(Clone, Debug)]
pub struct ProbeReport {
    /// Pairs sampled.
    pub pairs: usize,
    /// Pairs violating midpoint concavity beyond the tolerance.
    pub violations: usize,
    /// Largest observed `(g(x) + g(y))/2 - g((x+y)/2)` (positive = violation).
    pub worst_gap: f64,
    /// The pair attaining `worst_gap`, as `((phi, gamma), (phi, gamma))`.
    pub worst_pair: Option<((f64, f64), (f64, f64))>,
}

impl ProbeReport {
    pub fn is_concave(&self) -> bool {
        self.violations == 0
    }
}

/// Samples `pairs` random point pairs from the per-user feasible domain
/// `{0 <= gamma <= min(1, phi / (1 - delta)), phi in [0, 1]}` and tests the
/// midpoint inequality `g((x+y)/2) >= (g(x) + g(y))/2 - tol`.
pub fn concavity_probe<F, R>(g: F, delta: f64, pairs: usize, tol: f64, rng: &mut R) -> ProbeReport
where
    F: Fn(f64, f64) -> f64,
    R: Rng,
{
    let sample = |rng: &mut R| {
        let phi: f64 = rng.gen();
        let gmax = (phi / (1.0 - delta)).min(1.0);
        let gamma: f64 = rng.gen::<f64>() * gmax;
        (phi, gamma)
    };
    let mut violations = 0;
    let mut worst_gap = f64::NEG_INFINITY;
    let mut worst_pair = None;
    for _ in 0..pairs {
        let a = sample(rng);
        let b = sample(rng);
        let mid = ((a.0 + b.0) / 2.0, (a.1 + b.1) / 2.0);
        let gap = (g(a.0, a.1) + g(b.0, b.1)) / 2.0 - g(mid.0, mid.1);
        if gap > worst_gap {
            worst_gap = gap;
            worst_pair = Some((a, b));
        }
        if gap > tol {
            violations += 1;
        }
    }
    ProbeReport {
        pairs,
        violations,
        worst_gap,
        worst_pair,
    }
}

// ---------------------------------------------------------------------------
// Expected-rate evaluator used by the per-slot optimizer
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
enum GKind {
    Monomial { k: f64, q: f64, moment_q: f64 },
    Exponential { kappa: f64 },
    PiecewiseQuad { tau: f64, zero_above: bool },
    Threshold { tfn: ThresholdFn, has_pdf: bool },
}

/// One user's expected-rate function `g(phi, gamma)` in one channel state,
/// with the demand-law statistics it needs precomputed.
#[derive(Clone, Debug)]
pub struct GFunction {
    r_hat: f64,
    kind: GKind,
    law: Arc<AggregateLaw>,
}

impl GFunction {
    pub fn new(r_hat: f64, loss: StateLoss, law: Arc<AggregateLaw>) -> Self {
        let kind = match loss {
            StateLoss::Monomial { k, q } => GKind::Monomial {
                k,
                q,
                moment_q: law.moment(q),
            },
            StateLoss::Exponential { kappa } => GKind::Exponential { kappa },
            StateLoss::PiecewiseQuadratic { tau, zero_loss_above } => GKind::PiecewiseQuad {
                tau,
                zero_above: zero_loss_above,
            },
            StateLoss::Threshold(tfn) => GKind::Threshold {
                tfn,
                has_pdf: law.pdf(law.max_value() / 2.0).is_some(),
            },
        };
        GFunction { r_hat, kind, law }
    }

    pub fn r_hat(&self) -> f64 {
        self.r_hat
    }

    /// Expected rate at `(phi, gamma)`. Total on `phi, gamma >= 0`; values at
    /// slightly infeasible points extrapolate the defining formula so that
    /// projected-gradient line searches behave smoothly near the boundary.
    pub fn value(&self, phi: f64, gamma: f64) -> f64 {
        let phi = phi.max(0.0);
        let gamma = gamma.max(0.0);
        if phi <= 1e-300 {
            return 0.0;
        }
        match &self.kind {
            GKind::Monomial { k, q, moment_q } => {
                let z = gamma / phi;
                self.r_hat * phi * (1.0 - k * z.powf(*q) * moment_q)
            }
            GKind::Exponential { kappa } => {
                let z = gamma / phi;
                self.r_hat * phi * (1.0 - (-kappa).exp() * self.law.mgf(kappa * z))
            }
            GKind::PiecewiseQuad { tau, zero_above } => {
                let z = gamma / phi;
                let eh = self.law.expect(|d| {
                    let x = z * d;
                    if x <= *tau {
                        (x / tau) * (x / tau)
                    } else if *zero_above {
                        0.0
                    } else {
                        1.0
                    }
                });
                self.r_hat * phi * (1.0 - eh)
            }
            GKind::Threshold { tfn, .. } => {
                if gamma <= 0.0 {
                    return self.r_hat * phi;
                }
                let x = phi * tfn.value(phi) / gamma;
                self.r_hat * phi * (1.0 - self.law.survival(x))
            }
        }
    }

    /// Analytic partials `(dg/dphi, dg/dgamma)` where the model/demand pair
    /// admits them; `None` asks the caller to fall back to finite differences.
    pub fn grad(&self, phi: f64, gamma: f64) -> Option<(f64, f64)> {
        let phi = phi.max(1e-12);
        let gamma = gamma.max(0.0);
        let z = gamma / phi;
        match &self.kind {
            GKind::Monomial { k, q, moment_q } => {
                let dphi = self.r_hat * (1.0 + k * (q - 1.0) * z.powf(*q) * moment_q);
                let dgamma = -self.r_hat * k * q * z.powf(q - 1.0) * moment_q;
                Some((dphi, dgamma))
            }
            GKind::Exponential { kappa } => {
                let a = (-kappa).exp() * self.law.mgf(kappa * z);
                let a_prime = kappa * (-kappa).exp() * self.law.mgf_prime(kappa * z);
                Some((self.r_hat * (1.0 - a + z * a_prime), -self.r_hat * a_prime))
            }
            GKind::PiecewiseQuad { tau, zero_above } => {
                let atoms = self.law.atoms()?;
                let mut dphi_loss = 0.0;
                let mut dgamma_loss = 0.0;
                for &(d, p) in atoms {
                    let x = z * d;
                    if x <= *tau {
                        dphi_loss += p * (-(z * d / tau) * (z * d / tau));
                        dgamma_loss += p * 2.0 * z * d * d / (tau * tau);
                    } else if !*zero_above {
                        dphi_loss += p;
                    }
                }
                Some((self.r_hat * (1.0 - dphi_loss), -self.r_hat * dgamma_loss))
            }
            GKind::Threshold { tfn, has_pdf } => {
                if !has_pdf {
                    return None;
                }
                if gamma <= 1e-12 {
                    return Some((self.r_hat, 0.0));
                }
                let t = tfn.value(phi);
                let dt_dphi = match tfn {
                    ThresholdFn::Constant(_) => 0.0,
                    ThresholdFn::Scaled(c) => *c,
                };
                let w = phi * t;
                let dw_dphi = t + phi * dt_dphi;
                let x = w / gamma;
                let f = self.law.pdf(x)?;
                let cdf = 1.0 - self.law.survival(x);
                let dphi = self.r_hat * (cdf + phi * f * dw_dphi / gamma);
                let dgamma = -self.r_hat * phi * f * w / (gamma * gamma);
                Some((dphi, dgamma))
            }
        }
    }
}

/// Builds the `[state][user]` expected-rate evaluators for a config, sharing
/// one aggregate demand law across all of them.
pub fn build_state_evaluators(cfg: &SystemConfig) -> Result<(Arc<AggregateLaw>, Vec<Vec<GFunction>>)> {
    let model = DemandModel::new(cfg.demand.clone(), cfg.minislots, cfg.delta)?;
    let law = model.aggregate_law();
    let mut per_state = Vec::with_capacity(cfg.states);
    for s in 0..cfg.states {
        let mut row = Vec::with_capacity(cfg.users);
        for u in 0..cfg.users {
            row.push(GFunction::new(
                cfg.peak_rate(u, s),
                cfg.loss_models[u].at_state(s),
                law.clone(),
            ));
        }
        per_state.push(row);
    }
    Ok((law, per_state))
}
