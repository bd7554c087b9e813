//! System model: users, channel states, slot structure and loss families.
//!
//! A slot is the eMBB scheduling unit. It is divided into `minislots` equal
//! minislots, each spanning the whole bandwidth, so one minislot holds a
//! fraction `f = 1/minislots` of the slot's resources. eMBB users are granted
//! bandwidth fractions `phi` at the slot boundary; low-latency traffic arrives
//! during the slot and is superposed ("punctured") onto those grants
//! immediately, minislot by minislot, according to placement fractions
//! `gamma`. A user whose allocation is hit by relative load `x = L/phi` keeps
//! `1 - h(x)` of its peak throughput, where `h` is the user's loss model.
//!
//! The sharing parameter `delta` bounds the per-minislot low-latency volume to
//! `f * (1 - delta)` and couples placements to allocations through
//! `(1 - delta) * gamma_u <= phi_u`, which guarantees no user's grant can be
//! punctured beyond its size.

use serde::{Deserialize, Serialize};

use crate::demand::DemandSpec;
use crate::error::{Error, Result};

/// Tolerance for row sums of allocation/placement matrices and probabilities.
pub const ROW_SUM_TOL: f64 = 1e-9;
/// Tolerance for the `(1 - delta) * gamma <= phi` coupling check.
pub const COUPLING_TOL: f64 = 1e-9;

fn default_minislots() -> usize {
    8
}

fn default_rb_count() -> usize {
    100
}

/// Full description of one scheduling scenario.
///
/// Serializes to/from the JSON config format accepted by the CLI. `peak_rates`
/// is indexed `[user][state]` in Mbps; `state_probs` is the channel-state
/// distribution sampled i.i.d. per slot.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Number of eMBB users.
    pub users: usize,
    /// Number of network (channel) states.
    pub states: usize,
    /// Minislots per slot; the minislot resource fraction is `1/minislots`.
    #[serde(default = "default_minislots")]
    pub minislots: usize,
    /// Sharing parameter in (0, 1); see module docs.
    pub delta: f64,
    /// Resource blocks per slot for RB-granular schedulers.
    #[serde(default = "default_rb_count")]
    pub rb_count: usize,
    /// Probability of each channel state; must sum to 1.
    pub state_probs: Vec<f64>,
    /// Peak rate of each user in each state, `[user][state]`, Mbps.
    pub peak_rates: Vec<Vec<f64>>,
    /// Per-user utility functions.
    pub utilities: Vec<Utility>,
    /// Per-user loss models.
    pub loss_models: Vec<LossModel>,
    /// Low-latency demand process shared by all users.
    pub demand: DemandSpec,
}

impl SystemConfig {
    /// Resource fraction of one minislot, `f = 1/minislots`.
    pub fn minislot_cap(&self) -> f64 {
        1.0 / self.minislots as f64
    }

    /// Peak rate of `user` in `state`.
    pub fn peak_rate(&self, user: usize, state: usize) -> f64 {
        self.peak_rates[user][state]
    }
}

/// Logarithmic utility with an additive constant: `U(r) = ln(r) + offset`.
///
/// The offset shifts plotted utilities into a convenient range; it does not
/// change any scheduling decision because the marginal `U'(r) = 1/r` is
/// offset-free.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct Utility {
    #[serde(default)]
    pub offset: f64,
}

impl Utility {
    pub fn log_plus(offset: f64) -> Self {
        Utility { offset }
    }

    /// `U(r) = ln(r) + offset`; `r` must be positive.
    pub fn value(&self, r: f64) -> Result<f64> {
        if r <= 0.0 {
            return Err(Error::OutOfDomain(format!("utility undefined at rate {r}")));
        }
        Ok(r.ln() + self.offset)
    }

    /// Marginal utility `U'(r) = 1/r`.
    pub fn marginal(&self, r: f64) -> f64 {
        1.0 / r
    }
}

/// Per-user throughput-loss family mapped over relative load `x in [0, 1]`.
///
/// Non-threshold families give a fractional loss `h(x)`; threshold families
/// lose everything once the relative load reaches the threshold and nothing
/// below it.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossModel {
    /// `h(x) = x`: loss proportional to punctured fraction.
    Linear,
    /// `h(x) = k * x^q`, `k >= 0`, `q >= 1`.
    Monomial { k: f64, q: f64 },
    /// `h(x) = exp(kappa * (x - 1))`, `kappa > 0`. Note `h(0) = e^-kappa > 0`:
    /// this family carries a load-independent floor by construction.
    Exponential { kappa: f64 },
    /// `h(x) = (x / tau)^2` up to `x = tau` and total loss beyond.
    ///
    /// With `zero_loss_above` set, loads beyond `tau` instead produce *no*
    /// loss. That variant is non-monotone and fails validation; it exists only
    /// so the discontinuous alternative can be evaluated side by side.
    PiecewiseQuadratic {
        tau: f64,
        #[serde(default)]
        zero_loss_above: bool,
    },
    /// All-or-nothing loss at a per-state relative threshold `alpha`.
    Threshold { alpha: AlphaSpec },
    /// All-or-nothing loss at a threshold proportional to the allocation:
    /// `t(phi) = c * phi` with `0 < c <= 1`.
    ThresholdScaled { c: f64 },
}

impl LossModel {
    /// Resolves the family at one channel state into a flat, copyable view.
    pub fn at_state(&self, state: usize) -> StateLoss {
        match self {
            LossModel::Linear => StateLoss::Monomial { k: 1.0, q: 1.0 },
            LossModel::Monomial { k, q } => StateLoss::Monomial { k: *k, q: *q },
            LossModel::Exponential { kappa } => StateLoss::Exponential { kappa: *kappa },
            LossModel::PiecewiseQuadratic { tau, zero_loss_above } => StateLoss::PiecewiseQuadratic {
                tau: *tau,
                zero_loss_above: *zero_loss_above,
            },
            LossModel::Threshold { alpha } => {
                StateLoss::Threshold(ThresholdFn::Constant(alpha.at(state)))
            }
            LossModel::ThresholdScaled { c } => StateLoss::Threshold(ThresholdFn::Scaled(*c)),
        }
    }

    /// Whether this is an all-or-nothing (threshold) family.
    pub fn is_threshold(&self) -> bool {
        matches!(self, LossModel::Threshold { .. } | LossModel::ThresholdScaled { .. })
    }
}

/// Threshold value per state: one shared constant or one constant per state.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum AlphaSpec {
    Constant(f64),
    PerState(Vec<f64>),
}

impl AlphaSpec {
    pub fn at(&self, state: usize) -> f64 {
        match self {
            AlphaSpec::Constant(a) => *a,
            AlphaSpec::PerState(v) => v[state],
        }
    }
}

/// Relative-load threshold as a function of the allocation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ThresholdFn {
    /// `t(phi) = alpha`, independent of the allocation.
    Constant(f64),
    /// `t(phi) = c * phi`.
    Scaled(f64),
}

impl ThresholdFn {
    pub fn value(&self, phi: f64) -> f64 {
        match self {
            ThresholdFn::Constant(a) => *a,
            ThresholdFn::Scaled(c) => c * phi,
        }
    }
}

/// One user's loss model resolved at one channel state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StateLoss {
    /// `h(x) = k * x^q`; `q = 1, k = 1` is the linear model.
    Monomial { k: f64, q: f64 },
    /// `h(x) = exp(kappa * (x - 1))`.
    Exponential { kappa: f64 },
    /// `h(x) = min((x/tau)^2, 1)` (or the non-monotone zero-above variant).
    PiecewiseQuadratic { tau: f64, zero_loss_above: bool },
    /// `h(x) = 1` iff `x >= t(phi)`.
    Threshold(ThresholdFn),
}

impl StateLoss {
    pub fn is_threshold(&self) -> bool {
        matches!(self, StateLoss::Threshold(_))
    }
}

/// Per-state rows of eMBB bandwidth shares, indexed `[state][user]`.
///
/// Every row lies on the unit simplex: entries in `[0, 1]` summing to 1.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AllocationMatrix {
    pub rows: Vec<Vec<f64>>,
}

/// Per-state rows of low-latency placement fractions, same shape and
/// normalization as [`AllocationMatrix`].
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PlacementMatrix {
    pub rows: Vec<Vec<f64>>,
}

fn check_rows(rows: &[Vec<f64>], users: usize, what: &str) -> Result<()> {
    for (s, row) in rows.iter().enumerate() {
        if row.len() != users {
            return Err(Error::DimensionMismatch(format!(
                "{what} row {s} has {} entries, expected {users}",
                row.len()
            )));
        }
        let mut sum = 0.0;
        for (u, &x) in row.iter().enumerate() {
            if !(0.0..=1.0 + ROW_SUM_TOL).contains(&x) {
                return Err(Error::invalid(
                    what,
                    format!("entry [{s}][{u}] = {x} outside [0, 1]"),
                ));
            }
            sum += x;
        }
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::invalid(what, format!("row {s} sums to {sum}, expected 1")));
        }
    }
    Ok(())
}

impl AllocationMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Self {
        AllocationMatrix { rows }
    }

    /// Uniform shares `1/users` in every state.
    pub fn uniform(states: usize, users: usize) -> Self {
        AllocationMatrix {
            rows: vec![vec![1.0 / users as f64; users]; states],
        }
    }

    pub fn validate(&self, users: usize) -> Result<()> {
        check_rows(&self.rows, users, "allocation matrix")
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.rows[state]
    }
}

impl PlacementMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Self {
        PlacementMatrix { rows }
    }

    pub fn uniform(states: usize, users: usize) -> Self {
        PlacementMatrix {
            rows: vec![vec![1.0 / users as f64; users]; states],
        }
    }

    pub fn validate(&self, users: usize) -> Result<()> {
        check_rows(&self.rows, users, "placement matrix")
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.rows[state]
    }
}

/// Checks the coupling `(1 - delta) * gamma_u^s <= phi_u^s` for every user and
/// state, after validating both matrices individually.
///
/// Together with the per-minislot demand cap `f * (1 - delta)` this guarantees
/// every realized load satisfies `L_u <= phi_u` almost surely.
pub fn check_joint_feasibility(
    phi: &AllocationMatrix,
    gamma: &PlacementMatrix,
    delta: f64,
) -> Result<bool> {
    if phi.rows.len() != gamma.rows.len() {
        return Err(Error::DimensionMismatch(format!(
            "allocation has {} states, placement has {}",
            phi.rows.len(),
            gamma.rows.len()
        )));
    }
    let users = phi.rows.first().map_or(0, Vec::len);
    phi.validate(users)?;
    gamma.validate(users)?;
    for (p_row, g_row) in phi.rows.iter().zip(&gamma.rows) {
        for (&p, &g) in p_row.iter().zip(g_row) {
            if (1.0 - delta) * g > p + COUPLING_TOL {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// One violated configuration invariant.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    /// Config field (or derived quantity) at fault.
    pub field: String,
    /// Human-readable statement of the broken constraint.
    pub constraint: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.constraint)
    }
}

/// Outcome of [`validate_config`]: empty means the config is usable.
#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, field: &str, constraint: impl Into<String>) {
        self.violations.push(Violation {
            field: field.to_string(),
            constraint: constraint.into(),
        });
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.violations.is_empty() {
            write!(f, "config valid")
        } else {
            for v in &self.violations {
                writeln!(f, "{v}")?;
            }
            Ok(())
        }
    }
}

/// Number of sample points used for the loss-monotonicity spot check.
const MONOTONICITY_SAMPLES: usize = 201;

fn check_loss_model(report: &mut ValidationReport, u: usize, model: &LossModel, states: usize) {
    let field = format!("loss_models[{u}]");
    match model {
        LossModel::Linear => {}
        LossModel::Monomial { k, q } => {
            if *k < 0.0 {
                report.push(&field, format!("k = {k} must be >= 0"));
            }
            if *q < 1.0 {
                report.push(&field, format!("q = {q} must be >= 1"));
            }
            if *k > 1.0 {
                // h must map [0, 1] into [0, 1].
                report.push(&field, format!("k = {k} yields h(1) = {k} > 1"));
            }
        }
        LossModel::Exponential { kappa } => {
            if *kappa <= 0.0 {
                report.push(&field, format!("kappa = {kappa} must be > 0"));
            }
        }
        LossModel::PiecewiseQuadratic { tau, .. } => {
            if !(*tau > 0.0 && *tau <= 1.0) {
                report.push(&field, format!("tau = {tau} must be in (0, 1]"));
            }
        }
        LossModel::Threshold { alpha } => {
            let check = |report: &mut ValidationReport, s: Option<usize>, a: f64| {
                if !(a > 0.0 && a <= 1.0) {
                    let at = s.map_or(String::new(), |s| format!(" (state {s})"));
                    report.push(&field, format!("alpha = {a}{at} must be in (0, 1]"));
                }
            };
            match alpha {
                AlphaSpec::Constant(a) => check(report, None, *a),
                AlphaSpec::PerState(v) => {
                    if v.len() != states {
                        report.push(&field, format!("alpha has {} entries, expected {states}", v.len()));
                    }
                    for (s, &a) in v.iter().enumerate() {
                        check(report, Some(s), a);
                    }
                }
            }
        }
        LossModel::ThresholdScaled { c } => {
            if !(*c > 0.0 && *c <= 1.0) {
                report.push(&field, format!("c = {c} must be in (0, 1]"));
            }
        }
    }

    // Spot check monotonicity of the fractional families on a uniform grid.
    // Threshold families are step functions and monotone by construction.
    if !model.is_threshold() {
        let loss = model.at_state(0);
        let mut prev = f64::NEG_INFINITY;
        for i in 0..MONOTONICITY_SAMPLES {
            let x = i as f64 / (MONOTONICITY_SAMPLES - 1) as f64;
            let h = crate::loss::loss_fraction(&loss, x).unwrap_or(f64::NAN);
            if !(0.0 - 1e-12..=1.0 + 1e-12).contains(&h) {
                report.push(&field, format!("h({x}) = {h} outside [0, 1]"));
                break;
            }
            if h < prev - 1e-12 {
                report.push(&field, format!("h not non-decreasing near x = {x}"));
                break;
            }
            prev = h;
        }
    }
}

/// Checks every structural invariant of a [`SystemConfig`] and returns the
/// full list of violations (empty list = valid).
pub fn validate_config(cfg: &SystemConfig) -> ValidationReport {
    let mut report = ValidationReport::default();

    if cfg.users == 0 {
        report.push("users", "must be >= 1");
    }
    if cfg.states == 0 {
        report.push("states", "must be >= 1");
    }
    if cfg.minislots == 0 {
        report.push("minislots", "must be >= 1");
    }
    if cfg.rb_count == 0 {
        report.push("rb_count", "must be >= 1");
    }
    if !(cfg.delta > 0.0 && cfg.delta < 1.0) {
        report.push("delta", format!("{} not in open interval (0, 1)", cfg.delta));
    }

    if cfg.state_probs.len() != cfg.states {
        report.push(
            "state_probs",
            format!("{} entries, expected {}", cfg.state_probs.len(), cfg.states),
        );
    } else {
        let sum: f64 = cfg.state_probs.iter().sum();
        if cfg.state_probs.iter().any(|&p| p < 0.0) {
            report.push("state_probs", "negative probability");
        }
        if (sum - 1.0).abs() > 1e-12 {
            report.push("state_probs", format!("sum {sum} != 1 (tolerance 1e-12)"));
        }
    }

    if cfg.peak_rates.len() != cfg.users {
        report.push(
            "peak_rates",
            format!("{} rows, expected {}", cfg.peak_rates.len(), cfg.users),
        );
    } else {
        for (u, row) in cfg.peak_rates.iter().enumerate() {
            if row.len() != cfg.states {
                report.push(
                    "peak_rates",
                    format!("row {u} has {} entries, expected {}", row.len(), cfg.states),
                );
            } else if row.iter().any(|&r| !(r >= 0.0) || !r.is_finite()) {
                report.push("peak_rates", format!("row {u} contains a negative or non-finite rate"));
            }
        }
    }

    if cfg.utilities.len() != cfg.users {
        report.push(
            "utilities",
            format!("{} entries, expected {}", cfg.utilities.len(), cfg.users),
        );
    }

    if cfg.loss_models.len() != cfg.users {
        report.push(
            "loss_models",
            format!("{} entries, expected {}", cfg.loss_models.len(), cfg.users),
        );
    } else {
        for (u, model) in cfg.loss_models.iter().enumerate() {
            check_loss_model(&mut report, u, model, cfg.states);
        }
    }

    if cfg.minislots > 0 && cfg.delta > 0.0 && cfg.delta < 1.0 {
        let cap = cfg.minislot_cap() * (1.0 - cfg.delta);
        for v in cfg.demand.check(cap) {
            report.push("demand", v);
        }
    }

    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::DemandSpec;

    fn small_config() -> SystemConfig {
        SystemConfig {
            users: 2,
            states: 2,
            minislots: 8,
            delta: 0.3,
            rb_count: 100,
            state_probs: vec![0.5, 0.5],
            peak_rates: vec![vec![2.0, 4.0], vec![4.0, 2.0]],
            utilities: vec![Utility::log_plus(0.0); 2],
            loss_models: vec![LossModel::Linear, LossModel::Monomial { k: 1.0, q: 2.0 }],
            demand: DemandSpec::BinomialMinislot { p0: 0.5 },
        }
    }

    #[test]
    fn valid_config_passes() {
        let report = validate_config(&small_config());
        assert!(report.is_valid(), "{report}");
    }

    #[test]
    fn bad_probabilities_and_delta_are_reported() {
        let mut cfg = small_config();
        cfg.state_probs = vec![0.6, 0.6];
        cfg.delta = 1.0;
        let report = validate_config(&cfg);
        assert!(report.violations.iter().any(|v| v.field == "state_probs"));
        assert!(report.violations.iter().any(|v| v.field == "delta"));
    }

    #[test]
    fn non_monotone_literal_variant_is_flagged() {
        let mut cfg = small_config();
        cfg.loss_models[0] = LossModel::PiecewiseQuadratic {
            tau: 0.7,
            zero_loss_above: true,
        };
        let report = validate_config(&cfg);
        assert!(
            report.violations.iter().any(|v| v.constraint.contains("non-decreasing")),
            "{report}"
        );
    }

    #[test]
    fn minislot_cap_times_minislots_is_one() {
        let cfg = small_config();
        assert!((cfg.minislot_cap() * cfg.minislots as f64 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn joint_feasibility_detects_coupling_violation() {
        let phi = AllocationMatrix::new(vec![vec![0.2, 0.8]]);
        let ok = PlacementMatrix::new(vec![vec![0.25, 0.75]]);
        let bad = PlacementMatrix::new(vec![vec![0.5, 0.5]]);
        // delta = 0.3: (1 - 0.3) * 0.25 = 0.175 <= 0.2 but 0.7 * 0.5 = 0.35 > 0.2.
        assert!(check_joint_feasibility(&phi, &ok, 0.3).unwrap());
        assert!(!check_joint_feasibility(&phi, &bad, 0.3).unwrap());
    }

    #[test]
    fn matrices_round_trip_through_json() {
        let phi = AllocationMatrix::new(vec![vec![0.25, 0.75], vec![0.5, 0.5]]);
        let text = serde_json::to_string(&phi).unwrap();
        let back: AllocationMatrix = serde_json::from_str(&text).unwrap();
        assert_eq!(phi, back);
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = small_config();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back: SystemConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg.peak_rates, back.peak_rates);
        assert_eq!(cfg.loss_models, back.loss_models);
        assert_eq!(cfg.minislots, back.minislots);
    }

    #[test]
    fn alpha_spec_accepts_scalar_and_vector_forms() {
        let scalar: LossModel = serde_json::from_str(r#"{"kind":"threshold","alpha":0.4}"#).unwrap();
        let vector: LossModel =
            serde_json::from_str(r#"{"kind":"threshold","alpha":[0.3,0.7]}"#).unwrap();
        assert_eq!(scalar.at_state(1), StateLoss::Threshold(ThresholdFn::Constant(0.4)));
        assert_eq!(vector.at_state(1), StateLoss::Threshold(ThresholdFn::Constant(0.7)));
    }
}
