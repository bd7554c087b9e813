//! Low-latency demand processes and channel-state sampling.
//!
//! Demand is specified per minislot (or directly as a per-slot aggregate) and
//! normalized in slot-resource units: one minislot can carry at most
//! `f = 1/minislots` of a slot, and the sharing parameter `delta` reserves a
//! fraction of each minislot for eMBB, capping admissible demand at
//! `f * (1 - delta)`. Minislot samples above the cap are truncated there and
//! the excess reported as *blocked*; the aggregate Pareto kind is instead
//! admission-controlled at the source (its law conditioned on the slot-level
//! limit), so its samples never need clipping. Either way every realized load
//! is feasible no matter how the distribution is configured.
//!
//! For scheduling decisions we repeatedly need moments, the moment generating
//! function and the CDF of the *aggregate* slot demand `D = sum_m D(m)`.
//! [`AggregateLaw`] provides those: exactly for finite-support laws (by
//! convolving the minislot law with itself), analytically for the truncated
//! Pareto family, and via a discretized convolution (documented tolerance
//! `1e-4` on the CDF) for continuous minislot laws.

use std::sync::{Arc, OnceLock};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two atoms closer than this are merged during convolution, and CDF queries
/// treat values within this distance of an atom as hitting it.
pub const ATOM_TOL: f64 = 1e-12;

/// Composite-midpoint points used for expectations over continuous laws.
const QUAD_POINTS: usize = 2000;

/// Bins used to discretize one continuous minislot law.
const MINISLOT_BINS: usize = 1024;

/// Bins of the rebinned aggregate grid after each convolution step.
const AGGREGATE_BINS: usize = 4096;

fn default_x_min() -> f64 {
    0.1
}

/// Demand process configuration.
///
/// All minislot kinds draw i.i.d. across minislots and slots. The truncated
/// Pareto kind instead draws the slot aggregate directly and spreads it evenly
/// over the minislots.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DemandSpec {
    /// Per minislot: 0 with probability `p0`, otherwise the full admissible
    /// minislot volume `f * (1 - delta)`.
    BinomialMinislot { p0: f64 },
    /// Per minislot: uniform on `[lo, hi]` (truncated at the admissible cap).
    UniformMinislot { lo: f64, hi: f64 },
    /// Per slot: truncated Pareto on `[x_min, 1]` with tail exponent `eta`,
    /// `F(x) = (1 - (x_min/x)^eta) / (1 - x_min^eta)`, conditioned on the
    /// slot-level admission limit `1 - delta` when sampled.
    TruncatedParetoAggregate {
        eta: f64,
        #[serde(default = "default_x_min")]
        x_min: f64,
    },
    /// Per minislot: finite support `values` with probabilities `probs`.
    DiscreteMinislot { values: Vec<f64>, probs: Vec<f64> },
}

impl DemandSpec {
    /// Parameter problems, phrased against the admissible per-minislot cap.
    pub(crate) fn check(&self, cap: f64) -> Vec<String> {
        let mut out = Vec::new();
        match self {
            DemandSpec::BinomialMinislot { p0 } => {
                if !(0.0..=1.0).contains(p0) {
                    out.push(format!("p0 = {p0} not in [0, 1]"));
                }
            }
            DemandSpec::UniformMinislot { lo, hi } => {
                if !(*lo >= 0.0 && hi >= lo) {
                    out.push(format!("uniform support [{lo}, {hi}] invalid"));
                }
            }
            DemandSpec::TruncatedParetoAggregate { eta, x_min } => {
                if !(*eta > 0.0) {
                    out.push(format!("eta = {eta} must be > 0"));
                }
                if !(*x_min > 0.0 && *x_min < 1.0) {
                    out.push(format!("x_min = {x_min} not in (0, 1)"));
                }
            }
            DemandSpec::DiscreteMinislot { values, probs } => {
                if values.len() != probs.len() || values.is_empty() {
                    out.push(format!(
                        "{} values vs {} probabilities",
                        values.len(),
                        probs.len()
                    ));
                } else {
                    let sum: f64 = probs.iter().sum();
                    if probs.iter().any(|&p| p < 0.0) || (sum - 1.0).abs() > 1e-12 {
                        out.push(format!("probabilities sum to {sum}, expected 1"));
                    }
                    if values.iter().any(|&v| v < 0.0) {
                        out.push("negative demand value".into());
                    }
                    if values.iter().any(|&v| v > cap + ATOM_TOL) {
                        out.push(format!("demand value above admissible cap {cap}"));
                    }
                }
            }
        }
        out
    }
}

/// One slot's worth of sampled minislot demands.
#[derive(Clone, Debug, PartialEq)]
pub struct MinislotSample {
    /// Demand per minislot after truncation at the admissible cap.
    pub demands: Vec<f64>,
    /// Volume removed by truncation (counted as blocked traffic).
    pub blocked: f64,
}

impl MinislotSample {
    /// Aggregate served demand `D` for the slot.
    pub fn total(&self) -> f64 {
        self.demands.iter().sum()
    }
}

/// A [`DemandSpec`] bound to a slot structure, ready to sample and to answer
/// distributional queries about the aggregate.
#[derive(Debug)]
pub struct DemandModel {
    spec: DemandSpec,
    minislots: usize,
    /// Resource fraction of one minislot.
    f: f64,
    /// Admissible per-minislot demand `f * (1 - delta)`.
    cap: f64,
    law: OnceLock<Arc<AggregateLaw>>,
}

impl DemandModel {
    /// Binds `spec` to a slot with `minislots` minislots and sharing
    /// parameter `delta` (`delta = 0` is accepted here: the cap is then the
    /// full minislot).
    pub fn new(spec: DemandSpec, minislots: usize, delta: f64) -> Result<Self> {
        if minislots == 0 {
            return Err(Error::invalid("minislots", "must be >= 1"));
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::invalid("delta", format!("{delta} not in [0, 1)")));
        }
        let f = 1.0 / minislots as f64;
        let cap = f * (1.0 - delta);
        let problems = spec.check(cap);
        if let Some(p) = problems.first() {
            return Err(Error::invalid("demand", p.clone()));
        }
        if let DemandSpec::TruncatedParetoAggregate { x_min, .. } = &spec {
            if *x_min >= 1.0 - delta {
                return Err(Error::invalid(
                    "demand",
                    format!("x_min = {x_min} leaves no support below the aggregate cap {}", 1.0 - delta),
                ));
            }
        }
        Ok(DemandModel {
            spec,
            minislots,
            f,
            cap,
            law: OnceLock::new(),
        })
    }

    pub fn spec(&self) -> &DemandSpec {
        &self.spec
    }

    pub fn minislots(&self) -> usize {
        self.minislots
    }

    /// Admissible per-minislot demand.
    pub fn cap(&self) -> f64 {
        self.cap
    }

    /// Mean aggregate served demand per slot (the offered load `rho`).
    pub fn rho(&self) -> f64 {
        self.aggregate_law().mean()
    }

    /// Samples one slot of demand, truncated at the admissible cap.
    pub fn sample_minislots<R: Rng>(&self, rng: &mut R) -> MinislotSample {
        self.sample_with_cap(rng, self.cap)
    }

    /// Samples one slot of *raw arrivals*, truncated only at the physical
    /// minislot size `f`. Used when a queue, not the air interface, absorbs
    /// the excess over the admissible cap.
    pub fn sample_arrivals<R: Rng>(&self, rng: &mut R) -> MinislotSample {
        self.sample_with_cap(rng, self.f)
    }

    fn sample_with_cap<R: Rng>(&self, rng: &mut R, cap: f64) -> MinislotSample {
        let m = self.minislots;
        let mut demands = Vec::with_capacity(m);
        let mut blocked = 0.0;
        match &self.spec {
            DemandSpec::BinomialMinislot { p0 } => {
                let v = self.cap.min(cap);
                for _ in 0..m {
                    let d = if rng.gen::<f64>() < *p0 { 0.0 } else { v };
                    demands.push(d);
                }
            }
            DemandSpec::UniformMinislot { lo, hi } => {
                for _ in 0..m {
                    let raw = if hi > lo { rng.gen_range(*lo..*hi) } else { *lo };
                    let d = raw.min(cap);
                    blocked += raw - d;
                    demands.push(d);
                }
            }
            DemandSpec::TruncatedParetoAggregate { eta, x_min } => {
                // Admission control conditions the raw law on `D <= m * cap`:
                // inverse-CDF sampling with the uniform draw rescaled to the
                // admitted mass, so no sample is ever clipped.
                let limit = (cap * m as f64).min(1.0);
                let scale = truncated_pareto_cdf(limit, *x_min, *eta).unwrap_or(1.0);
                let u = rng.gen::<f64>() * scale;
                let total = invert_truncated_pareto(u, *x_min, *eta);
                demands = vec![total.min(limit) / m as f64; m];
            }
            DemandSpec::DiscreteMinislot { values, probs } => {
                for _ in 0..m {
                    let raw = values[categorical(rng, probs)];
                    let d = raw.min(cap);
                    blocked += raw - d;
                    demands.push(d);
                }
            }
        }
        MinislotSample { demands, blocked }
    }

    /// Exact (or documented-tolerance) law of the aggregate served demand.
    pub fn aggregate_law(&self) -> Arc<AggregateLaw> {
        self.law
            .get_or_init(|| Arc::new(self.build_law()))
            .clone()
    }

    /// CDF of the aggregate served demand, `P(D <= x)`.
    ///
    /// Exact for finite-support and truncated-Pareto kinds; for continuous
    /// minislot laws the value comes from a discretized convolution with
    /// absolute error below `1e-4`.
    pub fn aggregate_cdf(&self, x: f64) -> f64 {
        self.aggregate_law().cdf(x)
    }

    fn build_law(&self) -> AggregateLaw {
        let m = self.minislots;
        match &self.spec {
            DemandSpec::BinomialMinislot { p0 } => {
                let v = self.cap;
                let mut atoms = Vec::with_capacity(m + 1);
                for k in 0..=m {
                    let p = binomial_pmf(m, k, 1.0 - p0);
                    atoms.push((k as f64 * v, p));
                }
                AggregateLaw::from_atoms(atoms, true)
            }
            DemandSpec::DiscreteMinislot { values, probs } => {
                let part: Vec<(f64, f64)> = values
                    .iter()
                    .zip(probs)
                    .map(|(&v, &p)| (v.min(self.cap), p))
                    .collect();
                let mut agg = vec![(0.0, 1.0)];
                for _ in 0..m {
                    agg = convolve_atoms(&agg, &part);
                }
                AggregateLaw::from_atoms(agg, true)
            }
            DemandSpec::TruncatedParetoAggregate { eta, x_min } => AggregateLaw::TruncatedPareto {
                x_min: *x_min,
                eta: *eta,
                cap: self.cap * m as f64,
            },
            DemandSpec::UniformMinislot { lo, hi } => AggregateLaw::UniformSum {
                lo: *lo,
                hi: *hi,
                cap: self.cap,
                m,
                grid: OnceLock::new(),
            },
        }
    }
}

/// Draws a channel state index from the distribution `probs`.
pub fn sample_channel_state<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    categorical(rng, probs)
}

fn categorical<R: Rng>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// CDF of the (untruncated-at-cap) Pareto law restricted to `[x_min, 1]`:
/// `F(x) = (1 - (x_min/x)^eta) / (1 - x_min^eta)`.
pub fn truncated_pareto_cdf(x: f64, x_min: f64, eta: f64) -> Result<f64> {
    if !(x_min > 0.0 && x_min < 1.0) {
        return Err(Error::invalid("x_min", format!("{x_min} not in (0, 1)")));
    }
    if !(eta > 0.0) {
        return Err(Error::invalid("eta", format!("{eta} must be > 0")));
    }
    if x <= x_min {
        return Ok(0.0);
    }
    if x >= 1.0 {
        return Ok(1.0);
    }
    Ok((1.0 - (x_min / x).powf(eta)) / (1.0 - x_min.powf(eta)))
}

/// Inverse of [`truncated_pareto_cdf`] for `u` in `[0, 1)`.
fn invert_truncated_pareto(u: f64, x_min: f64, eta: f64) -> f64 {
    x_min * (1.0 - u * (1.0 - x_min.powf(eta))).powf(-1.0 / eta)
}

fn binomial_pmf(n: usize, k: usize, p: f64) -> f64 {
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

/// Convolves two atom lists, merging values that collide within [`ATOM_TOL`].
pub(crate) fn convolve_atoms(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &(xa, pa) in a {
        for &(xb, pb) in b {
            out.push((xa + xb, pa * pb));
        }
    }
    merge_atoms(out)
}

fn merge_atoms(mut atoms: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    atoms.sort_unstable_by(|p, q| p.0.partial_cmp(&q.0).expect("finite atom values"));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
    for (x, p) in atoms {
        match out.last_mut() {
            Some(last) if (x - last.0).abs() <= ATOM_TOL => last.1 += p,
            _ => out.push((x, p)),
        }
    }
    out
}

/// Projects atoms onto a uniform grid of `n` bins over `[lo, hi]`, splitting
/// each atom's mass between the two nearest grid points so the mean is
/// preserved exactly. Mean-preserving splitting keeps the CDF error of
/// repeated convolutions second-order in the bin width.
fn rebin_atoms(atoms: &[(f64, f64)], lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
    if hi <= lo {
        let mass: f64 = atoms.iter().map(|a| a.1).sum();
        return vec![(lo, mass)];
    }
    let step = (hi - lo) / (n - 1) as f64;
    let mut mass = vec![0.0; n];
    for &(x, p) in atoms {
        let pos = ((x - lo) / step).clamp(0.0, (n - 1) as f64);
        let i = pos.floor() as usize;
        if i >= n - 1 {
            mass[n - 1] += p;
        } else {
            let frac = pos - i as f64;
            mass[i] += p * (1.0 - frac);
            mass[i + 1] += p * frac;
        }
    }
    mass.iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(i, &p)| (lo + i as f64 * step, p))
        .collect()
}

/// Distribution of the aggregate slot demand `D`.
#[derive(Debug)]
pub enum AggregateLaw {
    /// Finite support. `exact` distinguishes true discrete laws from
    /// discretized continuous ones.
    Atoms { atoms: Vec<(f64, f64)>, exact: bool },
    /// Truncated Pareto on `[x_min, 1]` conditioned on admission, i.e. the
    /// law of `D | D <= cap`. The support is `[x_min, cap]` with a continuous
    /// density throughout (no truncation atom), which keeps expected
    /// threshold rates free of jump discontinuities.
    TruncatedPareto { x_min: f64, eta: f64, cap: f64 },
    /// Sum of `m` i.i.d. copies of `min(U[lo, hi], cap)`.
    UniformSum {
        lo: f64,
        hi: f64,
        cap: f64,
        m: usize,
        grid: OnceLock<Vec<(f64, f64)>>,
    },
}

impl AggregateLaw {
    pub fn from_atoms(atoms: Vec<(f64, f64)>, exact: bool) -> Self {
        AggregateLaw::Atoms {
            atoms: merge_atoms(atoms),
            exact,
        }
    }

    /// Whether distributional queries are exact (vs. discretized).
    pub fn is_exact(&self) -> bool {
        match self {
            AggregateLaw::Atoms { exact, .. } => *exact,
            AggregateLaw::TruncatedPareto { .. } => true,
            AggregateLaw::UniformSum { .. } => false,
        }
    }

    /// Finite support if the law has one.
    pub fn atoms(&self) -> Option<&[(f64, f64)]> {
        match self {
            AggregateLaw::Atoms { atoms, .. } => Some(atoms),
            _ => None,
        }
    }

    /// Largest value the aggregate can take.
    pub fn max_value(&self) -> f64 {
        match self {
            AggregateLaw::Atoms { atoms, .. } => atoms.last().map_or(0.0, |a| a.0),
            AggregateLaw::TruncatedPareto { cap, .. } => cap.min(1.0),
            AggregateLaw::UniformSum { lo, hi, cap, m, .. } => *m as f64 * hi.min(*cap).max(*lo),
        }
    }

    /// `P(D <= x)`, counting atoms within [`ATOM_TOL`] of `x` as included.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            AggregateLaw::Atoms { atoms, .. } => atoms
                .iter()
                .take_while(|a| a.0 <= x + ATOM_TOL)
                .map(|a| a.1)
                .sum(),
            AggregateLaw::TruncatedPareto { x_min, eta, cap } => {
                if x >= *cap {
                    1.0
                } else {
                    let scale = truncated_pareto_cdf(*cap, *x_min, *eta).unwrap_or(1.0);
                    truncated_pareto_cdf(x, *x_min, *eta).unwrap_or(f64::NAN) / scale
                }
            }
            AggregateLaw::UniformSum { .. } => self
                .uniform_grid()
                .iter()
                .take_while(|a| a.0 <= x + ATOM_TOL)
                .map(|a| a.1)
                .sum(),
        }
    }

    /// `P(D >= x)`; the complement of the *strict* CDF, so probability mass
    /// sitting exactly at `x` counts toward the event. This matches the
    /// threshold-loss convention that a load exactly at the threshold is lost.
    pub fn survival(&self, x: f64) -> f64 {
        match self {
            AggregateLaw::Atoms { atoms, .. } => atoms
                .iter()
                .rev()
                .take_while(|a| a.0 >= x - ATOM_TOL)
                .map(|a| a.1)
                .sum(),
            AggregateLaw::TruncatedPareto { x_min, cap, .. } => {
                // Continuous law: no mass at any point, so the strict and
                // non-strict tails coincide.
                if x >= *cap {
                    0.0
                } else if x > *x_min {
                    1.0 - self.cdf(x)
                } else {
                    1.0
                }
            }
            AggregateLaw::UniformSum { .. } => self
                .uniform_grid()
                .iter()
                .rev()
                .take_while(|a| a.0 >= x - ATOM_TOL)
                .map(|a| a.1)
                .sum(),
        }
    }

    /// Density of the continuous part, where one exists.
    pub fn pdf(&self, x: f64) -> Option<f64> {
        match self {
            AggregateLaw::TruncatedPareto { x_min, eta, cap } => {
                if x < *x_min || x >= *cap {
                    Some(0.0)
                } else {
                    let scale = truncated_pareto_cdf(*cap, *x_min, *eta).unwrap_or(1.0);
                    Some(
                        eta * x_min.powf(*eta) * x.powf(-eta - 1.0)
                            / ((1.0 - x_min.powf(*eta)) * scale),
                    )
                }
            }
            _ => None,
        }
    }

    /// `E[D]`.
    pub fn mean(&self) -> f64 {
        match self {
            AggregateLaw::Atoms { atoms, .. } => atoms.iter().map(|&(x, p)| x * p).sum(),
            AggregateLaw::TruncatedPareto { .. } => self.moment(1.0),
            AggregateLaw::UniformSum { lo, hi, cap, m, .. } => {
                *m as f64 * capped_uniform_mean(*lo, *hi, *cap)
            }
        }
    }

    /// `E[D^q]` for real `q >= 0`.
    pub fn moment(&self, q: f64) -> f64 {
        match self {
            AggregateLaw::Atoms { atoms, .. } => {
                atoms.iter().map(|&(x, p)| x.powf(q) * p).sum()
            }
            AggregateLaw::TruncatedPareto { x_min, eta, cap } => {
                // Closed form for the admission-conditioned law: the raw
                // Pareto moment restricted to `[x_min, cap]`, renormalized by
                // the admitted mass.
                let a = eta * x_min.powf(*eta) / (1.0 - x_min.powf(*eta));
                let c = cap.min(1.0);
                let cont = if (q - eta).abs() < 1e-12 {
                    a * (c / x_min).ln()
                } else {
                    a * (c.powf(q - eta) - x_min.powf(q - eta)) / (q - eta)
                };
                cont / truncated_pareto_cdf(c, *x_min, *eta).unwrap_or(1.0)
            }
            AggregateLaw::UniformSum { .. } => self.expect(|x| x.powf(q)),
        }
    }

    /// Moment generating function `E[e^(tD)]`.
    pub fn mgf(&self, t: f64) -> f64 {
        match self {
            AggregateLaw::Atoms { atoms, .. } => atoms.iter().map(|&(x, p)| p * (t * x).exp()).sum(),
            AggregateLaw::TruncatedPareto { .. } => self.expect(|x| (t * x).exp()),
            AggregateLaw::UniformSum { lo, hi, cap, m, .. } => {
                capped_uniform_mgf(*lo, *hi, *cap, t).powi(*m as i32)
            }
        }
    }

    /// Derivative of the MGF, `E[D e^(tD)]`.
    pub fn mgf_prime(&self, t: f64) -> f64 {
        match self {
            AggregateLaw::Atoms { atoms, .. } => {
                atoms.iter().map(|&(x, p)| p * x * (t * x).exp()).sum()
            }
            AggregateLaw::TruncatedPareto { .. } => self.expect(|x| x * (t * x).exp()),
            AggregateLaw::UniformSum { lo, hi, cap, m, .. } => {
                let part = capped_uniform_mgf(*lo, *hi, *cap, t);
                let part_d = capped_uniform_mgf_prime(*lo, *hi, *cap, t);
                *m as f64 * part.powi(*m as i32 - 1) * part_d
            }
        }
    }

    /// `E[f(D)]`: exact sum over atoms, composite-midpoint quadrature with
    /// [`QUAD_POINTS`] panels (target tolerance `1e-6`) over continuous parts.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        match self {
            AggregateLaw::Atoms { atoms, .. } => atoms.iter().map(|&(x, p)| p * f(x)).sum(),
            AggregateLaw::TruncatedPareto { x_min, cap, .. } => {
                let c = cap.min(1.0);
                let width = (c - x_min) / QUAD_POINTS as f64;
                let mut acc = 0.0;
                for i in 0..QUAD_POINTS {
                    let x = x_min + (i as f64 + 0.5) * width;
                    acc += f(x) * self.pdf(x).unwrap_or(0.0) * width;
                }
                acc
            }
            AggregateLaw::UniformSum { .. } => {
                self.uniform_grid().iter().map(|&(x, p)| p * f(x)).sum()
            }
        }
    }

    fn uniform_grid(&self) -> &[(f64, f64)] {
        match self {
            AggregateLaw::UniformSum { lo, hi, cap, m, grid } => grid.get_or_init(|| {
                let c = hi.min(*cap);
                // Continuous part of one minislot as midpoint atoms...
                let mut part = Vec::with_capacity(MINISLOT_BINS + 1);
                if c > *lo {
                    let w = (c - lo) / MINISLOT_BINS as f64;
                    let density_mass = (c - lo) / (hi - lo);
                    for i in 0..MINISLOT_BINS {
                        part.push((lo + (i as f64 + 0.5) * w, density_mass / MINISLOT_BINS as f64));
                    }
                }
                // ...plus the truncation atom when the cap bites.
                if *hi > c {
                    part.push((c, (hi - c) / (hi - lo)));
                }
                let mut agg = vec![(0.0, 1.0)];
                for step in 0..*m {
                    agg = convolve_atoms(&agg, &part);
                    agg = rebin_atoms(&agg, (step + 1) as f64 * lo, (step + 1) as f64 * c, AGGREGATE_BINS);
                }
                agg
            }),
            _ => unreachable!("uniform_grid only applies to UniformSum"),
        }
    }
}

fn capped_uniform_mean(lo: f64, hi: f64, cap: f64) -> f64 {
    let c = hi.min(cap);
    if hi <= lo {
        return lo.min(cap);
    }
    (c * c - lo * lo) / (2.0 * (hi - lo)) + cap * ((hi - c) / (hi - lo))
}

/// `E[e^(tX)]` for `X = min(U[lo, hi], cap)`.
fn capped_uniform_mgf(lo: f64, hi: f64, cap: f64, t: f64) -> f64 {
    let c = hi.min(cap);
    if hi <= lo {
        return (t * lo.min(cap)).exp();
    }
    let atom = (hi - c) / (hi - lo);
    let cont = if t.abs() < 1e-6 {
        // Series of (e^(tc) - e^(t lo)) / (t (hi - lo)) around t = 0.
        let s1 = (c + lo) / 2.0;
        let s2 = (c * c + c * lo + lo * lo) / 6.0;
        (c - lo) / (hi - lo) * (1.0 + t * s1 + t * t * s2)
    } else {
        ((t * c).exp() - (t * lo).exp()) / (t * (hi - lo))
    };
    cont + atom * (t * cap).exp()
}

/// `E[X e^(tX)]` for `X = min(U[lo, hi], cap)`.
fn capped_uniform_mgf_prime(lo: f64, hi: f64, cap: f64, t: f64) -> f64 {
    let c = hi.min(cap);
    if hi <= lo {
        let x = lo.min(cap);
        return x * (t * x).exp();
    }
    let atom = (hi - c) / (hi - lo);
    let cont = if t.abs() < 1e-6 {
        // Series of E[X e^(tX)] for the uniform part: m1 + t m2 + t^2 m3 / 2.
        let m1 = (c * c - lo * lo) / 2.0;
        let m2 = (c * c * c - lo * lo * lo) / 3.0;
        let m3 = (c * c * c * c - lo * lo * lo * lo) / 4.0;
        (m1 + t * m2 + 0.5 * t * t * m3) / (hi - lo)
    } else {
        // d/dt of (e^(tc) - e^(t lo)) / (t (hi - lo)).
        let num = (t * c).exp() * (t * c - 1.0) - (t * lo).exp() * (t * lo - 1.0);
        num / (t * t * (hi - lo))
    };
    cont + atom * cap * (t * cap).exp()
}
