//! JSON schema of the `simulate` subcommand's config file.
//!
//! A spec bundles the system description with a scheduler and placement
//! choice:
//!
//! ```json
//! {
//!   "system": { "users": 2, "states": 2, "delta": 0.3, ... },
//!   "scheduler": { "kind": "stochastic-approx" },
//!   "placement": "rp",
//!   "queue": false,
//!   "warmup": 0
//! }
//! ```

use serde::{Deserialize, Serialize};

use minislot_core::config::SystemConfig;
use minislot_core::sched::{PlacementKind, SchedulerKind, SchedulerSpec};

/// Everything `simulate` needs besides seed and slot count.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimulationSpec {
    /// Scenario: users, states, rates, losses, demand.
    pub system: SystemConfig,
    /// Bandwidth-sharing policy.
    pub scheduler: SchedulerChoice,
    /// Low-latency placement policy (ignored by `stochastic-approx`, which
    /// derives its own placement).
    #[serde(default)]
    pub placement: PlacementChoice,
    /// Queue demand beyond the admission cap instead of blocking it, and
    /// measure per-chunk delays.
    #[serde(default)]
    pub queue: bool,
    /// Slots excluded from averages at the start of the run.
    #[serde(default)]
    pub warmup: u64,
}

/// Serializable scheduler selector.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SchedulerChoice {
    /// Fixed shares every slot; omit `shares` for an equal split.
    StaticSplit { shares: Option<Vec<f64>> },
    /// Entire band to the user with the highest peak rate.
    MaxRate,
    /// Per-resource-block marginal-utility-times-rate scheduling.
    LinearGradient,
    /// Like `linear-gradient`, weighted by each user's threshold
    /// survival probability.
    ThresholdGradient,
    /// Per-slot joint optimization of shares and placements.
    StochasticApprox,
}

/// Serializable placement selector.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum PlacementChoice {
    /// Each minislot's demand lands on a uniformly random subband.
    #[default]
    UniformRandom,
    /// Rate-proportional: placement fractions equal bandwidth shares.
    Rp,
    /// Threshold-proportional (threshold loss models only).
    Tp,
    /// Waterfill onto the weakest users first.
    WorstUser,
}

impl SchedulerChoice {
    /// Core scheduler kind for a `users`-user system.
    pub fn to_kind(&self, users: usize) -> SchedulerKind {
        match self {
            SchedulerChoice::StaticSplit { shares } => SchedulerKind::StaticSplit {
                shares: shares
                    .clone()
                    .unwrap_or_else(|| vec![1.0 / users as f64; users]),
            },
            SchedulerChoice::MaxRate => SchedulerKind::MaxRate,
            SchedulerChoice::LinearGradient => SchedulerKind::LinearGradient,
            SchedulerChoice::ThresholdGradient => SchedulerKind::ThresholdGradient,
            SchedulerChoice::StochasticApprox => SchedulerKind::StochasticApprox,
        }
    }
}

impl From<PlacementChoice> for PlacementKind {
    fn from(p: PlacementChoice) -> Self {
        match p {
            PlacementChoice::UniformRandom => PlacementKind::UniformRandom,
            PlacementChoice::Rp => PlacementKind::Rp,
            PlacementChoice::Tp => PlacementKind::Tp,
            PlacementChoice::WorstUser => PlacementKind::WorstUser,
        }
    }
}

impl SimulationSpec {
    /// Core scheduler spec for this simulation.
    pub fn scheduler_spec(&self) -> SchedulerSpec {
        SchedulerSpec::new(
            self.scheduler.to_kind(self.system.users),
            self.placement.into(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_json_round_trips_and_defaults_apply() {
        let text = r#"{
            "system": {
                "users": 2,
                "states": 2,
                "delta": 0.3,
                "state_probs": [0.5, 0.5],
                "peak_rates": [[2.0, 1.0], [1.0, 2.0]],
                "utilities": [{"offset": 0.0}, {"offset": 0.0}],
                "loss_models": [{"kind": "linear"}, {"kind": "linear"}],
                "demand": {"kind": "binomial_minislot", "p0": 0.5}
            },
            "scheduler": {"kind": "static-split", "shares": null}
        }"#;
        let spec: SimulationSpec = serde_json::from_str(text).unwrap();
        assert_eq!(spec.placement, PlacementChoice::UniformRandom);
        assert!(!spec.queue);
        assert_eq!(spec.warmup, 0);
        match spec.scheduler.to_kind(2) {
            SchedulerKind::StaticSplit { shares } => assert_eq!(shares, vec![0.5, 0.5]),
            other => panic!("expected static split, got {other:?}"),
        }
        let text2 = serde_json::to_string(&spec).unwrap();
        let spec2: SimulationSpec = serde_json::from_str(&text2).unwrap();
        assert_eq!(spec2.system.users, 2);
    }
}
