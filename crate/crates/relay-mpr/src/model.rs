//! Common interface over the analytical model variants.
//!
//! Each variant (two possibly asymmetric users, or `n` symmetric users)
//! exposes the same surface: per-slot link success probabilities for any
//! realized transmit pattern, the closed-form one-slot queue-change
//! distribution, service rate, stability threshold, and throughput. The
//! simulator and the exact enumerator run against this trait, so every
//! variant is cross-checked by the same machinery. Variants are registered
//! by name and selected at runtime from the scenario mode.

use serde::Serialize;
use thiserror::Error;

use crate::channel::ChannelError;
use crate::network::NetworkConfig;
use crate::queue::{ChainError, HessenbergChain};
use crate::symmetric::SymmetricConfig;
use crate::two_user::TwoUserConfig;

/// Exact enumeration is capped here; the outcome space grows as
/// `2^n` transmit patterns.
pub const MAX_ENUM_USERS: usize = 12;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error("{family} probability {value} lies outside [0, 1] beyond tolerance")]
    ProbabilityExcursion { family: &'static str, value: f64 },
    #[error("{family} probabilities sum to {sum}, not 1")]
    NotNormalized { family: &'static str, sum: f64 },
    #[error("closed forms report a stable queue but the chain drift is not positive (drift {drift})")]
    InconsistentStability { drift: f64 },
    #[error("exact enumeration supports at most {MAX_ENUM_USERS} users, got {users}")]
    EnumerationTooLarge { users: usize },
    #[error("unknown model '{requested}'; available: {available}")]
    UnknownModel { requested: String, available: String },
    #[error("model '{name}' cannot run this scenario: {reason}")]
    UnsupportedScenario { name: &'static str, reason: String },
}

/// Conditional link success probabilities for one realized transmit pattern.
///
/// Entries of silent users are zeroed; `relay_dest` is meaningful only when
/// the relay transmits.
#[derive(Debug, Clone, Default)]
pub struct LinkProbs {
    pub user_dest: Vec<f64>,
    pub user_relay: Vec<f64>,
    pub relay_dest: f64,
}

impl LinkProbs {
    pub fn for_users(n: usize) -> Self {
        Self {
            user_dest: vec![0.0; n],
            user_relay: vec![0.0; n],
            relay_dest: 0.0,
        }
    }
}

/// One-slot law of the relay queue: arrival counts and queue-size changes,
/// conditioned on whether the queue was empty.
#[derive(Debug, Clone)]
pub struct SlotDistribution {
    /// `p_k^0`: queue-size change `k = 0..=n` from an empty queue.
    pub empty_change: Vec<f64>,
    /// `p_k^1`: queue-size change `k = -1..=n` from a nonempty queue;
    /// index 0 holds the `-1` change.
    pub nonempty_change: Vec<f64>,
    /// `r_k^0`: `k` packets stored, `k = 0..=n`, queue empty.
    pub empty_arrivals: Vec<f64>,
    /// `r_k^1`: `k` packets stored, queue nonempty.
    pub nonempty_arrivals: Vec<f64>,
}

impl SlotDistribution {
    /// Validates every family against `[0, 1]` membership (within `tol`,
    /// clamping round-off) and unit total mass.
    pub fn new(
        empty_change: Vec<f64>,
        nonempty_change: Vec<f64>,
        empty_arrivals: Vec<f64>,
        nonempty_arrivals: Vec<f64>,
        tol: f64,
    ) -> Result<Self, ModelError> {
        fn check(
            family: &'static str,
            mut fam: Vec<f64>,
            tol: f64,
        ) -> Result<Vec<f64>, ModelError> {
            for value in fam.iter_mut() {
                if *value < -tol || *value > 1.0 + tol || value.is_nan() {
                    return Err(ModelError::ProbabilityExcursion {
                        family,
                        value: *value,
                    });
                }
                *value = value.clamp(0.0, 1.0);
            }
            let sum: f64 = fam.iter().sum();
            if (sum - 1.0).abs() > tol.max(1e-14) {
                return Err(ModelError::NotNormalized { family, sum });
            }
            Ok(fam)
        }
        Ok(Self {
            empty_change: check("empty-state change", empty_change, tol)?,
            nonempty_change: check("nonempty-state change", nonempty_change, tol)?,
            empty_arrivals: check("empty-state arrival", empty_arrivals, tol)?,
            nonempty_arrivals: check("nonempty-state arrival", nonempty_arrivals, tol)?,
        })
    }

    /// Mean arrivals per slot while the queue is empty.
    pub fn lambda0(&self) -> f64 {
        mean_index(&self.empty_arrivals)
    }

    /// Mean arrivals per slot while the queue is nonempty.
    pub fn lambda1(&self) -> f64 {
        mean_index(&self.nonempty_arrivals)
    }

    /// The queue chain induced by the two change families.
    pub fn chain(&self) -> Result<HessenbergChain, ChainError> {
        HessenbergChain::new(self.empty_change.clone(), self.nonempty_change.clone())
    }
}

fn mean_index(probs: &[f64]) -> f64 {
    probs.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
}

/// Steady-state characteristics of the relay queue.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct QueueAnalysis {
    /// Mean arrival rate while empty (packets/slot).
    pub lambda0: f64,
    /// Mean arrival rate while nonempty.
    pub lambda1: f64,
    /// Unconditional mean arrival rate.
    pub lambda: f64,
    /// Service rate while nonempty.
    pub mu: f64,
    /// Stationary probability the queue is empty; 0 when unstable.
    pub p_empty: f64,
    /// Minimum relay transmit probability for stability.
    pub q0min: f64,
    /// Mean queue length; infinite when unstable.
    pub qbar: f64,
    pub stable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Stable,
    Unstable,
}

/// Per-user and aggregate throughput (packets/slot).
///
/// In the stable regime a packet counts when the destination or the relay
/// accepts it (the relay eventually delivers). In the unstable regime only
/// direct deliveries count per user, and the aggregate adds the relay's
/// service rate.
#[derive(Debug, Clone, Serialize)]
pub struct ThroughputReport {
    pub regime: Regime,
    pub per_user: Vec<f64>,
    pub aggregate: f64,
}

impl ThroughputReport {
    pub fn mean_per_user(&self) -> f64 {
        self.per_user.iter().sum::<f64>() / self.per_user.len() as f64
    }
}

/// An analytical model variant of the relay network.
pub trait Model: Send + Sync {
    fn name(&self) -> &'static str;

    fn user_count(&self) -> usize;

    fn user_tx_prob(&self, user: usize) -> f64;

    /// Relay transmit probability given a nonempty queue.
    fn relay_tx_prob(&self) -> f64;

    /// Fills the conditional success probabilities for the realized
    /// transmit pattern. `users_tx.len()` must equal [`Self::user_count`].
    fn link_probs_into(&self, users_tx: &[bool], relay_tx: bool, out: &mut LinkProbs);

    /// Closed-form one-slot distribution.
    fn slot_distribution(&self) -> Result<SlotDistribution, ModelError>;

    /// Closed-form service rate while the queue is nonempty.
    fn service_rate(&self) -> f64;

    /// Closed-form minimum stable relay transmit probability; may exceed 1
    /// (or be infinite) when no transmit probability stabilizes the queue.
    fn stability_threshold(&self) -> f64;

    /// Closed-form throughput for the regime recorded in `analysis`.
    fn throughput(&self, analysis: &QueueAnalysis) -> ThroughputReport;

    /// Full steady-state analysis. Stability is classified by the strict
    /// Loynes comparison `lambda1 < mu`; the boundary counts as unstable.
    fn analyze(&self) -> Result<QueueAnalysis, ModelError> {
        let dist = self.slot_distribution()?;
        let lambda0 = dist.lambda0();
        let lambda1 = dist.lambda1();
        let mu = self.service_rate();
        let q0min = self.stability_threshold();
        if lambda1 < mu {
            let chain = dist.chain()?;
            let p_empty = chain.empty_probability().map_err(|e| match e {
                ChainError::Unstable { drift } => ModelError::InconsistentStability { drift },
                other => ModelError::Chain(other),
            })?;
            let qbar = chain.mean_queue_size()?;
            Ok(QueueAnalysis {
                lambda0,
                lambda1,
                lambda: p_empty * lambda0 + (1.0 - p_empty) * lambda1,
                mu,
                p_empty,
                q0min,
                qbar,
                stable: true,
            })
        } else {
            // Saturated queue: arrivals come at the nonempty rate while
            // departures stay bounded by the service rate.
            Ok(QueueAnalysis {
                lambda0,
                lambda1,
                lambda: lambda1,
                mu,
                p_empty: 0.0,
                q0min,
                qbar: f64::INFINITY,
                stable: false,
            })
        }
    }
}

/// Exact probabilities of the one-slot outcomes of a model, conditioned on
/// the queue state.
#[derive(Debug, Clone)]
pub struct SlotOutcomes {
    /// Probability of `k` stored arrivals, `k = 0..=n`.
    pub arrivals: Vec<f64>,
    /// Probability of each queue-size change. Index 0 is a change of `-1`
    /// when the queue was nonempty and `0` when it was empty.
    pub change: Vec<f64>,
    /// Probability that the head-of-line packet departed (relay transmitted
    /// and succeeded); always 0 for the empty-queue slice.
    pub departure: f64,
}

impl SlotOutcomes {
    pub fn change_offset(queue_nonempty: bool) -> usize {
        queue_nonempty as usize
    }
}

/// Independent oracle for the closed-form slot distributions: walks every
/// transmit pattern, applies the packet-handling rules per user (a packet is
/// stored iff the relay decoded it and the direct transmission failed; a
/// packet decoded by both stays with the destination), and accumulates exact
/// outcome probabilities. The head-of-line packet departs iff the relay
/// transmitted and its transmission succeeded.
pub fn enumerate_slot_outcomes(
    model: &dyn Model,
    queue_nonempty: bool,
) -> Result<SlotOutcomes, ModelError> {
    let n = model.user_count();
    if n > MAX_ENUM_USERS {
        return Err(ModelError::EnumerationTooLarge { users: n });
    }
    let offset = SlotOutcomes::change_offset(queue_nonempty);
    let mut arrivals = vec![0.0; n + 1];
    let mut change = vec![0.0; n + 1 + offset];
    let mut departure = 0.0;

    let mut users_tx = vec![false; n];
    let mut probs = LinkProbs::for_users(n);
    let mut arrival_dist = Vec::with_capacity(n + 1);

    for pattern in 0u32..(1 << n) {
        let mut pattern_prob = 1.0;
        for (u, tx) in users_tx.iter_mut().enumerate() {
            *tx = pattern & (1 << u) != 0;
            let q = model.user_tx_prob(u);
            pattern_prob *= if *tx { q } else { 1.0 - q };
        }
        if pattern_prob == 0.0 {
            continue;
        }

        let relay_branches: &[(bool, f64)] = if queue_nonempty {
            &[
                (false, 1.0 - model.relay_tx_prob()),
                (true, model.relay_tx_prob()),
            ]
        } else {
            &[(false, 1.0)]
        };

        for &(relay_tx, relay_prob) in relay_branches {
            let weight = pattern_prob * relay_prob;
            if weight == 0.0 {
                continue;
            }
            model.link_probs_into(&users_tx, relay_tx, &mut probs);

            // Distribution of the number of stored packets: convolution of
            // one Bernoulli per transmitting user.
            arrival_dist.clear();
            arrival_dist.push(1.0);
            for u in (0..n).filter(|&u| users_tx[u]) {
                let store = (1.0 - probs.user_dest[u]) * probs.user_relay[u];
                arrival_dist.push(0.0);
                for k in (0..arrival_dist.len() - 1).rev() {
                    let p = arrival_dist[k];
                    arrival_dist[k] = p * (1.0 - store);
                    arrival_dist[k + 1] += p * store;
                }
            }

            let depart = if relay_tx { probs.relay_dest } else { 0.0 };
            departure += weight * depart;
            for (k, &pa) in arrival_dist.iter().enumerate() {
                arrivals[k] += weight * pa;
                if depart > 0.0 {
                    // Departures only occur from a nonempty queue, where the
                    // change vector is offset by one.
                    change[k + offset - 1] += weight * pa * depart;
                }
                change[k + offset] += weight * pa * (1.0 - depart);
            }
        }
    }

    Ok(SlotOutcomes {
        arrivals,
        change,
        departure,
    })
}

/// A registered model variant.
pub struct ModelEntry {
    pub name: &'static str,
    pub build: fn(&NetworkConfig) -> Result<Box<dyn Model>, ModelError>,
}

/// All model variants, selectable by scenario mode.
pub fn registry() -> &'static [ModelEntry] {
    &[
        ModelEntry {
            name: "two-user-asymmetric",
            build: |cfg| Ok(Box::new(TwoUserConfig::from_network(cfg)?)),
        },
        ModelEntry {
            name: "n-symmetric",
            build: |cfg| Ok(Box::new(SymmetricConfig::from_network(cfg)?)),
        },
    ]
}

/// Builds the model registered under `name` for the given network.
pub fn build_model(name: &str, cfg: &NetworkConfig) -> Result<Box<dyn Model>, ModelError> {
    for entry in registry() {
        if entry.name == name {
            return (entry.build)(cfg);
        }
    }
    Err(ModelError::UnknownModel {
        requested: name.to_string(),
        available: registry()
            .iter()
            .map(|e| e.name)
            .collect::<Vec<_>>()
            .join(", "),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_knows_both_variants() {
        let names: Vec<_> = registry().iter().map(|e| e.name).collect();
        assert_eq!(names, ["two-user-asymmetric", "n-symmetric"]);
    }

    #[test]
    fn unknown_model_reports_the_alternatives() {
        let cfg = NetworkConfig::default_scenario(2);
        let msg = match build_model("bogus", &cfg) {
            Err(err) => err.to_string(),
            Ok(_) => panic!("bogus model name was accepted"),
        };
        assert!(msg.contains("bogus") && msg.contains("n-symmetric"), "{msg}");
    }

    #[test]
    fn distribution_validation_rejects_excursions() {
        let err = SlotDistribution::new(
            vec![0.5, 0.6],
            vec![0.4, 0.3, 0.3],
            vec![1.0, 0.0],
            vec![1.0, 0.0],
            1e-15,
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::NotNormalized { .. }));

        let err = SlotDistribution::new(
            vec![0.5, 0.5],
            vec![0.4, 0.3, 0.3],
            vec![1.1, -0.1],
            vec![1.0, 0.0],
            1e-15,
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::ProbabilityExcursion { .. }));
    }
}
