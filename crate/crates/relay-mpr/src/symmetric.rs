//! The symmetric generalization: `n` users with identical geometry and
//! transmit probability.
//!
//! With interchangeable users every slot quantity collapses to binomial
//! sums over the number of transmitters, weighted by the symmetric success
//! table. The packet-handling rules are the same as in [`crate::two_user`].

use crate::channel::{symmetric_success_probs, SymmetricOptions, SymmetricProbTable};
use crate::model::{
    enumerate_slot_outcomes, LinkProbs, Model, ModelError, QueueAnalysis, Regime,
    SlotDistribution, SlotOutcomes, ThroughputReport,
};
use crate::network::NetworkConfig;

/// Upper bound on the user count; keeps every binomial coefficient exact in
/// integer arithmetic before the one conversion to float.
pub const MAX_USERS: usize = 60;

const PROB_TOL: f64 = 1e-13;

/// `n` symmetric saturated sources feeding the relay.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricConfig {
    n: usize,
    q: f64,
    q0: f64,
    probs: SymmetricProbTable,
}

impl SymmetricConfig {
    pub fn new(q: f64, q0: f64, probs: SymmetricProbTable) -> Result<Self, ModelError> {
        for &p in [q, q0].iter() {
            if !(0.0..=1.0).contains(&p) {
                return Err(ModelError::ProbabilityExcursion {
                    family: "transmit probability",
                    value: p,
                });
            }
        }
        let n = probs.user_count();
        if n == 0 || n > MAX_USERS {
            return Err(ModelError::UnsupportedScenario {
                name: "n-symmetric",
                reason: format!("user count {n} outside 1..={MAX_USERS}"),
            });
        }
        Ok(Self { n, q, q0, probs })
    }

    /// Builds the symmetric success table from the network geometry. All
    /// users must share one transmit probability.
    pub fn from_network(cfg: &NetworkConfig) -> Result<Self, ModelError> {
        cfg.validate()?;
        let q = cfg.user_q[0];
        if cfg.user_q.iter().any(|&qi| qi != q) {
            return Err(ModelError::UnsupportedScenario {
                name: "n-symmetric",
                reason: "users must share one transmit probability".to_string(),
            });
        }
        let probs = symmetric_success_probs(
            cfg.user_count,
            &cfg.link_user_relay()?,
            &cfg.link_user_dest()?,
            &cfg.link_relay_dest()?,
            cfg.self_interference()?,
            &SymmetricOptions::default(),
        )?;
        Self::new(q, cfg.relay_q0, probs)
    }

    pub fn user_count(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn q0(&self) -> f64 {
        self.q0
    }

    pub fn probs(&self) -> &SymmetricProbTable {
        &self.probs
    }

    /// Probability that one tagged transmission is stored, with `i` users
    /// transmitting in total.
    fn store_prob(&self, transmitters: usize, relay_tx: bool) -> f64 {
        self.probs.user_relay(transmitters, relay_tx)
            * (1.0 - self.probs.user_dest(transmitters, relay_tx))
    }

    /// Probability that exactly `i` of the `n` users transmit.
    fn tx_count_prob(&self, i: usize) -> f64 {
        binomial(self.n, i) * self.q.powi(i as i32) * (1.0 - self.q).powi((self.n - i) as i32)
    }

    /// Marginal probability of exactly `k >= 1` stored packets for a fixed
    /// relay state (silent or transmitting).
    fn arrival_kernel(&self, k: usize, relay_tx: bool) -> f64 {
        (k..=self.n)
            .map(|i| {
                let store = self.store_prob(i, relay_tx);
                self.tx_count_prob(i)
                    * binomial(i, k)
                    * store.powi(k as i32)
                    * (1.0 - store).powi((i - k) as i32)
            })
            .sum()
    }

    /// Marginal relay -> destination success probability over the user
    /// transmit counts.
    fn relay_success_marginal(&self) -> f64 {
        (0..=self.n)
            .map(|i| self.tx_count_prob(i) * self.probs.relay_dest(i))
            .sum()
    }

    /// Service rate of the relay queue while nonempty.
    pub fn service_rate(&self) -> f64 {
        self.q0 * self.relay_success_marginal()
    }

    /// The one-slot closed forms as binomial sums.
    pub fn slot_distribution(&self) -> Result<SlotDistribution, ModelError> {
        let n = self.n;
        let q0 = self.q0;

        let a: Vec<f64> = (1..=n).map(|k| self.arrival_kernel(k, false)).collect();
        let b: Vec<f64> = (1..=n).map(|k| self.arrival_kernel(k, true)).collect();

        let mut empty_arrivals = vec![0.0; n + 1];
        let mut nonempty_arrivals = vec![0.0; n + 1];
        for k in 1..=n {
            empty_arrivals[k] = a[k - 1];
            nonempty_arrivals[k] = (1.0 - q0) * a[k - 1] + q0 * b[k - 1];
        }
        empty_arrivals[0] = 1.0 - empty_arrivals[1..].iter().sum::<f64>();
        nonempty_arrivals[0] = 1.0 - nonempty_arrivals[1..].iter().sum::<f64>();

        let empty_change = empty_arrivals.clone();

        // Downward move: relay departure with zero stored packets.
        let p_down: f64 = q0
            * (0..=self.n)
                .map(|i| {
                    let no_store = if i == 0 {
                        1.0
                    } else {
                        (1.0 - self.store_prob(i, true)).powi(i as i32)
                    };
                    self.tx_count_prob(i) * self.probs.relay_dest(i) * no_store
                })
                .sum::<f64>();

        // Upward move by k: either no departure with k stored, or a
        // departure with k + 1 stored.
        let mut nonempty_change = vec![0.0; n + 2];
        nonempty_change[0] = p_down;
        for k in 1..=n {
            let mut p = (1.0 - q0) * a[k - 1];
            for i in k..=n {
                let store = self.store_prob(i, true);
                let weight = self.tx_count_prob(i);
                p += q0
                    * weight
                    * (1.0 - self.probs.relay_dest(i))
                    * binomial(i, k)
                    * store.powi(k as i32)
                    * (1.0 - store).powi((i - k) as i32);
                if i > k {
                    p += q0
                        * weight
                        * self.probs.relay_dest(i)
                        * binomial(i, k + 1)
                        * store.powi((k + 1) as i32)
                        * (1.0 - store).powi((i - k - 1) as i32);
                }
            }
            nonempty_change[k + 1] = p;
        }
        nonempty_change[1] = 1.0
            - nonempty_change[0]
            - nonempty_change[2..].iter().sum::<f64>();

        SlotDistribution::new(
            empty_change,
            nonempty_change,
            empty_arrivals,
            nonempty_arrivals,
            PROB_TOL,
        )
    }

    /// Minimum relay transmit probability for a stable queue. Infinite when
    /// no probability in (0, 1] can stabilize it; values above 1 likewise
    /// mean the queue is unstable for every admissible `q0`.
    pub fn stability_threshold(&self) -> f64 {
        let arrivals_silent: f64 = (1..=self.n)
            .map(|k| k as f64 * self.arrival_kernel(k, false))
            .sum();
        let arrivals_relay: f64 = (1..=self.n)
            .map(|k| k as f64 * self.arrival_kernel(k, true))
            .sum();
        let denom = self.relay_success_marginal() + arrivals_silent - arrivals_relay;
        if arrivals_silent == 0.0 {
            0.0
        } else if denom <= 0.0 {
            f64::INFINITY
        } else {
            arrivals_silent / denom
        }
    }

    /// Exact one-slot outcome oracle; see
    /// [`enumerate_slot_outcomes`].
    pub fn enumerate_slot(&self, queue_nonempty: bool) -> Result<SlotOutcomes, ModelError> {
        enumerate_slot_outcomes(self, queue_nonempty)
    }

    /// Per-user throughput when the tagged user transmits alongside `k` of
    /// the other `n - 1`, split by relay activity.
    fn tagged_rate(&self, relay_rate: f64, count: impl Fn(usize, bool) -> f64) -> f64 {
        let n = self.n;
        let mut on = 0.0;
        let mut off = 0.0;
        for k in 0..n {
            let w = binomial(n - 1, k)
                * self.q.powi((k + 1) as i32)
                * (1.0 - self.q).powi((n - 1 - k) as i32);
            on += w * count(k + 1, true);
            off += w * count(k + 1, false);
        }
        relay_rate * on + (1.0 - relay_rate) * off
    }

    /// Per-user and aggregate throughput for the regime in `analysis`; the
    /// same accounting as the two-user case, with the relay's service rate
    /// split evenly across users in the unstable regime.
    pub fn throughput(&self, analysis: &QueueAnalysis) -> ThroughputReport {
        let per_user = if analysis.stable {
            let relay_rate = self.q0 * (1.0 - analysis.p_empty);
            self.tagged_rate(relay_rate, |i, relay_tx| {
                let pd = self.probs.user_dest(i, relay_tx);
                pd + (1.0 - pd) * self.probs.user_relay(i, relay_tx)
            })
        } else {
            self.tagged_rate(self.q0, |i, relay_tx| self.probs.user_dest(i, relay_tx))
                + self.service_rate() / self.n as f64
        };
        ThroughputReport {
            regime: if analysis.stable {
                Regime::Stable
            } else {
                Regime::Unstable
            },
            per_user: vec![per_user; self.n],
            aggregate: per_user * self.n as f64,
        }
    }
}

impl Model for SymmetricConfig {
    fn name(&self) -> &'static str {
        "n-symmetric"
    }

    fn user_count(&self) -> usize {
        self.n
    }

    fn user_tx_prob(&self, _user: usize) -> f64 {
        self.q
    }

    fn relay_tx_prob(&self) -> f64 {
        self.q0
    }

    fn link_probs_into(&self, users_tx: &[bool], relay_tx: bool, out: &mut LinkProbs) {
        debug_assert_eq!(users_tx.len(), self.n);
        let transmitters = users_tx.iter().filter(|&&t| t).count();
        for (u, &tx) in users_tx.iter().enumerate() {
            if tx {
                out.user_dest[u] = self.probs.user_dest(transmitters, relay_tx);
                out.user_relay[u] = self.probs.user_relay(transmitters, relay_tx);
            } else {
                out.user_dest[u] = 0.0;
                out.user_relay[u] = 0.0;
            }
        }
        out.relay_dest = if relay_tx {
            self.probs.relay_dest(transmitters)
        } else {
            0.0
        };
    }

    fn slot_distribution(&self) -> Result<SlotDistribution, ModelError> {
        SymmetricConfig::slot_distribution(self)
    }

    fn service_rate(&self) -> f64 {
        SymmetricConfig::service_rate(self)
    }

    fn stability_threshold(&self) -> f64 {
        SymmetricConfig::stability_threshold(self)
    }

    fn throughput(&self, analysis: &QueueAnalysis) -> ThroughputReport {
        SymmetricConfig::throughput(self, analysis)
    }
}

/// Exact binomial coefficient, computed in integer arithmetic and converted
/// once. Callers keep `n <= MAX_USERS`, far inside the u128 range.
fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        // Exact at every step: a product of consecutive integers is
        // divisible by the factorial of its length.
        c = c * (n - i) as u128 / (i + 1) as u128;
    }
    c as f64
}
