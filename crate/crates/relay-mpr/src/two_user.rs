//! Closed-form queue characteristics for two saturated, possibly asymmetric
//! sources.
//!
//! All quantities are expressed over a precomputed table of conditional link
//! success probabilities, one entry per transmit set that can occur, so the
//! module is testable with synthetic tables and never re-derives anything
//! from geometry. The packet-handling rule behind every arrival term: a
//! source packet enters the relay queue iff the relay decoded it and the
//! direct copy failed; when relay and destination both decode, the
//! destination's copy wins and the relay discards.

use crate::channel::{self, Node, TransmitSet};
use crate::model::{
    enumerate_slot_outcomes, LinkProbs, Model, ModelError, QueueAnalysis, Regime,
    SlotDistribution, SlotOutcomes, ThroughputReport,
};
use crate::network::NetworkConfig;

const PROB_TOL: f64 = 1e-15;

/// Conditional success probabilities for every transmit set of the two-user
/// network. Indexing is by the *conditioning set*: `[user][relay
/// transmitting][other user transmitting]` for user links, `[user 1
/// transmitting][user 2 transmitting]` for the relay link.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoUserSuccess {
    pub user_dest: [[[f64; 2]; 2]; 2],
    pub user_relay: [[[f64; 2]; 2]; 2],
    pub relay_dest: [[f64; 2]; 2],
}

impl TwoUserSuccess {
    pub fn p_user_dest(&self, user: usize, relay_tx: bool, other_tx: bool) -> f64 {
        self.user_dest[user][relay_tx as usize][other_tx as usize]
    }

    pub fn p_user_relay(&self, user: usize, relay_tx: bool, other_tx: bool) -> f64 {
        self.user_relay[user][relay_tx as usize][other_tx as usize]
    }

    pub fn p_relay_dest(&self, user1_tx: bool, user2_tx: bool) -> f64 {
        self.relay_dest[user1_tx as usize][user2_tx as usize]
    }

    fn validate(&self) -> Result<(), ModelError> {
        let all = self
            .user_dest
            .iter()
            .chain(self.user_relay.iter())
            .flatten()
            .flatten()
            .chain(self.relay_dest.iter().flatten());
        for &p in all {
            if !(0.0..=1.0).contains(&p) {
                return Err(ModelError::ProbabilityExcursion {
                    family: "success table",
                    value: p,
                });
            }
        }
        Ok(())
    }
}

/// Two saturated sources feeding the relay.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoUserConfig {
    q0: f64,
    q: [f64; 2],
    success: TwoUserSuccess,
}

impl TwoUserConfig {
    pub fn new(q0: f64, user_q: [f64; 2], success: TwoUserSuccess) -> Result<Self, ModelError> {
        for &p in [q0, user_q[0], user_q[1]].iter() {
            if !(0.0..=1.0).contains(&p) {
                return Err(ModelError::ProbabilityExcursion {
                    family: "transmit probability",
                    value: p,
                });
            }
        }
        success.validate()?;
        Ok(Self {
            q0,
            q: user_q,
            success,
        })
    }

    /// Builds the success table from the network geometry.
    pub fn from_network(cfg: &NetworkConfig) -> Result<Self, ModelError> {
        if cfg.user_count != 2 {
            return Err(ModelError::UnsupportedScenario {
                name: "two-user-asymmetric",
                reason: format!("needs exactly 2 users, scenario has {}", cfg.user_count),
            });
        }
        cfg.validate()?;
        let si = cfg.self_interference()?;
        let mut links = channel::LinkMap::new();
        for u in 0..2u16 {
            links.insert((Node::User(u), Node::Relay), cfg.link_user_relay()?);
            links.insert((Node::User(u), Node::Destination), cfg.link_user_dest()?);
        }
        links.insert((Node::Relay, Node::Destination), cfg.link_relay_dest()?);

        let set = |user_tx: [bool; 2], relay_tx: bool| -> TransmitSet {
            let mut nodes = Vec::new();
            for (u, tx) in user_tx.iter().enumerate() {
                if *tx {
                    nodes.push(Node::User(u as u16));
                }
            }
            if relay_tx {
                nodes.push(Node::Relay);
            }
            nodes.into_iter().collect()
        };
        let p = |tx: Node, rx: Node, active: &TransmitSet| -> Result<f64, ModelError> {
            Ok(channel::success_probability(tx, rx, active, &links, si)?)
        };

        let mut user_dest = [[[0.0; 2]; 2]; 2];
        let mut user_relay = [[[0.0; 2]; 2]; 2];
        for user in 0..2usize {
            for relay_tx in [false, true] {
                for other_tx in [false, true] {
                    let mut user_tx = [false; 2];
                    user_tx[user] = true;
                    user_tx[1 - user] = other_tx;
                    let active = set(user_tx, relay_tx);
                    let tx = Node::User(user as u16);
                    user_dest[user][relay_tx as usize][other_tx as usize] =
                        p(tx, Node::Destination, &active)?;
                    user_relay[user][relay_tx as usize][other_tx as usize] =
                        p(tx, Node::Relay, &active)?;
                }
            }
        }
        let mut relay_dest = [[0.0; 2]; 2];
        for u1 in [false, true] {
            for u2 in [false, true] {
                let active = set([u1, u2], true);
                relay_dest[u1 as usize][u2 as usize] =
                    p(Node::Relay, Node::Destination, &active)?;
            }
        }

        Self::new(
            cfg.relay_q0,
            [cfg.user_q[0], cfg.user_q[1]],
            TwoUserSuccess {
                user_dest,
                user_relay,
                relay_dest,
            },
        )
    }

    pub fn q0(&self) -> f64 {
        self.q0
    }

    pub fn user_q(&self) -> [f64; 2] {
        self.q
    }

    pub fn success(&self) -> &TwoUserSuccess {
        &self.success
    }

    /// Probability that user `user`'s packet is stored by the relay, given
    /// the transmit set: direct copy failed and the relay decoded.
    fn arrival_prob(&self, user: usize, relay_tx: bool, other_tx: bool) -> f64 {
        (1.0 - self.success.p_user_dest(user, relay_tx, other_tx))
            * self.success.p_user_relay(user, relay_tx, other_tx)
    }

    /// Complement of [`Self::arrival_prob`], written as the two disjoint
    /// paths (delivered directly, or failed at both receivers).
    fn no_arrival_prob(&self, user: usize, relay_tx: bool, other_tx: bool) -> f64 {
        let pd = self.success.p_user_dest(user, relay_tx, other_tx);
        let pr = self.success.p_user_relay(user, relay_tx, other_tx);
        pd + (1.0 - pd) * (1.0 - pr)
    }

    /// The four user transmit patterns with their probabilities.
    fn patterns(&self) -> [(bool, bool, f64); 4] {
        let [q1, q2] = self.q;
        [
            (false, false, (1.0 - q1) * (1.0 - q2)),
            (true, false, q1 * (1.0 - q2)),
            (false, true, (1.0 - q1) * q2),
            (true, true, q1 * q2),
        ]
    }

    /// Exact distribution of the number of stored packets for one pattern.
    fn pattern_arrivals(&self, u1_tx: bool, u2_tx: bool, relay_tx: bool) -> [f64; 3] {
        match (u1_tx, u2_tx) {
            (false, false) => [1.0, 0.0, 0.0],
            (true, false) => {
                let a = self.arrival_prob(0, relay_tx, false);
                [self.no_arrival_prob(0, relay_tx, false), a, 0.0]
            }
            (false, true) => {
                let a = self.arrival_prob(1, relay_tx, false);
                [self.no_arrival_prob(1, relay_tx, false), a, 0.0]
            }
            (true, true) => {
                let a1 = self.arrival_prob(0, relay_tx, true);
                let a2 = self.arrival_prob(1, relay_tx, true);
                let n1 = self.no_arrival_prob(0, relay_tx, true);
                let n2 = self.no_arrival_prob(1, relay_tx, true);
                [n1 * n2, a1 * n2 + a2 * n1, a1 * a2]
            }
        }
    }

    /// Marginal relay -> destination success probability over the user
    /// patterns (the service rate is `q0` times this).
    fn relay_success_marginal(&self) -> f64 {
        self.patterns()
            .iter()
            .map(|&(u1, u2, pp)| pp * self.success.p_relay_dest(u1, u2))
            .sum()
    }

    /// Marginal probabilities of one and two stored packets for a fixed
    /// relay state (silent or transmitting).
    fn arrival_moments(&self, relay_tx: bool) -> (f64, f64) {
        let mut one = 0.0;
        let mut two = 0.0;
        for (u1, u2, pp) in self.patterns() {
            let arr = self.pattern_arrivals(u1, u2, relay_tx);
            one += pp * arr[1];
            two += pp * arr[2];
        }
        (one, two)
    }

    /// Service rate of the relay queue while nonempty.
    pub fn service_rate(&self) -> f64 {
        self.q0 * self.relay_success_marginal()
    }

    /// The one-slot closed forms: arrival probabilities and queue-size
    /// change probabilities for the empty and nonempty queue states.
    pub fn slot_distribution(&self) -> Result<SlotDistribution, ModelError> {
        let q0 = self.q0;
        let (a1, a2) = self.arrival_moments(false);
        let (b1, b2) = self.arrival_moments(true);

        let r1_1 = (1.0 - q0) * a1 + q0 * b1;
        let r2_1 = (1.0 - q0) * a2 + q0 * b2;

        // Queue-change probabilities from a nonempty queue couple arrivals
        // with the relay's own success.
        let mut p_down = 0.0;
        let mut p_up1 = (1.0 - q0) * a1;
        let mut p_up2 = (1.0 - q0) * a2;
        for (u1, u2, pp) in self.patterns() {
            let rd = self.success.p_relay_dest(u1, u2);
            let arr = self.pattern_arrivals(u1, u2, true);
            p_down += q0 * pp * rd * arr[0];
            p_up1 += q0 * pp * ((1.0 - rd) * arr[1] + rd * arr[2]);
            p_up2 += q0 * pp * (1.0 - rd) * arr[2];
        }
        let p_stay = 1.0 - p_down - p_up1 - p_up2;

        SlotDistribution::new(
            vec![1.0 - a1 - a2, a1, a2],
            vec![p_down, p_stay, p_up1, p_up2],
            vec![1.0 - a1 - a2, a1, a2],
            vec![1.0 - r1_1 - r2_1, r1_1, r2_1],
            PROB_TOL,
        )
    }

    /// Minimum relay transmit probability for a stable queue. Infinite when
    /// no probability in (0, 1] can stabilize it.
    pub fn stability_threshold(&self) -> f64 {
        let (a1, a2) = self.arrival_moments(false);
        let (b1, b2) = self.arrival_moments(true);
        let arrivals_silent = a1 + 2.0 * a2;
        let denom = self.relay_success_marginal() + arrivals_silent - (b1 + 2.0 * b2);
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

    /// Per-user and aggregate throughput for the regime in `analysis`.
    ///
    /// Stable: a packet counts when destination or relay accepts it, with
    /// the relay contending at the unconditional rate `q0 P(Q > 0)`.
    /// Unstable: only direct deliveries count per user (the relay contends
    /// in every slot), and the aggregate adds the relay's service rate.
    pub fn throughput(&self, analysis: &QueueAnalysis) -> ThroughputReport {
        let accepted = |user: usize, relay_tx: bool, other_tx: bool| {
            let pd = self.success.p_user_dest(user, relay_tx, other_tx);
            pd + (1.0 - pd) * self.success.p_user_relay(user, relay_tx, other_tx)
        };
        let mix = |user: usize, relay_rate: f64, per_set: &dyn Fn(usize, bool, bool) -> f64| {
            let q_self = self.q[user];
            let q_other = self.q[1 - user];
            let when = |relay_tx: bool| {
                q_self * (1.0 - q_other) * per_set(user, relay_tx, false)
                    + q_self * q_other * per_set(user, relay_tx, true)
            };
            relay_rate * when(true) + (1.0 - relay_rate) * when(false)
        };

        if analysis.stable {
            let relay_rate = self.q0 * (1.0 - analysis.p_empty);
            let per_user: Vec<f64> = (0..2).map(|u| mix(u, relay_rate, &accepted)).collect();
            let aggregate = per_user.iter().sum();
            ThroughputReport {
                regime: Regime::Stable,
                per_user,
                aggregate,
            }
        } else {
            let direct = |user: usize, relay_tx: bool, other_tx: bool| {
                self.success.p_user_dest(user, relay_tx, other_tx)
            };
            let per_user: Vec<f64> = (0..2).map(|u| mix(u, self.q0, &direct)).collect();
            let aggregate = per_user.iter().sum::<f64>() + self.service_rate();
            ThroughputReport {
                regime: Regime::Unstable,
                per_user,
                aggregate,
            }
        }
    }
}

impl Model for TwoUserConfig {
    fn name(&self) -> &'static str {
        "two-user-asymmetric"
    }

    fn user_count(&self) -> usize {
        2
    }

    fn user_tx_prob(&self, user: usize) -> f64 {
        self.q[user]
    }

    fn relay_tx_prob(&self) -> f64 {
        self.q0
    }

    fn link_probs_into(&self, users_tx: &[bool], relay_tx: bool, out: &mut LinkProbs) {
        debug_assert_eq!(users_tx.len(), 2);
        for user in 0..2 {
            if users_tx[user] {
                let other = users_tx[1 - user];
                out.user_dest[user] = self.success.p_user_dest(user, relay_tx, other);
                out.user_relay[user] = self.success.p_user_relay(user, relay_tx, other);
            } else {
                out.user_dest[user] = 0.0;
                out.user_relay[user] = 0.0;
            }
        }
        out.relay_dest = if relay_tx {
            self.success.p_relay_dest(users_tx[0], users_tx[1])
        } else {
            0.0
        };
    }

    fn slot_distribution(&self) -> Result<SlotDistribution, ModelError> {
        TwoUserConfig::slot_distribution(self)
    }

    fn service_rate(&self) -> f64 {
        TwoUserConfig::service_rate(self)
    }

    fn stability_threshold(&self) -> f64 {
        TwoUserConfig::stability_threshold(self)
    }

    fn throughput(&self, analysis: &QueueAnalysis) -> ThroughputReport {
        TwoUserConfig::throughput(self, analysis)
    }
}
