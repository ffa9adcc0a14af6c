//! SINR-threshold link success probabilities under Rayleigh fading.
//!
//! A transmission from `i` to `j` succeeds when the received SINR clears the
//! receiver threshold. With exponentially distributed fading power the
//! marginal success probability given the set `T` of simultaneous
//! transmitters has a product closed form: a noise factor, a
//! self-interference factor when the receiver itself transmits (full-duplex
//! relay), and one factor per interferer. The symmetric-network table
//! specializes that form to equidistant users so that downstream sums only
//! need the number of transmitting users, not their identities.

use std::collections::BTreeMap;

use thiserror::Error;

/// Round-off window within which computed probabilities are clamped to
/// [0, 1]; larger excursions are reported as errors.
const PROB_ROUNDOFF: f64 = 1e-15;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("link parameter {name} = {value} is out of range")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("no link parameters configured for {tx:?} -> {rx:?}")]
    MissingLink { tx: Node, rx: Node },
    #[error("transmitter {tx:?} is not in the transmit set")]
    TransmitterSilent { tx: Node },
    #[error("transmitter and receiver are the same node {node:?}")]
    SelfLink { node: Node },
    #[error("received-power ratio beta = {beta} must exceed 1 (relay link must dominate the direct link)")]
    BetaOutOfDomain { beta: f64 },
    #[error("computed probability {value} exceeds [0, 1] beyond round-off")]
    ProbabilityExcursion { value: f64 },
}

/// Nodes of the relay network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Relay,
    User(u16),
    Destination,
}

/// Physical parameters of one directed link, receiver-side quantities
/// (noise, SINR threshold) included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    pub distance_m: f64,
    pub tx_power_w: f64,
    /// Rayleigh fading parameter of the link (mean of the exponential
    /// fading power), dimensionless.
    pub fading_v: f64,
    /// Receiver noise power in watts.
    pub noise_w: f64,
    /// Receiver SINR threshold, dimensionless.
    pub sinr_threshold: f64,
    pub path_loss_exp: f64,
}

impl LinkParams {
    pub fn new(
        distance_m: f64,
        tx_power_w: f64,
        fading_v: f64,
        noise_w: f64,
        sinr_threshold: f64,
        path_loss_exp: f64,
    ) -> Result<Self, ChannelError> {
        let check = |name: &'static str, value: f64, ok: bool| {
            if ok && value.is_finite() {
                Ok(())
            } else {
                Err(ChannelError::InvalidParameter { name, value })
            }
        };
        check("distance_m", distance_m, distance_m > 0.0)?;
        check("tx_power_w", tx_power_w, tx_power_w > 0.0)?;
        check("fading_v", fading_v, fading_v > 0.0)?;
        check("noise_w", noise_w, noise_w >= 0.0)?;
        check("sinr_threshold", sinr_threshold, sinr_threshold > 0.0)?;
        check(
            "path_loss_exp",
            path_loss_exp,
            (2.0..=4.0).contains(&path_loss_exp),
        )?;
        Ok(Self {
            distance_m,
            tx_power_w,
            fading_v,
            noise_w,
            sinr_threshold,
            path_loss_exp,
        })
    }

    /// Mean received power factor `g(i,j) = P_tx d^-alpha`.
    pub fn received_power_factor(&self) -> f64 {
        self.tx_power_w * self.distance_m.powf(-self.path_loss_exp)
    }
}

/// Residual self-interference power gain of the full-duplex relay receiver:
/// 0 is perfect cancellation, 1 is none.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfInterference(f64);

impl SelfInterference {
    pub fn new(coefficient: f64) -> Result<Self, ChannelError> {
        if (0.0..=1.0).contains(&coefficient) {
            Ok(Self(coefficient))
        } else {
            Err(ChannelError::InvalidParameter {
                name: "self_interference",
                value: coefficient,
            })
        }
    }

    pub fn coefficient(self) -> f64 {
        self.0
    }
}

/// The set of nodes transmitting in a slot.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TransmitSet(std::collections::BTreeSet<Node>);

impl TransmitSet {
    pub fn contains(&self, node: Node) -> bool {
        self.0.contains(&node)
    }

    pub fn iter(&self) -> impl Iterator<Item = Node> + '_ {
        self.0.iter().copied()
    }
}

impl FromIterator<Node> for TransmitSet {
    fn from_iter<I: IntoIterator<Item = Node>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// Per-directed-link parameters of the whole network.
pub type LinkMap = BTreeMap<(Node, Node), LinkParams>;

/// Success probability of the `tx -> rx` transmission given the transmit set
/// `active`, marginalized over Rayleigh fading:
///
/// ```text
/// exp(-gamma eta / (v g))
///   * (1 + gamma d^alpha g_si)^-m          m = 1 iff rx transmits
///   * prod over interferers k of (1 + gamma v_k g_k / (v g))^-1
/// ```
///
/// Receiver-side quantities (threshold, noise) are taken from the
/// `(tx, rx)` link entry.
pub fn success_probability(
    tx: Node,
    rx: Node,
    active: &TransmitSet,
    links: &LinkMap,
    si: SelfInterference,
) -> Result<f64, ChannelError> {
    if tx == rx {
        return Err(ChannelError::SelfLink { node: tx });
    }
    if !active.contains(tx) {
        return Err(ChannelError::TransmitterSilent { tx });
    }
    let link = links
        .get(&(tx, rx))
        .ok_or(ChannelError::MissingLink { tx, rx })?;
    let gamma = link.sinr_threshold;
    let signal = link.fading_v * link.received_power_factor();

    let mut p = (-gamma * link.noise_w / signal).exp();
    if active.contains(rx) {
        let d_alpha = link.distance_m.powf(link.path_loss_exp);
        p /= 1.0 + gamma * d_alpha * si.coefficient();
    }
    for k in active.iter().filter(|&k| k != tx && k != rx) {
        let other = links
            .get(&(k, rx))
            .ok_or(ChannelError::MissingLink { tx: k, rx })?;
        p /= 1.0 + gamma * other.fading_v * other.received_power_factor() / signal;
    }
    clamp_probability(p)
}

/// Options for building [`SymmetricProbTable`].
#[derive(Debug, Clone, Copy, Default)]
pub struct SymmetricOptions {
    /// Use this value for the relay-to-destination vs user-to-destination
    /// received-power ratio beta instead of deriving it from the links.
    pub beta_override: Option<f64>,
    /// Compute the zero-interferer relay -> destination success term from
    /// the user -> relay link parameters instead of the relay -> destination
    /// link. Off by default; kept as an alternate form of the closed-form
    /// table for comparison runs.
    pub p0d_from_user_relay_link: bool,
}

/// Success probabilities of the symmetric network: `n` users equidistant
/// from relay and destination, identical powers and thresholds.
///
/// Entries are indexed by the number of transmitting users `i` and whether
/// the relay transmits.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricProbTable {
    user_count: usize,
    /// user -> destination with i = 1..=n transmitters; `[i-1][relay as usize]`
    user_dest: Vec<[f64; 2]>,
    /// user -> relay with i = 1..=n transmitters
    user_relay: Vec<[f64; 2]>,
    /// relay -> destination with i = 0..=n interfering users
    relay_dest: Vec<f64>,
    beta: f64,
}

impl SymmetricProbTable {
    /// Assembles a table from explicit entries (synthetic tables for tests
    /// and calibration). `user_dest` and `user_relay` carry one `[silent,
    /// transmitting]` pair per transmitter count `1..=n`; `relay_dest` has
    /// `n + 1` entries for `0..=n` interferers.
    pub fn from_parts(
        user_dest: Vec<[f64; 2]>,
        user_relay: Vec<[f64; 2]>,
        relay_dest: Vec<f64>,
        beta: f64,
    ) -> Result<Self, ChannelError> {
        let n = user_dest.len();
        if n == 0 || user_relay.len() != n || relay_dest.len() != n + 1 {
            return Err(ChannelError::InvalidParameter {
                name: "table size",
                value: n as f64,
            });
        }
        let flat = user_dest
            .iter()
            .chain(user_relay.iter())
            .flatten()
            .chain(relay_dest.iter());
        for &p in flat {
            if !(0.0..=1.0).contains(&p) {
                return Err(ChannelError::ProbabilityExcursion { value: p });
            }
        }
        Ok(Self {
            user_count: n,
            user_dest,
            user_relay,
            relay_dest,
            beta,
        })
    }

    pub fn user_count(&self) -> usize {
        self.user_count
    }

    /// Received-power ratio of the relay link over the direct link.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Success probability user -> destination when `transmitters >= 1`
    /// users transmit (the tagged one included).
    pub fn user_dest(&self, transmitters: usize, relay_tx: bool) -> f64 {
        self.user_dest[transmitters - 1][relay_tx as usize]
    }

    /// Success probability user -> relay when `transmitters >= 1` users
    /// transmit.
    pub fn user_relay(&self, transmitters: usize, relay_tx: bool) -> f64 {
        self.user_relay[transmitters - 1][relay_tx as usize]
    }

    /// Success probability relay -> destination with `interferers` users
    /// transmitting alongside.
    pub fn relay_dest(&self, interferers: usize) -> f64 {
        self.relay_dest[interferers]
    }
}

/// Closed-form symmetric success probabilities for `n` users.
///
/// `user_relay` is the user -> relay link (receiver-side threshold and noise
/// of the relay), `user_dest` and `relay_dest` terminate at the destination.
/// All three must share the path-loss exponent for the geometry to be
/// consistent.
pub fn symmetric_success_probs(
    n: usize,
    user_relay: &LinkParams,
    user_dest: &LinkParams,
    relay_dest: &LinkParams,
    si: SelfInterference,
    opts: &SymmetricOptions,
) -> Result<SymmetricProbTable, ChannelError> {
    if n == 0 {
        return Err(ChannelError::InvalidParameter {
            name: "user_count",
            value: 0.0,
        });
    }
    let g_ur = user_relay.fading_v * user_relay.received_power_factor();
    let g_ud = user_dest.fading_v * user_dest.received_power_factor();
    let g_rd = relay_dest.fading_v * relay_dest.received_power_factor();
    let beta = opts.beta_override.unwrap_or(g_rd / g_ud);
    if beta <= 1.0 {
        return Err(ChannelError::BetaOutOfDomain { beta });
    }

    let gamma_relay = user_relay.sinr_threshold;
    let gamma_dest = user_dest.sinr_threshold;
    let base_ur = (-gamma_relay * user_relay.noise_w / g_ur).exp();
    let base_ud = (-gamma_dest * user_dest.noise_w / g_ud).exp();
    let base_rd = if opts.p0d_from_user_relay_link {
        base_ur
    } else {
        (-relay_dest.sinr_threshold * relay_dest.noise_w / g_rd).exp()
    };

    // Per-interferer attenuation factors seen by each receiver.
    let peer_at_dest = 1.0 / (1.0 + gamma_dest);
    let relay_at_dest = 1.0 / (1.0 + beta * gamma_dest);
    let peer_at_relay = 1.0 / (1.0 + gamma_relay);
    let self_at_relay = 1.0
        / (1.0
            + gamma_relay
                * user_relay.distance_m.powf(user_relay.path_loss_exp)
                * si.coefficient());
    let user_at_rd = 1.0 / (1.0 + relay_dest.sinr_threshold / beta);

    let mut ud = Vec::with_capacity(n);
    let mut ur = Vec::with_capacity(n);
    for i in 1..=n {
        let peers = (i - 1) as i32;
        let d0 = clamp_probability(base_ud * peer_at_dest.powi(peers))?;
        let r0 = clamp_probability(base_ur * peer_at_relay.powi(peers))?;
        ud.push([d0, clamp_probability(d0 * relay_at_dest)?]);
        ur.push([r0, clamp_probability(r0 * self_at_relay)?]);
    }
    let rd = (0..=n)
        .map(|i| clamp_probability(base_rd * user_at_rd.powi(i as i32)))
        .collect::<Result<Vec<_>, _>>()?;

    Ok(SymmetricProbTable {
        user_count: n,
        user_dest: ud,
        user_relay: ur,
        relay_dest: rd,
        beta,
    })
}

pub(crate) fn clamp_probability(p: f64) -> Result<f64, ChannelError> {
    if (-PROB_ROUNDOFF..=1.0 + PROB_ROUNDOFF).contains(&p) {
        Ok(p.clamp(0.0, 1.0))
    } else {
        Err(ChannelError::ProbabilityExcursion { value: p })
    }
}
