//! Slot-level Monte Carlo simulation of the relay network.
//!
//! Success draws use the conditional link probabilities for the realized
//! transmit set (the fading marginal is already inside them), with relay and
//! destination decode events drawn independently per packet. A separate
//! physical mode samples exponential fading powers and compares raw SINR
//! against the threshold, validating the closed-form link probabilities end
//! to end.
//!
//! Randomness comes from a counter-based generator keyed as (seed, slot,
//! draw index): every slot re-seats the stream, and each slot consumes a
//! fixed number of draws regardless of queue state, so any slot can be
//! replayed in isolation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::channel::{ChannelError, LinkMap, Node, SelfInterference, TransmitSet};
use crate::model::{LinkProbs, Model};

/// Monte Carlo run parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimConfig {
    pub slots: u64,
    pub seed: u64,
    /// Leading slots excluded from every statistic.
    pub warmup: u64,
}

impl SimConfig {
    /// Warmup defaults to 1% of the run, at least 10^4 slots, but never
    /// more than half the run.
    pub fn new(slots: u64, seed: u64) -> Self {
        let warmup = (slots / 100).max(10_000).min(slots / 2);
        Self {
            slots,
            seed,
            warmup,
        }
    }

    pub fn with_warmup(mut self, warmup: u64) -> Self {
        self.warmup = warmup;
        self
    }

    fn assert_valid(&self) {
        assert!(
            self.slots > self.warmup,
            "simulation needs slots ({}) > warmup ({})",
            self.slots,
            self.warmup
        );
    }
}

/// A point estimate with its standard-error half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub half_width: f64,
}

/// Whole-run packet counters; they satisfy
/// `delivered_direct + relay_departures + final_queue + lost_at_both ==
/// source_attempts` exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RunTotals {
    pub source_attempts: u64,
    pub delivered_direct: u64,
    pub relay_departures: u64,
    pub lost_at_both: u64,
    pub final_queue: u64,
}

impl RunTotals {
    pub fn conserved(&self) -> bool {
        self.delivered_direct + self.relay_departures + self.final_queue + self.lost_at_both
            == self.source_attempts
    }
}

/// Empirical counterparts of the analytical quantities, standard errors from
/// batch means (100 batches of the post-warmup slots).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub slots_run: u64,
    pub warmup: u64,
    pub seed: u64,
    /// Mean stored packets per slot.
    pub empirical_lambda: Estimate,
    /// Departures per nonempty slot.
    pub empirical_mu: Estimate,
    /// Fraction of slots with an empty queue.
    pub empirical_p_empty: Estimate,
    /// Time-average queue length.
    pub empirical_qbar: Estimate,
    /// Accepted packets (destination or relay) per user per slot.
    pub per_user_throughput: Vec<Estimate>,
    /// Destination deliveries (direct plus via relay) per slot.
    pub aggregate_throughput: Estimate,
    pub max_queue_seen: u64,
    pub totals: RunTotals,
}

const BATCHES: u64 = 100;

struct SlotEngine<'a> {
    model: &'a dyn Model,
    rng: ChaCha8Rng,
    users_tx: Vec<bool>,
    dest_draws: Vec<f64>,
    relay_draws: Vec<f64>,
    probs: LinkProbs,
    accepted: Vec<bool>,
    queue: u64,
    max_queue: u64,
    totals_attempts: u64,
    totals_direct: u64,
    totals_departures: u64,
    totals_lost: u64,
}

struct StepEvents {
    queue_start: u64,
    arrivals: u64,
    departed: bool,
    delivered_direct: u64,
}

impl<'a> SlotEngine<'a> {
    fn new(model: &'a dyn Model, seed: u64) -> Self {
        let n = model.user_count();
        Self {
            model,
            rng: ChaCha8Rng::seed_from_u64(seed),
            users_tx: vec![false; n],
            dest_draws: vec![0.0; n],
            relay_draws: vec![0.0; n],
            probs: LinkProbs::for_users(n),
            accepted: vec![false; n],
            queue: 0,
            max_queue: 0,
            totals_attempts: 0,
            totals_direct: 0,
            totals_departures: 0,
            totals_lost: 0,
        }
    }

    /// Runs one slot. The draw layout per slot is fixed (transmit decisions,
    /// relay decision, per-user success pair, relay success) and independent
    /// of the queue state.
    fn step(&mut self, slot: u64) -> StepEvents {
        self.rng.set_stream(slot);
        self.rng.set_word_pos(0);
        let n = self.model.user_count();
        let queue_start = self.queue;

        for u in 0..n {
            self.users_tx[u] = self.rng.gen::<f64>() < self.model.user_tx_prob(u);
        }
        let relay_decision = self.rng.gen::<f64>() < self.model.relay_tx_prob();
        let relay_tx = queue_start > 0 && relay_decision;
        for u in 0..n {
            self.dest_draws[u] = self.rng.gen();
            self.relay_draws[u] = self.rng.gen();
        }
        let relay_dest_draw: f64 = self.rng.gen();

        self.model
            .link_probs_into(&self.users_tx, relay_tx, &mut self.probs);

        let mut arrivals = 0u64;
        let mut delivered_direct = 0u64;
        for u in 0..n {
            self.accepted[u] = false;
            if !self.users_tx[u] {
                continue;
            }
            self.totals_attempts += 1;
            let dest_ok = self.dest_draws[u] < self.probs.user_dest[u];
            let relay_ok = self.relay_draws[u] < self.probs.user_relay[u];
            if dest_ok {
                // The destination's copy wins even when the relay also
                // decoded; nothing is enqueued.
                delivered_direct += 1;
                self.totals_direct += 1;
                self.accepted[u] = true;
            } else if relay_ok {
                arrivals += 1;
                self.accepted[u] = true;
            } else {
                self.totals_lost += 1;
            }
        }

        let departed = relay_tx && relay_dest_draw < self.probs.relay_dest;
        if departed {
            self.totals_departures += 1;
        }
        self.queue = queue_start + arrivals - departed as u64;
        self.max_queue = self.max_queue.max(self.queue);

        StepEvents {
            queue_start,
            arrivals,
            departed,
            delivered_direct,
        }
    }

    fn totals(&self) -> RunTotals {
        RunTotals {
            source_attempts: self.totals_attempts,
            delivered_direct: self.totals_direct,
            relay_departures: self.totals_departures,
            lost_at_both: self.totals_lost,
            final_queue: self.queue,
        }
    }
}

/// Simulates the network and reports empirical counterparts of every
/// analytical quantity. Deterministic for a given seed.
#[allow(clippy::needless_range_loop)]
pub fn simulate(model: &dyn Model, cfg: &SimConfig) -> SimReport {
    cfg.assert_valid();
    let n = model.user_count();
    let stats_slots = cfg.slots - cfg.warmup;
    let batches = stats_slots.clamp(1, BATCHES);
    let batch_len = stats_slots / batches;
    let counted = batch_len * batches;

    let nb = batches as usize;
    let mut arrivals_ct = vec![0u64; nb];
    let mut empty_ct = vec![0u64; nb];
    let mut queue_sum = vec![0u64; nb];
    let mut depart_ct = vec![0u64; nb];
    let mut nonempty_ct = vec![0u64; nb];
    let mut delivered_ct = vec![0u64; nb];
    let mut accepted_ct = vec![vec![0u64; nb]; n];

    let mut engine = SlotEngine::new(model, cfg.seed);
    for slot in 0..cfg.slots {
        let ev = engine.step(slot);
        if slot < cfg.warmup {
            continue;
        }
        let i = slot - cfg.warmup;
        if i >= counted {
            continue;
        }
        let b = (i / batch_len) as usize;
        arrivals_ct[b] += ev.arrivals;
        queue_sum[b] += ev.queue_start;
        if ev.queue_start == 0 {
            empty_ct[b] += 1;
        } else {
            nonempty_ct[b] += 1;
            depart_ct[b] += ev.departed as u64;
        }
        delivered_ct[b] += ev.delivered_direct + ev.departed as u64;
        for u in 0..n {
            accepted_ct[u][b] += engine.accepted[u] as u64;
        }
    }

    let per_slot = |counts: &[u64]| -> Estimate {
        let vals: Vec<f64> = counts
            .iter()
            .map(|&c| c as f64 / batch_len as f64)
            .collect();
        mean_and_se(&vals)
    };
    let mu_vals: Vec<f64> = depart_ct
        .iter()
        .zip(&nonempty_ct)
        .filter(|&(_, &ne)| ne > 0)
        .map(|(&d, &ne)| d as f64 / ne as f64)
        .collect();
    let empirical_mu = if mu_vals.is_empty() {
        Estimate {
            value: 0.0,
            half_width: 0.0,
        }
    } else {
        mean_and_se(&mu_vals)
    };

    SimReport {
        slots_run: cfg.slots,
        warmup: cfg.warmup,
        seed: cfg.seed,
        empirical_lambda: per_slot(&arrivals_ct),
        empirical_mu,
        empirical_p_empty: per_slot(&empty_ct),
        empirical_qbar: per_slot(&queue_sum),
        per_user_throughput: accepted_ct.iter().map(|c| per_slot(c)).collect(),
        aggregate_throughput: per_slot(&delivered_ct),
        max_queue_seen: engine.max_queue,
        totals: engine.totals(),
    }
}

fn mean_and_se(vals: &[f64]) -> Estimate {
    let m = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / m;
    if vals.len() < 2 {
        return Estimate {
            value: mean,
            half_width: 0.0,
        };
    }
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
    Estimate {
        value: mean,
        half_width: (var / m).sqrt(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StabilityVerdict {
    Stable,
    Unstable,
    /// Near-critical evidence; no guess is made.
    Indeterminate,
}

/// Queue-growth diagnosis from a simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityProbe {
    pub verdict: StabilityVerdict,
    /// Regression slope of queue length over post-warmup slots.
    pub slope_per_slot: f64,
    pub slope_se: f64,
    pub final_queue: u64,
    pub warmup_mean_queue: f64,
}

/// Simulates and classifies the queue as growing or bounded: unstable when
/// the regression slope exceeds 5 standard errors *and* the final queue
/// exceeds 10x the warmup-window mean, stable when neither holds, and
/// indeterminate otherwise.
pub fn detect_instability(model: &dyn Model, cfg: &SimConfig) -> StabilityProbe {
    cfg.assert_valid();
    let stride = (cfg.slots / 10_000).max(1);
    let mut engine = SlotEngine::new(model, cfg.seed);
    let mut points: Vec<(f64, f64)> = Vec::with_capacity(10_001);
    let mut warmup_queue_sum: u128 = 0;
    for slot in 0..cfg.slots {
        let ev = engine.step(slot);
        if slot < cfg.warmup {
            warmup_queue_sum += ev.queue_start as u128;
        } else if (slot - cfg.warmup).is_multiple_of(stride) {
            points.push((slot as f64, ev.queue_start as f64));
        }
    }
    let warmup_mean_queue = if cfg.warmup > 0 {
        warmup_queue_sum as f64 / cfg.warmup as f64
    } else {
        0.0
    };

    let (slope, slope_se) = regression_slope(&points);
    let final_queue = engine.queue;
    let growing = slope > 5.0 * slope_se;
    let escaped = final_queue as f64 > 10.0 * warmup_mean_queue;
    let verdict = match (growing, escaped) {
        (true, true) => StabilityVerdict::Unstable,
        (false, false) => StabilityVerdict::Stable,
        _ => StabilityVerdict::Indeterminate,
    };
    StabilityProbe {
        verdict,
        slope_per_slot: slope,
        slope_se,
        final_queue,
        warmup_mean_queue,
    }
}

fn regression_slope(points: &[(f64, f64)]) -> (f64, f64) {
    let m = points.len() as f64;
    if points.len() < 3 {
        return (0.0, f64::INFINITY);
    }
    let xbar = points.iter().map(|p| p.0).sum::<f64>() / m;
    let ybar = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - xbar) * (p.0 - xbar)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - xbar) * (p.1 - ybar)).sum();
    let slope = sxy / sxx;
    let resid: f64 = points
        .iter()
        .map(|p| {
            let e = p.1 - ybar - slope * (p.0 - xbar);
            e * e
        })
        .sum();
    let se = (resid / (m - 2.0) / sxx).sqrt();
    (slope, se)
}

/// Empirical success frequency of one link from sampled exponential fading
/// powers: per draw, raw SINR (signal over noise plus sampled interference
/// and residual self-interference) is compared against the threshold. The
/// residual self-interference power, when the receiver transmits, is
/// exponential with the mean implied by the closed form's
/// `(1 + gamma d^alpha g_si)` factor.
pub fn physical_link_success_rate(
    tx: Node,
    rx: Node,
    active: &TransmitSet,
    links: &LinkMap,
    si: SelfInterference,
    draws: u64,
    seed: u64,
) -> Result<Estimate, ChannelError> {
    if tx == rx {
        return Err(ChannelError::SelfLink { node: tx });
    }
    if !active.contains(tx) {
        return Err(ChannelError::TransmitterSilent { tx });
    }
    let link = links
        .get(&(tx, rx))
        .ok_or(ChannelError::MissingLink { tx, rx })?;
    let signal_mean = link.fading_v * link.received_power_factor();
    let self_mean = if active.contains(rx) {
        link.fading_v * link.tx_power_w * si.coefficient()
    } else {
        0.0
    };
    let mut interferer_means = Vec::new();
    for k in active.iter().filter(|&k| k != tx && k != rx) {
        let other = links
            .get(&(k, rx))
            .ok_or(ChannelError::MissingLink { tx: k, rx })?;
        interferer_means.push(other.fading_v * other.received_power_factor());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut exp = |mean: f64| -> f64 {
        let u: f64 = rng.gen();
        -mean * (1.0 - u).ln()
    };
    let mut successes = 0u64;
    for _ in 0..draws {
        let signal = exp(signal_mean);
        let mut denom = link.noise_w;
        for &mean in &interferer_means {
            denom += exp(mean);
        }
        if self_mean > 0.0 {
            denom += exp(self_mean);
        }
        if signal >= link.sinr_threshold * denom {
            successes += 1;
        }
    }
    let p = successes as f64 / draws as f64;
    Ok(Estimate {
        value: p,
        half_width: (p * (1.0 - p) / draws as f64).sqrt(),
    })
}
