//! Skip-free-to-the-left discrete-time queue chains.
//!
//! The relay buffer evolves as a Markov chain whose transition matrix is
//! lower Hessenberg: the queue can grow by several packets in a slot but
//! shrink by at most one. For such chains the stationary distribution has a
//! probability generating function in closed form, and the empty-queue
//! probability and mean queue length follow from its derivatives at 1. This
//! module holds that machinery plus an independent numeric stationary solver
//! used to cross-check the closed forms.

use thiserror::Error;

/// Relative tail mass the numeric solver must push below before it trusts a
/// truncated stationary vector.
pub const TAIL_TOLERANCE: f64 = 1e-12;

const DISTRIBUTION_SUM_TOL: f64 = 1e-14;
const ENTRY_ROUNDOFF: f64 = 1e-15;

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("transition probabilities for the {family} state sum to {sum}, not 1")]
    NotNormalized { family: &'static str, sum: f64 },
    #[error("transition probability {value} at index {index} of the {family} state is outside [0, 1]")]
    OutOfRange {
        family: &'static str,
        index: usize,
        value: f64,
    },
    #[error("chain is not stable: drift 1 + B'(1) = {drift} is not positive")]
    Unstable { drift: f64 },
    #[error(
        "truncation at {truncation} states leaves an estimated relative tail mass of {tail_mass:e} (need < {TAIL_TOLERANCE:e})"
    )]
    TruncationInsufficient { truncation: usize, tail_mass: f64 },
}

/// One-step transition law of the queue chain.
///
/// `a[i]` is the probability that an empty queue jumps to size `i`;
/// `b[m]` is the probability that a nonempty queue at size `s` moves to
/// `s - 1 + m`, so `b[0]` is the lone downward transition.
#[derive(Debug, Clone, PartialEq)]
pub struct HessenbergChain {
    a: Vec<f64>,
    b: Vec<f64>,
}

/// First and second derivatives at z = 1 of the transforms
/// `A(z) = sum a_i z^-i` and `B(z) = sum b_i z^-i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformDerivatives {
    pub a_prime: f64,
    pub b_prime: f64,
    pub a_double_prime: f64,
    pub b_double_prime: f64,
}

impl HessenbergChain {
    /// Validates both probability families and clamps float round-off.
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self, ChainError> {
        let a = check_family("empty", a)?;
        let b = check_family("nonempty", b)?;
        Ok(Self { a, b })
    }

    pub fn empty_transitions(&self) -> &[f64] {
        &self.a
    }

    pub fn nonempty_transitions(&self) -> &[f64] {
        &self.b
    }

    /// Largest upward jump a nonempty queue can take in one slot.
    pub fn max_up_jump(&self) -> usize {
        self.b.len().saturating_sub(2)
    }

    pub fn derivatives(&self) -> TransformDerivatives {
        TransformDerivatives {
            a_prime: -weighted_sum(&self.a, |i| i as f64),
            b_prime: -weighted_sum(&self.b, |i| i as f64),
            a_double_prime: weighted_sum(&self.a, |i| (i * (i + 1)) as f64),
            b_double_prime: weighted_sum(&self.b, |i| (i * (i + 1)) as f64),
        }
    }

    /// Mean one-slot drift of a nonempty queue, `1 + B'(1)` negated gives the
    /// expected size change; the chain is positive recurrent iff this is > 0.
    pub fn drift_margin(&self) -> f64 {
        1.0 + self.derivatives().b_prime
    }

    /// Stationary probability that the queue is empty:
    /// `(1 + B'(1)) / (1 + B'(1) - A'(1))`.
    pub fn empty_probability(&self) -> Result<f64, ChainError> {
        let d = self.derivatives();
        let drift = 1.0 + d.b_prime;
        if drift <= 0.0 {
            return Err(ChainError::Unstable { drift });
        }
        Ok(drift / (drift - d.a_prime))
    }

    /// Stationary mean queue size, `-S'(1)` with
    /// `S'(1) = s0 K''(1) / L''(1)`.
    pub fn mean_queue_size(&self) -> Result<f64, ChainError> {
        let d = self.derivatives();
        let drift = 1.0 + d.b_prime;
        if drift <= 0.0 {
            return Err(ChainError::Unstable { drift });
        }
        let s0 = drift / (drift - d.a_prime);
        // A(1) = 1 for a normalized family.
        let k2 = (2.0 - 2.0 * d.a_prime + d.a_double_prime - d.b_double_prime)
            * (-1.0 - d.b_prime)
            - (2.0 - d.b_double_prime) * (-1.0 + d.a_prime - d.b_prime);
        let l2 = 2.0 * drift * drift;
        Ok((-s0 * k2 / l2).max(0.0))
    }

    /// Numeric stationary distribution of the chain truncated to
    /// `truncation` states, computed by level-crossing balance. Refuses when
    /// the estimated mass beyond the truncation point is not negligible.
    #[allow(clippy::needless_range_loop)]
    pub fn stationary_solve(&self, truncation: usize) -> Result<StationaryDistribution, ChainError> {
        let drift = self.drift_margin();
        if drift <= 0.0 {
            return Err(ChainError::Unstable { drift });
        }
        let states = truncation.max(2);

        // Tail sums: a_tail[t] = sum_{k > t} a_k, b_tail[t] = sum_{m > t} b_m.
        let a_tail = tail_sums(&self.a);
        let b_tail = tail_sums(&self.b);
        let b0 = self.b[0];

        // Flow balance across the cut between {0..=i} and {i+1..}: the only
        // downward crossing is i+1 -> i, so
        //   s[i+1] b0 = s[0] a_tail[i] + sum_{j=1}^{i} s[j] b_tail[i - j + 1].
        // Every term is nonnegative; no cancellation.
        let max_jump = self.max_up_jump();
        let mut s = vec![0.0f64; states];
        s[0] = 1.0;
        for i in 0..states - 1 {
            let mut flow = s[0] * tail_at(&a_tail, i);
            let j_lo = (i + 1).saturating_sub(max_jump).max(1);
            for j in j_lo..=i {
                flow += s[j] * tail_at(&b_tail, i - j + 1);
            }
            s[i + 1] = flow / b0;
        }

        let total: f64 = s.iter().sum();
        let last = s[states - 1];
        let prev = s[states - 2];
        let tail_mass = if last == 0.0 {
            0.0
        } else {
            let ratio = last / prev;
            if ratio >= 1.0 {
                return Err(ChainError::TruncationInsufficient {
                    truncation: states,
                    tail_mass: f64::INFINITY,
                });
            }
            (last * ratio / (1.0 - ratio)) / total
        };
        if tail_mass >= TAIL_TOLERANCE {
            return Err(ChainError::TruncationInsufficient {
                truncation: states,
                tail_mass,
            });
        }

        for v in &mut s {
            *v /= total;
        }
        Ok(StationaryDistribution { probs: s, tail_mass })
    }

    /// [`Self::stationary_solve`] with the truncation level doubled from 256
    /// until the tail-mass test passes.
    pub fn stationary_adaptive(&self) -> Result<StationaryDistribution, ChainError> {
        let mut states = 256;
        loop {
            match self.stationary_solve(states) {
                Err(ChainError::TruncationInsufficient { tail_mass, .. })
                    if states < (1 << 22) =>
                {
                    let _ = tail_mass;
                    states *= 2;
                }
                other => return other,
            }
        }
    }
}

/// Normalized stationary vector of a truncated chain.
#[derive(Debug, Clone)]
pub struct StationaryDistribution {
    probs: Vec<f64>,
    tail_mass: f64,
}

impl StationaryDistribution {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn mass_at_zero(&self) -> f64 {
        self.probs[0]
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| i as f64 * p)
            .sum()
    }

    /// Estimated relative probability mass beyond the truncation point.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }
}

fn check_family(family: &'static str, mut v: Vec<f64>) -> Result<Vec<f64>, ChainError> {
    for (index, value) in v.iter_mut().enumerate() {
        if *value < -ENTRY_ROUNDOFF || *value > 1.0 + ENTRY_ROUNDOFF || value.is_nan() {
            return Err(ChainError::OutOfRange {
                family,
                index,
                value: *value,
            });
        }
        *value = value.clamp(0.0, 1.0);
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > DISTRIBUTION_SUM_TOL {
        return Err(ChainError::NotNormalized { family, sum });
    }
    Ok(v)
}

fn weighted_sum(v: &[f64], w: impl Fn(usize) -> f64) -> f64 {
    v.iter().enumerate().map(|(i, p)| w(i) * p).sum()
}

fn tail_sums(v: &[f64]) -> Vec<f64> {
    // tail[t] = sum_{k > t} v[k]; summed back to front for accuracy.
    let mut tail = vec![0.0; v.len()];
    let mut acc = 0.0;
    for t in (0..v.len() - 1).rev() {
        acc += v[t + 1];
        tail[t] = acc;
    }
    tail
}

fn tail_at(tail: &[f64], t: usize) -> f64 {
    tail.get(t).copied().unwrap_or(0.0)
}
