//! Analytical model and slot-level Monte Carlo simulator for a network in
//! which a full-duplex relay forwards packets from saturated random-access
//! sources to a common destination. Both receivers have multi-packet
//! reception: a transmission succeeds whenever its SINR clears the receiver's
//! threshold under Rayleigh fading, so several packets can be decoded in the
//! same slot. The relay stores a source packet only when the relay decoded it
//! and the direct transmission to the destination failed, which turns the
//! relay buffer into a skip-free-to-the-left discrete-time Markov chain.
//!
//! The crate computes, in closed form, the per-link success probabilities,
//! the relay queue's arrival and service rates, its stability threshold,
//! empty-queue probability and mean length, and the per-user and aggregate
//! throughput in both the stable and unstable regimes. Every closed form is
//! cross-checked by an exact one-slot outcome enumerator, a numeric
//! stationary-distribution solver, and the simulator.

pub mod channel;
pub mod model;
pub mod network;
pub mod queue;
pub mod sim;
pub mod symmetric;
pub mod two_user;

pub use channel::{LinkParams, SelfInterference, SymmetricProbTable, TransmitSet};
pub use model::{
    Model, ModelError, QueueAnalysis, Regime, SlotDistribution, ThroughputReport,
};
pub use network::NetworkConfig;
pub use queue::HessenbergChain;
pub use sim::{SimConfig, SimReport, StabilityProbe, StabilityVerdict};
pub use symmetric::SymmetricConfig;
pub use two_user::TwoUserConfig;
