//! Whole-network scenario description.

use serde::Serialize;

use crate::channel::{ChannelError, LinkParams, SelfInterference};

/// Full scenario: topology distances, radio parameters, and per-node
/// transmit probabilities. Users share the geometry (all at the same
/// distances from relay and destination) but may differ in transmit
/// probability.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkConfig {
    pub user_count: usize,
    /// Distance user -> destination in meters.
    pub r_user_dest: f64,
    /// Distance user -> relay in meters.
    pub r_user_relay: f64,
    /// Distance relay -> destination in meters.
    pub r_relay_dest: f64,
    pub path_loss_exp: f64,
    pub noise_w: f64,
    pub sinr_threshold: f64,
    pub user_power_w: f64,
    pub relay_power_w: f64,
    pub fading_v: f64,
    /// Residual self-interference coefficient of the relay receiver.
    pub self_interference: f64,
    /// Relay transmit probability given a nonempty queue.
    pub relay_q0: f64,
    /// Per-user transmit probabilities, `user_count` entries.
    pub user_q: Vec<f64>,
}

impl NetworkConfig {
    /// The default scenario: users 60 m from the relay, 130 m from the
    /// destination, relay at 80 m, path-loss exponent 4, noise 1e-11 W,
    /// user power 1 mW, relay power 10 mW, threshold 0.6, no cancellation,
    /// q = 0.3 and q0 = 0.9.
    pub fn default_scenario(user_count: usize) -> Self {
        Self {
            user_count,
            r_user_dest: 130.0,
            r_user_relay: 60.0,
            r_relay_dest: 80.0,
            path_loss_exp: 4.0,
            noise_w: 1e-11,
            sinr_threshold: 0.6,
            user_power_w: 1e-3,
            relay_power_w: 1e-2,
            fading_v: 1.0,
            self_interference: 1.0,
            relay_q0: 0.9,
            user_q: vec![0.3; user_count],
        }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        let prob = |name: &'static str, value: f64| {
            if (0.0..=1.0).contains(&value) {
                Ok(())
            } else {
                Err(ChannelError::InvalidParameter { name, value })
            }
        };
        if self.user_count == 0 || self.user_q.len() != self.user_count {
            return Err(ChannelError::InvalidParameter {
                name: "user_q length",
                value: self.user_q.len() as f64,
            });
        }
        prob("relay_q0", self.relay_q0)?;
        for &q in &self.user_q {
            prob("user_q", q)?;
        }
        self.self_interference()?;
        self.link_user_relay()?;
        self.link_user_dest()?;
        self.link_relay_dest()?;
        Ok(())
    }

    pub fn self_interference(&self) -> Result<SelfInterference, ChannelError> {
        SelfInterference::new(self.self_interference)
    }

    pub fn link_user_relay(&self) -> Result<LinkParams, ChannelError> {
        LinkParams::new(
            self.r_user_relay,
            self.user_power_w,
            self.fading_v,
            self.noise_w,
            self.sinr_threshold,
            self.path_loss_exp,
        )
    }

    pub fn link_user_dest(&self) -> Result<LinkParams, ChannelError> {
        LinkParams::new(
            self.r_user_dest,
            self.user_power_w,
            self.fading_v,
            self.noise_w,
            self.sinr_threshold,
            self.path_loss_exp,
        )
    }

    pub fn link_relay_dest(&self) -> Result<LinkParams, ChannelError> {
        LinkParams::new(
            self.r_relay_dest,
            self.relay_power_w,
            self.fading_v,
            self.noise_w,
            self.sinr_threshold,
            self.path_loss_exp,
        )
    }
}
