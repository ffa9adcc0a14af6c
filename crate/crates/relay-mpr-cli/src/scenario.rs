//! Scenario files: a TOML format whose keys mirror the usual symbols
//! (distances `r_d`, `r_0`, `r_0d`, threshold `gamma`, cancellation `g`,
//! transmit probabilities `q`, `q0`, ...). Unknown keys are hard errors.
//! Every omitted key falls back to the default scenario: r_d=130 m,
//! r_0=60 m, r_0d=80 m, alpha=4, eta=1e-11 W, relay power 10 mW, user
//! power 1 mW, v=1, gamma=0.6, g=1, q=0.3, q0=0.9, n=2.

use std::path::Path;

use anyhow::{bail, Context, Result};
use relay_mpr::model::build_model;
use relay_mpr::{Model, NetworkConfig};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub mode: Option<String>,
    pub n: Option<usize>,
    pub r_d: Option<f64>,
    pub r_0: Option<f64>,
    pub r_0d: Option<f64>,
    pub alpha: Option<f64>,
    pub eta: Option<f64>,
    /// Relay transmit power in watts.
    pub p_tx_relay: Option<f64>,
    /// User transmit power in watts.
    pub p_tx_user: Option<f64>,
    /// Rayleigh fading parameter shared by all links.
    pub v: Option<f64>,
    pub gamma: Option<f64>,
    /// Self-interference coefficient.
    pub g: Option<f64>,
    /// Transmit probability shared by all users.
    pub q: Option<f64>,
    /// Relay transmit probability given a nonempty queue.
    pub q0: Option<f64>,
    /// Per-user overrides for the two-user mode.
    pub q1: Option<f64>,
    pub q2: Option<f64>,
    pub sweep: Option<SweepFile>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub variable: String,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
    pub log: Option<bool>,
}

/// Command-line overrides applied on top of the scenario file.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// Model variant: "two-user-asymmetric" or "n-symmetric".
    #[arg(long)]
    pub mode: Option<String>,
    /// Number of users.
    #[arg(long)]
    pub n: Option<usize>,
    /// SINR threshold gamma.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Self-interference coefficient g.
    #[arg(long)]
    pub g: Option<f64>,
    /// Transmit probability for every user.
    #[arg(long)]
    pub q: Option<f64>,
    /// Relay transmit probability.
    #[arg(long)]
    pub q0: Option<f64>,
    /// User 1 transmit probability (two-user mode).
    #[arg(long)]
    pub q1: Option<f64>,
    /// User 2 transmit probability (two-user mode).
    #[arg(long)]
    pub q2: Option<f64>,
}

/// A fully resolved scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub mode: String,
    pub network: NetworkConfig,
    pub sweep: Option<SweepFile>,
}

impl Scenario {
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let file = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("cannot read scenario file {}", p.display()))?;
                Some(parse_file(&text)?)
            }
            None => None,
        };
        Self::resolve(file, overrides)
    }

    pub fn from_toml(text: &str, overrides: &Overrides) -> Result<Self> {
        Self::resolve(Some(parse_file(text)?), overrides)
    }

    fn resolve(file: Option<ScenarioFile>, over: &Overrides) -> Result<Self> {
        let file = file.unwrap_or(ScenarioFile {
            mode: None,
            n: None,
            r_d: None,
            r_0: None,
            r_0d: None,
            alpha: None,
            eta: None,
            p_tx_relay: None,
            p_tx_user: None,
            v: None,
            gamma: None,
            g: None,
            q: None,
            q0: None,
            q1: None,
            q2: None,
            sweep: None,
        });

        let n = over.n.or(file.n).unwrap_or(2);
        let mut net = NetworkConfig::default_scenario(n);
        if let Some(v) = file.r_d {
            net.r_user_dest = v;
        }
        if let Some(v) = file.r_0 {
            net.r_user_relay = v;
        }
        if let Some(v) = file.r_0d {
            net.r_relay_dest = v;
        }
        if let Some(v) = file.alpha {
            net.path_loss_exp = v;
        }
        if let Some(v) = file.eta {
            net.noise_w = v;
        }
        if let Some(v) = file.p_tx_relay {
            net.relay_power_w = v;
        }
        if let Some(v) = file.p_tx_user {
            net.user_power_w = v;
        }
        if let Some(v) = file.v {
            net.fading_v = v;
        }
        if let Some(v) = over.gamma.or(file.gamma) {
            net.sinr_threshold = v;
        }
        if let Some(v) = over.g.or(file.g) {
            net.self_interference = v;
        }
        if let Some(v) = over.q.or(file.q) {
            net.user_q = vec![v; n];
        }
        if let Some(v) = over.q0.or(file.q0) {
            net.relay_q0 = v;
        }
        let q1 = over.q1.or(file.q1);
        let q2 = over.q2.or(file.q2);
        if (q1.is_some() || q2.is_some()) && n != 2 {
            bail!("q1/q2 overrides need n = 2, scenario has n = {n}");
        }
        if let Some(v) = q1 {
            net.user_q[0] = v;
        }
        if let Some(v) = q2 {
            net.user_q[1] = v;
        }
        net.validate()
            .map_err(|e| anyhow::anyhow!("invalid scenario: {e}"))?;

        let mode = over
            .mode
            .clone()
            .or(file.mode)
            .unwrap_or_else(|| "n-symmetric".to_string());

        Ok(Self {
            mode,
            network: net,
            sweep: file.sweep,
        })
    }

    /// Builds the model variant selected by `mode`.
    pub fn build_model(&self) -> Result<Box<dyn Model>> {
        build_model(&self.mode, &self.network).map_err(|e| anyhow::anyhow!("{e}"))
    }
}

fn parse_file(text: &str) -> Result<ScenarioFile> {
    toml::from_str(text).context("invalid scenario file")
}
