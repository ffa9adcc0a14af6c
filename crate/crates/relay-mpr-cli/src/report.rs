//! Human-readable tables and machine-readable JSON records for point runs.

use std::fmt::Write as _;

use relay_mpr::sim::{SimReport, StabilityProbe};
use relay_mpr::{NetworkConfig, QueueAnalysis, Regime, ThroughputReport};
use serde::Serialize;

/// Everything a single-point run produced. `qbar` serializes as `null`
/// when the queue is unstable (JSON has no infinity).
#[derive(Debug, Serialize)]
pub struct PointRecord<'a> {
    pub mode: &'a str,
    pub network: &'a NetworkConfig,
    pub analysis: &'a QueueAnalysis,
    pub throughput: &'a ThroughputReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<&'a SimReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stability_probe: Option<&'a StabilityProbe>,
}

impl PointRecord<'_> {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }

    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let net = self.network;
        let qa = self.analysis;
        let _ = writeln!(
            out,
            "model {} | n={} gamma={} g={:e} q={:?} q0={}",
            self.mode,
            net.user_count,
            net.sinr_threshold,
            net.self_interference,
            net.user_q,
            net.relay_q0
        );
        let _ = writeln!(out, "queue analysis");
        let row = |out: &mut String, k: &str, v: String| {
            let _ = writeln!(out, "  {k:<22}{v}");
        };
        row(&mut out, "lambda0", format!("{:.6}", qa.lambda0));
        row(&mut out, "lambda1", format!("{:.6}", qa.lambda1));
        row(&mut out, "lambda", format!("{:.6}", qa.lambda));
        row(&mut out, "mu", format!("{:.6}", qa.mu));
        row(&mut out, "p_empty", format!("{:.6}", qa.p_empty));
        row(&mut out, "q0min", format!("{:.6}", qa.q0min));
        row(&mut out, "qbar", format!("{:.6}", qa.qbar));
        row(&mut out, "stable", qa.stable.to_string());

        let regime = match self.throughput.regime {
            Regime::Stable => "stable",
            Regime::Unstable => "unstable",
        };
        let _ = writeln!(out, "throughput ({regime} regime)");
        let per_user: Vec<String> = self
            .throughput
            .per_user
            .iter()
            .map(|v| format!("{v:.6}"))
            .collect();
        row(&mut out, "per_user", per_user.join(" "));
        row(
            &mut out,
            "aggregate",
            format!("{:.6}", self.throughput.aggregate),
        );

        if let Some(sim) = self.simulation {
            let _ = writeln!(
                out,
                "simulation ({} slots, warmup {}, seed {})",
                sim.slots_run, sim.warmup, sim.seed
            );
            let est = |out: &mut String, k: &str, v: f64, e: &relay_mpr::sim::Estimate| {
                let _ = writeln!(
                    out,
                    "  {k:<14}{:>12.6} vs {:>12.6} +- {:.2e}",
                    v, e.value, e.half_width
                );
            };
            let _ = writeln!(out, "  {:<14}{:>12} vs {:>12}", "", "analytical", "simulated");
            est(&mut out, "lambda", qa.lambda, &sim.empirical_lambda);
            est(&mut out, "mu", qa.mu, &sim.empirical_mu);
            est(&mut out, "p_empty", qa.p_empty, &sim.empirical_p_empty);
            est(&mut out, "qbar", qa.qbar, &sim.empirical_qbar);
            est(
                &mut out,
                "aggregate",
                self.throughput.aggregate,
                &sim.aggregate_throughput,
            );
            for (u, (thr, e)) in self
                .throughput
                .per_user
                .iter()
                .zip(&sim.per_user_throughput)
                .enumerate()
            {
                est(&mut out, &format!("user {u}"), *thr, e);
            }
            row(&mut out, "max_queue_seen", sim.max_queue_seen.to_string());
        }
        if let Some(probe) = self.stability_probe {
            let _ = writeln!(out, "stability probe");
            row(&mut out, "verdict", format!("{:?}", probe.verdict));
            row(
                &mut out,
                "queue slope",
                format!(
                    "{:.3e} +- {:.3e} per slot",
                    probe.slope_per_slot, probe.slope_se
                ),
            );
            row(&mut out, "final queue", probe.final_queue.to_string());
            row(
                &mut out,
                "warmup mean queue",
                format!("{:.3}", probe.warmup_mean_queue),
            );
        }
        out
    }
}
