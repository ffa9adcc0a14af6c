//! Parameter sweeps over (g, gamma, q, q0, n) with CSV emission.
//!
//! Points are dispatched to a worker pool; rows come back ordered by sweep
//! index regardless of completion order. Floats are printed with 17
//! significant digits so regression snapshots of the CSV are meaningful.

use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use relay_mpr::sim::{simulate, Estimate, SimConfig, SimReport};
use relay_mpr::{NetworkConfig, QueueAnalysis, ThroughputReport};

use crate::scenario::{Scenario, SweepFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    SelfInterference,
    Gamma,
    UserQ,
    RelayQ0,
    UserCount,
}

impl SweepVar {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "g" => Self::SelfInterference,
            "gamma" => Self::Gamma,
            "q" => Self::UserQ,
            "q0" => Self::RelayQ0,
            "n" => Self::UserCount,
            other => bail!("unknown sweep variable '{other}' (expected g, gamma, q, q0 or n)"),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::SelfInterference => "g",
            Self::Gamma => "gamma",
            Self::UserQ => "q",
            Self::RelayQ0 => "q0",
            Self::UserCount => "n",
        }
    }

    fn apply(self, value: f64, net: &mut NetworkConfig) {
        match self {
            Self::SelfInterference => net.self_interference = value,
            Self::Gamma => net.sinr_threshold = value,
            Self::UserQ => net.user_q = vec![value; net.user_count],
            Self::RelayQ0 => net.relay_q0 = value,
            Self::UserCount => {
                let q = net.user_q.first().copied().unwrap_or(0.0);
                net.user_count = value.round().max(1.0) as usize;
                net.user_q = vec![q; net.user_count];
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub variable: SweepVar,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
    pub log: bool,
}

impl SweepSpec {
    /// Merges the scenario file's `[sweep]` section with command-line
    /// settings (command line wins). `g` sweeps default to logarithmic
    /// spacing.
    pub fn merge(
        file: Option<&SweepFile>,
        var: Option<&str>,
        from: Option<f64>,
        to: Option<f64>,
        steps: Option<usize>,
        log: Option<bool>,
    ) -> Result<Self> {
        let name = var
            .map(str::to_string)
            .or_else(|| file.map(|f| f.variable.clone()))
            .context("no sweep variable (use --sweep-var or a [sweep] section)")?;
        let variable = SweepVar::parse(&name)?;
        let from = from
            .or(file.map(|f| f.from))
            .context("sweep needs --from")?;
        let to = to.or(file.map(|f| f.to)).context("sweep needs --to")?;
        let steps = steps.or(file.map(|f| f.steps)).unwrap_or(10);
        let log = log
            .or(file.and_then(|f| f.log))
            .unwrap_or(variable == SweepVar::SelfInterference);
        let spec = Self {
            variable,
            from,
            to,
            steps,
            log,
        };
        spec.values()?;
        Ok(spec)
    }

    /// The grid points, inclusive of both ends.
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.steps == 0 {
            bail!("sweep needs at least one step");
        }
        if self.log && (self.from <= 0.0 || self.to <= 0.0) {
            bail!("logarithmic sweeps need positive bounds");
        }
        if self.steps == 1 {
            return Ok(vec![self.from]);
        }
        let pts = (0..self.steps)
            .map(|i| {
                let t = i as f64 / (self.steps - 1) as f64;
                if self.log {
                    (self.from.ln() + t * (self.to.ln() - self.from.ln())).exp()
                } else {
                    self.from + t * (self.to - self.from)
                }
            })
            .collect();
        Ok(pts)
    }
}

/// Simulation settings attached to a sweep or point run.
#[derive(Debug, Clone, Copy)]
pub struct SimRun {
    pub slots: u64,
    pub seed: u64,
    pub warmup: Option<u64>,
}

impl SimRun {
    pub fn config(&self, point: u64) -> SimConfig {
        let cfg = SimConfig::new(self.slots, self.seed.wrapping_add(point));
        match self.warmup {
            Some(w) => cfg.with_warmup(w),
            None => cfg,
        }
    }
}

/// One computed sweep point.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    pub analysis: QueueAnalysis,
    pub throughput: ThroughputReport,
    pub sim: Option<SimReport>,
}

/// Runs the sweep; rows are ordered by grid index.
pub fn run_sweep(scenario: &Scenario, spec: &SweepSpec, sim: Option<SimRun>) -> Result<Vec<SweepRow>> {
    let values = spec.values()?;
    values
        .par_iter()
        .enumerate()
        .map(|(i, &value)| {
            let mut point = scenario.clone();
            spec.variable.apply(value, &mut point.network);
            point
                .network
                .validate()
                .map_err(|e| anyhow::anyhow!("sweep point {}={value}: {e}", spec.variable.name()))?;
            let model = point.build_model()?;
            let analysis = model.analyze().map_err(|e| anyhow::anyhow!("{e}"))?;
            let throughput = model.throughput(&analysis);
            let sim = sim.map(|s| simulate(model.as_ref(), &s.config(i as u64)));
            Ok(SweepRow {
                value,
                analysis,
                throughput,
                sim,
            })
        })
        .collect()
}

/// Full-precision float for bit-stable CSV snapshots (17 significant
/// digits).
pub fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_header(var_name: &str, with_sim: bool) -> String {
    let mut h = format!(
        "{var_name},lambda,lambda0,lambda1,mu,p_empty,q0min,qbar,per_user_throughput,aggregate_throughput,stable"
    );
    if with_sim {
        h.push_str(
            ",sim_lambda,sim_lambda_se,sim_mu,sim_mu_se,sim_p_empty,sim_p_empty_se,sim_qbar,sim_qbar_se,sim_per_user,sim_per_user_se,sim_aggregate,sim_aggregate_se",
        );
    }
    h
}

/// Mean value and combined standard error of the per-user estimates.
fn pooled(estimates: &[Estimate]) -> (f64, f64) {
    let n = estimates.len() as f64;
    let mean = estimates.iter().map(|e| e.value).sum::<f64>() / n;
    let se = estimates
        .iter()
        .map(|e| e.half_width * e.half_width)
        .sum::<f64>()
        .sqrt()
        / n;
    (mean, se)
}

pub fn csv_row(row: &SweepRow) -> String {
    let qa = &row.analysis;
    let mut line = String::new();
    let _ = write!(
        line,
        "{},{},{},{},{},{},{},{},{},{},{}",
        fmt_g17(row.value),
        fmt_g17(qa.lambda),
        fmt_g17(qa.lambda0),
        fmt_g17(qa.lambda1),
        fmt_g17(qa.mu),
        fmt_g17(qa.p_empty),
        fmt_g17(qa.q0min),
        fmt_g17(qa.qbar),
        fmt_g17(row.throughput.mean_per_user()),
        fmt_g17(row.throughput.aggregate),
        qa.stable,
    );
    if let Some(sim) = &row.sim {
        let (pu, pu_se) = pooled(&sim.per_user_throughput);
        for est in [
            sim.empirical_lambda,
            sim.empirical_mu,
            sim.empirical_p_empty,
            sim.empirical_qbar,
            Estimate {
                value: pu,
                half_width: pu_se,
            },
            sim.aggregate_throughput,
        ] {
            let _ = write!(line, ",{},{}", fmt_g17(est.value), fmt_g17(est.half_width));
        }
    }
    line
}

pub fn to_csv(rows: &[SweepRow], var_name: &str) -> String {
    let with_sim = rows.iter().any(|r| r.sim.is_some());
    let mut out = csv_header(var_name, with_sim);
    out.push('\n');
    for row in rows {
        out.push_str(&csv_row(row));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Overrides;

    #[test]
    fn grids_cover_both_ends() {
        let spec = SweepSpec {
            variable: SweepVar::RelayQ0,
            from: 0.2,
            to: 0.8,
            steps: 4,
            log: false,
        };
        let v = spec.values().unwrap();
        assert_eq!(v.len(), 4);
        assert!((v[0] - 0.2).abs() < 1e-15);
        assert!((v[3] - 0.8).abs() < 1e-15);

        let spec = SweepSpec {
            variable: SweepVar::SelfInterference,
            from: 1e-10,
            to: 1.0,
            steps: 11,
            log: true,
        };
        let v = spec.values().unwrap();
        assert!((v[0] - 1e-10).abs() < 1e-24);
        assert!((v[10] - 1.0).abs() < 1e-12);
        // Log spacing: constant ratio between consecutive points.
        let r0 = v[1] / v[0];
        for w in v.windows(2) {
            assert!((w[1] / w[0] - r0).abs() < 1e-6 * r0);
        }
    }

    #[test]
    fn g_sweeps_default_to_log_spacing() {
        let spec = SweepSpec::merge(None, Some("g"), Some(1e-8), Some(1.0), Some(5), None)
            .unwrap();
        assert!(spec.log);
        let spec = SweepSpec::merge(None, Some("q0"), Some(0.1), Some(0.9), Some(5), None)
            .unwrap();
        assert!(!spec.log);
    }

    #[test]
    fn single_point_sweep_equals_the_point_analysis() {
        let scenario = Scenario::from_toml("n = 4\ngamma = 0.6", &Overrides::default()).unwrap();
        let spec = SweepSpec {
            variable: SweepVar::RelayQ0,
            from: 0.9,
            to: 0.9,
            steps: 1,
            log: false,
        };
        let rows = run_sweep(&scenario, &spec, None).unwrap();
        assert_eq!(rows.len(), 1);

        let model = scenario.build_model().unwrap();
        let qa = model.analyze().unwrap();
        let thr = model.throughput(&qa);
        assert_eq!(rows[0].analysis.lambda, qa.lambda);
        assert_eq!(rows[0].analysis.qbar, qa.qbar);
        assert_eq!(rows[0].throughput.aggregate, thr.aggregate);
    }

    #[test]
    fn csv_is_bit_stable() {
        let scenario = Scenario::from_toml("n = 2\ngamma = 0.6", &Overrides::default()).unwrap();
        let spec = SweepSpec {
            variable: SweepVar::SelfInterference,
            from: 1e-8,
            to: 1.0,
            steps: 5,
            log: true,
        };
        let sim = Some(SimRun {
            slots: 20_000,
            seed: 9,
            warmup: Some(2_000),
        });
        let a = to_csv(&run_sweep(&scenario, &spec, sim).unwrap(), "g");
        let b = to_csv(&run_sweep(&scenario, &spec, sim).unwrap(), "g");
        assert_eq!(a, b);
    }

    #[test]
    fn stable_flag_matches_loynes_recomputed_from_the_row() {
        let scenario =
            Scenario::from_toml("n = 8\ngamma = 0.6\ng = 1e-8", &Overrides::default()).unwrap();
        let spec = SweepSpec {
            variable: SweepVar::RelayQ0,
            from: 0.05,
            to: 1.0,
            steps: 12,
            log: false,
        };
        let rows = run_sweep(&scenario, &spec, None).unwrap();
        let csv = to_csv(&rows, "q0");
        let mut saw_both = (false, false);
        for line in csv.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            let lambda1: f64 = cols[3].parse().unwrap();
            let mu: f64 = cols[4].parse().unwrap();
            let stable: bool = cols[10].parse().unwrap();
            assert_eq!(stable, lambda1 < mu, "row: {line}");
            if stable {
                saw_both.0 = true;
            } else {
                saw_both.1 = true;
            }
        }
        assert_eq!(saw_both, (true, true), "sweep should cross the threshold");
    }

    #[test]
    fn user_count_sweep_shows_the_stability_threshold_crossing_one() {
        let scenario = Scenario::from_toml(
            "gamma = 0.2\ng = 1e-10\nq = 0.3",
            &Overrides::default(),
        )
        .unwrap();
        let spec = SweepSpec {
            variable: SweepVar::UserCount,
            from: 1.0,
            to: 15.0,
            steps: 15,
            log: false,
        };
        let rows = run_sweep(&scenario, &spec, None).unwrap();
        let crossing = rows.iter().find(|r| r.analysis.q0min >= 1.0);
        assert!(crossing.is_some(), "q0min should pass 1 somewhere in 1..=15");
        assert!(!crossing.unwrap().analysis.stable);
    }

    #[test]
    fn per_user_throughput_declines_as_cancellation_degrades() {
        for n in [2usize, 4, 8] {
            let scenario = Scenario::from_toml(
                &format!("n = {n}\ngamma = 0.6\nq = 0.3\nq0 = 0.9"),
                &Overrides::default(),
            )
            .unwrap();
            let spec = SweepSpec {
                variable: SweepVar::SelfInterference,
                from: 1e-10,
                to: 1.0,
                steps: 9,
                log: true,
            };
            let rows = run_sweep(&scenario, &spec, None).unwrap();
            for w in rows.windows(2) {
                assert!(
                    w[1].throughput.mean_per_user() <= w[0].throughput.mean_per_user() + 1e-12,
                    "throughput rose with g at n={n}"
                );
            }
        }
    }
}
