use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use relay_mpr::sim::{detect_instability, simulate, StabilityVerdict};

use relay_mpr_cli::report::PointRecord;
use relay_mpr_cli::scenario::{Overrides, Scenario};
use relay_mpr_cli::sweep::{run_sweep, to_csv, SimRun, SweepSpec};

/// Analytical model and Monte Carlo simulator for a full-duplex relay with
/// multi-packet reception serving saturated random-access sources.
#[derive(Parser)]
#[command(name = "relay-mpr", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form analysis of one scenario point.
    Analyze(AnalyzeArgs),
    /// Sweep one variable and emit a CSV table.
    Sweep(SweepArgs),
    /// Monte Carlo simulation with a queue-stability probe.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file (TOML); defaults apply for every omitted key.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

impl ScenarioArgs {
    fn load(&self) -> Result<Scenario> {
        Scenario::load(self.scenario.as_deref(), &self.overrides)
    }
}

#[derive(Args)]
struct SimArgs {
    /// Slots to simulate.
    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    slots: u64,
    /// Simulation seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Warmup slots excluded from statistics (default: 1% of the run, at
    /// least 10^4, at most half the run).
    #[arg(long)]
    warmup: Option<u64>,
}

impl SimArgs {
    fn run(&self) -> Result<SimRun> {
        if let Some(w) = self.warmup {
            anyhow::ensure!(
                w < self.slots,
                "warmup ({w}) must be smaller than the slot count ({})",
                self.slots
            );
        }
        Ok(SimRun {
            slots: self.slots,
            seed: self.seed,
            warmup: self.warmup,
        })
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Also simulate and print the analytical-vs-empirical comparison.
    #[arg(long)]
    simulate: bool,
    #[command(flatten)]
    sim: SimArgs,
    /// Write the machine-readable JSON record here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Variable to sweep: g, gamma, q, q0 or n.
    #[arg(long = "sweep-var")]
    sweep_var: Option<String>,
    #[arg(long)]
    from: Option<f64>,
    #[arg(long)]
    to: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// Logarithmic grid spacing (default for g sweeps).
    #[arg(long, conflicts_with = "linear")]
    log: bool,
    /// Force linear grid spacing.
    #[arg(long)]
    linear: bool,
    /// Add empirical columns from a simulation at every point.
    #[arg(long)]
    simulate: bool,
    #[command(flatten)]
    sim: SimArgs,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    sim: SimArgs,
    /// Exit with code 3 when the stability probe is indeterminate.
    #[arg(long)]
    strict: bool,
    /// Write the machine-readable JSON record here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Analyze(args) => analyze(args),
        Command::Sweep(args) => sweep(args),
        Command::Simulate(args) => simulate_cmd(args),
    }
}

fn analyze(args: AnalyzeArgs) -> Result<ExitCode> {
    let scenario = args.scenario.load()?;
    let model = scenario.build_model()?;
    let analysis = model.analyze().map_err(|e| anyhow::anyhow!("{e}"))?;
    let throughput = model.throughput(&analysis);
    let simulation = match args.simulate {
        true => Some(simulate(model.as_ref(), &args.sim.run()?.config(0))),
        false => None,
    };
    let record = PointRecord {
        mode: &scenario.mode,
        network: &scenario.network,
        analysis: &analysis,
        throughput: &throughput,
        simulation: simulation.as_ref(),
        stability_probe: None,
    };
    print!("{}", record.render_table());
    if let Some(path) = &args.out {
        std::fs::write(path, record.to_json())?;
    }
    Ok(ExitCode::SUCCESS)
}

fn sweep(args: SweepArgs) -> Result<ExitCode> {
    let scenario = args.scenario.load()?;
    let log = if args.log {
        Some(true)
    } else if args.linear {
        Some(false)
    } else {
        None
    };
    let spec = SweepSpec::merge(
        scenario.sweep.as_ref(),
        args.sweep_var.as_deref(),
        args.from,
        args.to,
        args.steps,
        log,
    )?;
    let sim = match args.simulate {
        true => Some(args.sim.run()?),
        false => None,
    };
    let rows = run_sweep(&scenario, &spec, sim)?;
    let csv = to_csv(&rows, spec.variable.name());
    match &args.out {
        Some(path) => std::fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn simulate_cmd(args: SimulateArgs) -> Result<ExitCode> {
    let scenario = args.scenario.load()?;
    let model = scenario.build_model()?;
    let analysis = model.analyze().map_err(|e| anyhow::anyhow!("{e}"))?;
    let throughput = model.throughput(&analysis);
    let cfg = args.sim.run()?.config(0);
    let simulation = simulate(model.as_ref(), &cfg);
    let probe = detect_instability(model.as_ref(), &cfg);
    let record = PointRecord {
        mode: &scenario.mode,
        network: &scenario.network,
        analysis: &analysis,
        throughput: &throughput,
        simulation: Some(&simulation),
        stability_probe: Some(&probe),
    };
    print!("{}", record.render_table());
    if let Some(path) = &args.out {
        std::fs::write(path, record.to_json())?;
    }
    if args.strict && probe.verdict == StabilityVerdict::Indeterminate {
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}
