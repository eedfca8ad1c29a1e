//! `aoi`: closed-form and simulated age-of-information metrics for LCFS
//! queues, as CSV.

mod output;
mod sweep;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use aoi_core::oracle::suite::{self, SuiteOptions};
use aoi_core::sim::{self, EventLog, SimConfig, DEFAULT_BATCHES, DEFAULT_WARMUP};
use aoi_core::{report, Scheme, ServiceDistribution, SystemParams};
use clap::{Args, Parser, Subcommand, ValueEnum};

use output::{analytic_rows, open_sink, sig9, sim_rows, write_rows};
use sweep::{Shape, Spacing, SweepSpec, DEFAULT_SEED};

#[derive(Parser)]
#[command(name = "aoi", version, about = "Age of information for LCFS queues with gamma or deterministic service")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form metrics at one point.
    Analytic(AnalyticArgs),
    /// Discrete-event simulation at one point.
    Simulate(SimulateArgs),
    /// Analytic and simulated metrics over a lambda grid.
    Sweep(SweepArgs),
    /// Run the oracle suite and print the check table.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    Preempt,
    Nopreempt,
    Both,
}

impl SchemeArg {
    fn schemes(self) -> Vec<Scheme> {
        match self {
            SchemeArg::Preempt => vec![Scheme::LcfsPreempt],
            SchemeArg::Nopreempt => vec![Scheme::LcfsNoPreempt],
            SchemeArg::Both => Scheme::ALL.to_vec(),
        }
    }
}

#[derive(Args, Debug)]
struct ServiceArgs {
    /// Gamma shape.
    #[arg(long)]
    k: Option<f64>,
    /// Gamma scale.
    #[arg(long)]
    theta: Option<f64>,
    /// Mean service time; sets theta = mean / k.
    #[arg(long = "mean-service", conflicts_with = "theta")]
    mean_service: Option<f64>,
    /// Deterministic service; give --mu or --det-service.
    #[arg(long)]
    det: bool,
    /// Deterministic service rate.
    #[arg(long, conflicts_with = "det_service")]
    mu: Option<f64>,
    /// Deterministic service time.
    #[arg(long = "det-service")]
    det_service: Option<f64>,
}

impl ServiceArgs {
    fn resolve(&self) -> Result<ServiceDistribution, Failure> {
        let det = self.det || self.mu.is_some() || self.det_service.is_some();
        let service = if det {
            if self.k.is_some() || self.theta.is_some() || self.mean_service.is_some() {
                return Err(usage("deterministic service takes --mu or --det-service, not --k/--theta/--mean-service"));
            }
            let d = match (self.mu, self.det_service) {
                (Some(mu), None) => 1.0 / mu,
                (None, Some(d)) => d,
                _ => return Err(usage("--det needs --mu or --det-service")),
            };
            ServiceDistribution::deterministic(d)
        } else {
            let k = self.k.ok_or_else(|| usage("give --k with --theta or --mean-service, or --det"))?;
            match (self.theta, self.mean_service) {
                (Some(theta), None) => ServiceDistribution::gamma(k, theta),
                (None, Some(mean)) => ServiceDistribution::gamma_with_mean(k, mean),
                _ => return Err(usage("--k needs --theta or --mean-service")),
            }
        };
        service.map_err(|e| usage(e.to_string()))
    }
}

#[derive(Args, Debug)]
struct AnalyticArgs {
    #[arg(long, value_enum, default_value = "both")]
    scheme: SchemeArg,
    #[command(flatten)]
    service: ServiceArgs,
    #[arg(long)]
    lambda: f64,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value = "both")]
    scheme: SchemeArg,
    #[command(flatten)]
    service: ServiceArgs,
    #[arg(long)]
    lambda: f64,
    /// Packets to generate.
    #[arg(long, default_value_t = 1_000_000)]
    horizon: u64,
    /// Deliveries to discard before measuring [default: min(10000, horizon - 1)].
    #[arg(long)]
    warmup: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_BATCHES)]
    batches: usize,
    #[arg(long, env = "AOI_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Write one CSV line per event (time, type, gen_time) here.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, value_parser = sweep::PRESETS, conflicts_with = "config")]
    preset: Option<String>,
    /// JSON sweep specification.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the resolved specification as JSON and exit.
    #[arg(long)]
    dump_config: bool,
    /// Skip simulation.
    #[arg(long)]
    analytic_only: bool,
    /// Fail when a simulated metric is more than 3 SE from its closed form.
    #[arg(long)]
    check: bool,
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
    /// Comma-separated shapes; `det` for deterministic service.
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<Shape>>,
    #[arg(long = "mean-service")]
    mean_service: Option<f64>,
    #[arg(long)]
    lambda_min: Option<f64>,
    #[arg(long)]
    lambda_max: Option<f64>,
    #[arg(long)]
    lambda_count: Option<usize>,
    #[arg(long, value_enum)]
    spacing: Option<Spacing>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    warmup: Option<u64>,
    #[arg(long)]
    batches: Option<usize>,
    #[arg(long, env = "AOI_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    /// 10x smaller samples; simulation checks at 4 SE instead of 3.
    #[arg(long)]
    quick: bool,
    #[arg(long, env = "AOI_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
}

enum Failure {
    /// Bad input; exit 2.
    Usage(String),
    /// Failed checks or I/O; exit 1.
    Runtime(anyhow::Error),
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analytic(a) => cmd_analytic(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn emit(out: Option<&PathBuf>, rows: &[output::Row]) -> anyhow::Result<()> {
    let sink = open_sink(out.map(|p| p.as_path())).context("opening output")?;
    write_rows(sink, rows).context("writing CSV")
}

fn cmd_analytic(a: AnalyticArgs) -> Result<ExitCode, Failure> {
    let service = a.service.resolve()?;
    let mut rows = Vec::new();
    for scheme in a.scheme.schemes() {
        let p = SystemParams::new(a.lambda, service, scheme).map_err(|e| usage(e.to_string()))?;
        let r = report(&p).map_err(|e| usage(e.to_string()))?;
        rows.extend(analytic_rows(&p, &r));
    }
    emit(a.out.as_ref(), &rows)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(a: SimulateArgs) -> Result<ExitCode, Failure> {
    let service = a.service.resolve()?;
    let schemes = a.scheme.schemes();
    if a.trace.is_some() && schemes.len() > 1 {
        return Err(usage("--trace needs a single --scheme"));
    }
    let warmup = a.warmup.unwrap_or(DEFAULT_WARMUP.min(a.horizon.saturating_sub(1)));
    let mut rows = Vec::new();
    for scheme in schemes {
        let params = SystemParams::new(a.lambda, service, scheme).map_err(|e| usage(e.to_string()))?;
        let cfg = SimConfig { params, seed: a.seed, horizon: a.horizon, warmup, batches: a.batches };
        cfg.validate().map_err(|e| usage(e.to_string()))?;
        let report = match &a.trace {
            Some(path) => {
                let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
                let mut log = EventLog::new(BufWriter::new(file));
                let r = sim::run_observed(&cfg, &mut log);
                log.finish().and_then(|mut w| w.flush()).context("writing trace")?;
                r
            }
            None => sim::run(&cfg),
        }
        .context("simulation")?;
        rows.extend(sim_rows(&params, &report));
    }
    emit(a.out.as_ref(), &rows)?;
    Ok(ExitCode::SUCCESS)
}

fn resolve_spec(a: &SweepArgs) -> Result<SweepSpec, Failure> {
    let mut spec = match (&a.preset, &a.config) {
        (Some(name), None) => sweep::preset(name).ok_or_else(|| usage(format!("unknown preset {name}")))?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| usage(format!("reading {}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| usage(format!("parsing {}: {e}", path.display())))?
        }
        _ => return Err(usage("give --preset or --config")),
    };
    if let Some(s) = a.scheme {
        spec.schemes = s.schemes();
    }
    if let Some(k) = &a.k {
        spec.shapes = k.clone();
    }
    let set = |dst: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *dst = v;
        }
    };
    set(&mut spec.mean_service, a.mean_service);
    set(&mut spec.lambda.min, a.lambda_min);
    set(&mut spec.lambda.max, a.lambda_max);
    if let Some(n) = a.lambda_count {
        spec.lambda.count = n;
    }
    if let Some(s) = a.spacing {
        spec.lambda.spacing = s;
    }
    if let Some(h) = a.horizon {
        spec.sim.horizon = h;
    }
    if let Some(w) = a.warmup {
        spec.sim.warmup = w;
    }
    if let Some(b) = a.batches {
        spec.sim.batches = b;
    }
    if let Some(s) = a.seed {
        spec.sim.seed = s;
    }
    if a.analytic_only {
        spec.sim.enabled = false;
    }
    spec.validate().map_err(usage)?;
    Ok(spec)
}

fn cmd_sweep(a: SweepArgs) -> Result<ExitCode, Failure> {
    let spec = resolve_spec(&a)?;
    if a.dump_config {
        let json = serde_json::to_string_pretty(&spec).context("serializing spec")?;
        let mut sink = open_sink(a.out.as_deref()).context("opening output")?;
        writeln!(sink, "{json}").and_then(|_| sink.flush()).context("writing spec")?;
        return Ok(ExitCode::SUCCESS);
    }
    let outcome = sweep::execute(&spec, a.analytic_only, a.check).map_err(usage)?;
    emit(a.out.as_ref(), &outcome.rows)?;
    for f in &outcome.failures {
        eprintln!("row failed: {f}");
    }
    for u in &outcome.unchecked {
        eprintln!("not checked: {u}");
    }
    Ok(if outcome.failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_validate(a: ValidateArgs) -> Result<ExitCode, Failure> {
    let checks = suite::run(&SuiteOptions { quick: a.quick, seed: a.seed });
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut write = || -> io::Result<()> {
        writeln!(out, "{:<6} {:<width$} {:>16} {:>16} {:>10}", "status", "name", "expected", "observed", "tolerance")?;
        for c in &checks {
            writeln!(
                out,
                "{:<6} {:<width$} {:>16} {:>16} {:>10}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                sig9(c.expected),
                sig9(c.observed),
                c.tolerance.to_string(),
            )?;
        }
        let passed = checks.iter().filter(|c| c.passed).count();
        writeln!(out, "{passed}/{} checks passed", checks.len())
    };
    write().context("writing table")?;
    Ok(if checks.iter().all(|c| c.passed) { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
