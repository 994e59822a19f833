//! Command-line front end.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use super::config::{FitConfig, MaterialsConfig, MethodName, SimulateConfig, SweepConfig};
use super::output::{fit_report, materials_csv, parse_trace_csv, sweep_csv, trace_csv};
use crate::analysis::{extract_upper_envelope, fit_envelope, upper_envelope, EnvelopeFit, PhysicalScale};
use crate::disorder::{disorder_average, ProbabilityTrace};
use crate::qubit::InitialState;
use crate::sweep::{material_comparison, run_sweep};

/// Environment variable overriding the number of worker threads.
pub const THREADS_ENV: &str = "DEOQ_DYN_THREADS";

#[derive(Debug, Parser)]
#[command(name = "deoq-dyn", version, about = "Disorder-averaged free evolution of a double-dot exchange-only qubit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Disorder-averaged return probability trace (CSV).
    Simulate(RunArgs),
    /// Envelope fit of a trace file or an inline simulation (JSON).
    Fit(RunArgs),
    /// T2* and Q map over noise strengths (CSV).
    Sweep(RunArgs),
    /// Physical T2* per material and charge-noise strength (CSV).
    Materials(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON configuration; `fit` also accepts a trace CSV.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// quadrature | mc
    #[arg(long)]
    pub method: Option<MethodName>,
    /// Monte Carlo sample count.
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn parse_json<T: DeserializeOwned>(path: &Path, text: &str) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| CliError::Invalid(format!("invalid config {}: {e}", path.display())))
}

/// Applies `DEOQ_DYN_THREADS`, when set, to the global worker pool.
pub fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n >= 1)
        .ok_or_else(|| CliError::Invalid(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    // a pool that is already initialized keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn run(cli: &Cli) -> CliResult<()> {
    configure_threads()?;
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Fit(a) => fit(a),
        Command::Sweep(a) => sweep(a),
        Command::Materials(a) => materials(a),
    }
}

fn apply_overrides(cfg: &mut SimulateConfig, args: &RunArgs) {
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(method) = args.method {
        cfg.method = method;
    }
    if let Some(samples) = args.samples {
        cfg.samples = samples;
    }
}

fn reject_mc_flags(args: &RunArgs, command: &str) -> CliResult<()> {
    if args.method == Some(MethodName::Mc) || args.samples.is_some() {
        return Err(CliError::Invalid(format!(
            "`{command}` always uses quadrature; --method mc and --samples do not apply"
        )));
    }
    Ok(())
}

fn time_unit(j0_ev: Option<f64>) -> CliResult<Option<f64>> {
    Ok(j0_ev.map(PhysicalScale::new).transpose()?.map(|s| s.time_unit_s))
}

fn simulate_trace(cfg: &SimulateConfig) -> CliResult<ProbabilityTrace> {
    cfg.validate()?;
    let times = cfg.time.times();
    Ok(disorder_average(&cfg.params, &cfg.noise(), cfg.initial, &times, &cfg.averaging())?)
}

fn simulate(args: &RunArgs) -> CliResult<()> {
    let text = read_text(&args.config)?;
    let mut cfg: SimulateConfig = parse_json(&args.config, &text)?;
    apply_overrides(&mut cfg, args);
    let trace = simulate_trace(&cfg)?;
    let csv = trace_csv(&cfg, &trace, time_unit(cfg.j0_ev)?)?;
    write_text(&args.out, &csv)
}

fn default_start(initial: InitialState) -> Option<f64> {
    match initial {
        InitialState::Zero => Some(1.0),
        InitialState::Superposition => None,
    }
}

/// Envelope and fit of the trace described by `cfg`, with the number of envelope points.
pub fn fit_from_config(cfg: &FitConfig, base_dir: &Path) -> CliResult<(EnvelopeFit, usize, Option<f64>)> {
    cfg.validate()?;
    let (envelope, fixed_start, j0) = match (&cfg.trace, &cfg.simulation) {
        (Some(path), _) => {
            let path = if path.is_relative() { base_dir.join(path) } else { path.clone() };
            let parsed = parse_trace_csv(&read_text(&path)?)?;
            let echo = parsed.config.as_ref();
            let envelope = upper_envelope(&parsed.times, &parsed.values)?;
            (
                envelope,
                cfg.fixed_start.or(echo.and_then(|c| default_start(c.initial))),
                cfg.j0_ev.or(echo.and_then(|c| c.j0_ev)),
            )
        }
        (None, Some(sim)) => {
            let trace = simulate_trace(sim)?;
            (
                extract_upper_envelope(&trace)?,
                cfg.fixed_start.or(default_start(sim.initial)),
                cfg.j0_ev.or(sim.j0_ev),
            )
        }
        (None, None) => unreachable!("rejected by validate"),
    };
    let fit = fit_envelope(&envelope, fixed_start)?;
    Ok((fit, envelope.len(), time_unit(j0)?))
}

fn fit(args: &RunArgs) -> CliResult<()> {
    let is_csv = args
        .config
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let (mut cfg, base_dir) = if is_csv {
        if !args.config.exists() {
            return Err(CliError::Io(format!("cannot read {}: no such file", args.config.display())));
        }
        (
            FitConfig {
                trace: Some(args.config.clone()),
                ..FitConfig::default()
            },
            PathBuf::new(),
        )
    } else {
        let text = read_text(&args.config)?;
        let dir = args.config.parent().map(Path::to_path_buf).unwrap_or_default();
        (parse_json::<FitConfig>(&args.config, &text)?, dir)
    };
    if let Some(sim) = cfg.simulation.as_mut() {
        apply_overrides(sim, args);
    }
    let (fit, points, unit) = fit_from_config(&cfg, &base_dir)?;
    write_text(&args.out, &fit_report(&cfg, &fit, points, unit)?)
}

fn sweep(args: &RunArgs) -> CliResult<()> {
    reject_mc_flags(args, "sweep")?;
    let text = read_text(&args.config)?;
    let cfg: SweepConfig = parse_json(&args.config, &text)?;
    cfg.validate()?;
    let cells = run_sweep(&cfg.grid())?;
    write_text(&args.out, &sweep_csv(&cfg, &cells, time_unit(cfg.j0_ev)?)?)
}

fn materials(args: &RunArgs) -> CliResult<()> {
    reject_mc_flags(args, "materials")?;
    let text = read_text(&args.config)?;
    let cfg: MaterialsConfig = parse_json(&args.config, &text)?;
    cfg.validate()?;
    let rows = material_comparison(&cfg)?;
    write_text(&args.out, &materials_csv(&cfg, &rows)?)
}
