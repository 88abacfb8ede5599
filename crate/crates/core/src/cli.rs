//! Command-line front end.
//!
//! ```text
//! smc run --config <path> [--seed <u64>] --out <path> [--dump-particles k1,k2,…]
//! smc golden <fixture>
//! smc demo-1d --out <path> [--seed <u64>] [--dump-particles …]
//! smc demo-2d --out <path> [--seed <u64>] [--dump-particles …]
//! ```
//!
//! Seed precedence: `--seed`, then the config's `seed`, then `SMC_SEED`,
//! then 0. Exit codes: 0 success, 1 config/validation failure or golden
//! mismatch, 2 I/O failure or malformed fixture.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::golden::GoldenFixture;
use crate::sim::{run_scenario, Scenario, TraceSummary};
use crate::trace::{format_float, write_particles_csv, write_trace_csv};

pub const SEED_ENV: &str = "SMC_SEED";

#[derive(Debug, Parser)]
#[command(name = "smc", version, about = "Bootstrap particle filter simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario described by a JSON config and write its trace CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Replay a golden fixture through the injected-noise step.
    Golden { fixture: PathBuf },
    /// Scalar random-walk preset (Q = 1, R = 4, T = 15, N = 200).
    #[command(name = "demo-1d")]
    Demo1d {
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Planar constant-velocity preset (T = 30, N = 500).
    #[command(name = "demo-2d")]
    Demo2d {
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Steps whose particle cloud is written to `<out>.particles.csv`.
    #[arg(long, value_delimiter = ',')]
    pub dump_particles: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Config(String),
    Io(String),
    Mismatch(String),
    Fixture(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Mismatch(_) => 1,
            CliError::Io(_) | CliError::Fixture(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Mismatch(m) => write!(f, "golden mismatch: {m}"),
            CliError::Fixture(m) => write!(f, "malformed fixture: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    match execute(cli, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("smc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn execute<W: Write>(cli: Cli, stdout: &mut W) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, output } => cmd_run(&config, &output, stdout).map(|_| ()),
        Command::Golden { fixture } => cmd_golden(&fixture, stdout),
        Command::Demo1d { output } => {
            cmd_preset(RunConfig::from_scenario(&Scenario::demo_1d(), None), &output, stdout).map(|_| ())
        }
        Command::Demo2d { output } => {
            cmd_preset(RunConfig::from_scenario(&Scenario::demo_2d(), None), &output, stdout).map(|_| ())
        }
    }
}

/// `--seed`, else the config's seed, else `SMC_SEED`, else 0.
pub fn resolve_seed(flag: Option<u64>, config: Option<u64>) -> Result<u64, CliError> {
    if let Some(seed) = flag.or(config) {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV) {
        Ok(text) => text
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("{SEED_ENV}={text:?} is not a u64"))),
        Err(_) => Ok(0),
    }
}

/// `trace.csv` → `trace.particles.csv`.
pub fn particles_path(out: &Path) -> PathBuf {
    out.with_extension("particles.csv")
}

pub fn cmd_run<W: Write>(config_path: &Path, output: &OutputArgs, stdout: &mut W) -> Result<TraceSummary, CliError> {
    let config = RunConfig::load(config_path).map_err(|e| CliError::Config(e.to_string()))?;
    cmd_preset(config, output, stdout)
}

fn cmd_preset<W: Write>(mut config: RunConfig, output: &OutputArgs, stdout: &mut W) -> Result<TraceSummary, CliError> {
    if let Some(dump) = &output.dump_particles {
        config.dump_particles = dump.clone();
    }
    let scenario = config.to_scenario().map_err(|e| CliError::Config(e.to_string()))?;
    let seed = resolve_seed(output.seed, config.seed)?;
    let trace = run_scenario(&scenario, seed).map_err(|e| CliError::Config(e.to_string()))?;
    let summary = trace
        .summary(&scenario.model)
        .map_err(|e| CliError::Config(e.to_string()))?;

    let (state_names, obs_names) = scenario.model.component_names();
    write_file(&output.out, |w| write_trace_csv(w, &trace, state_names, obs_names))?;
    if !scenario.dump_steps.is_empty() {
        write_file(&particles_path(&output.out), |w| {
            write_particles_csv(w, &trace.snapshots, state_names)
        })?;
    }

    let estimate: Vec<String> = summary.final_estimate.iter().map(|v| format_float(*v)).collect();
    writeln!(
        stdout,
        "scenario={} seed={} steps={} final_estimate=[{}] rmse_truth={} rmse_meas={} resamples={}",
        scenario.name,
        seed,
        trace.len(),
        estimate.join(","),
        format_float(summary.rmse_estimate),
        format_float(summary.rmse_measurement),
        summary.resample_count,
    )
    .map_err(|e| CliError::Io(e.to_string()))?;
    Ok(summary)
}

fn write_file<F>(path: &Path, body: F) -> Result<(), CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let io_err = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let file = File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    body(&mut w).map_err(io_err)?;
    w.flush().map_err(io_err)
}

pub fn cmd_golden<W: Write>(fixture_path: &Path, stdout: &mut W) -> Result<(), CliError> {
    let fixture = GoldenFixture::load(fixture_path).map_err(|e| CliError::Fixture(e.to_string()))?;
    let report = fixture.replay().map_err(|e| CliError::Fixture(e.to_string()))?;
    let io = |e: std::io::Error| CliError::Io(e.to_string());
    let failures: Vec<_> = report.failures().collect();
    for c in &failures {
        writeln!(
            stdout,
            "MISMATCH {}: expected {} actual {} (tolerance {})",
            c.label,
            format_float(c.expected),
            format_float(c.actual),
            format_float(c.tolerance)
        )
        .map_err(io)?;
    }
    if failures.is_empty() {
        writeln!(stdout, "PASS {} ({} checks)", fixture_path.display(), report.checks.len()).map_err(io)?;
        Ok(())
    } else {
        writeln!(
            stdout,
            "FAIL {} ({} of {} checks failed)",
            fixture_path.display(),
            failures.len(),
            report.checks.len()
        )
        .map_err(io)?;
        Err(CliError::Mismatch(format!("{} checks failed", failures.len())))
    }
}
