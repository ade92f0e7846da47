//! `hkperiod` command-line driver: writes CSV tables for each demonstration.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hkperiod::tolerances::Tolerances;

use crate::config::RunConfig;
use crate::output::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "hkperiod", version, about = "Period-domain geometry tables")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory [default: out].
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Recompute the constants cache instead of requiring one.
    #[arg(long, global = true)]
    recalibrate: bool,
    /// Tolerance override, repeatable.
    #[arg(long = "tol", global = true, value_name = "NAME=VALUE")]
    tol: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Membership and metric signature of points.
    Domain,
    /// Chart matrices of the metric and their signatures.
    Metric,
    /// Holomorphic sectional curvature samples and their spread.
    Hsc,
    /// Checks of the two-dimensional model.
    D2,
    /// Length series of the two-disk chain and verified chains between points.
    Chain,
    /// Chains of twistor lines between points of the period domain.
    TwistorChain,
    /// Characteristic functions, curvature identity and the diagnostic table.
    Nevanlinna,
    /// Chamber transport along a path of periods.
    Transport,
    /// Writes the constants cache.
    Calibrate,
}

fn load_config(path: &Option<PathBuf>) -> CliResult<RunConfig> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
}

fn run(cli: Cli) -> CliResult<()> {
    let config = load_config(&cli.config)?;
    let mut tol = Tolerances::default();
    for (name, value) in &config.tolerances {
        tol.set(name, *value)?;
    }
    for spec in &cli.tol {
        let (name, value) = spec
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--tol expects NAME=VALUE, got {spec:?}")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("--tol {name}: {value:?} is not a number")))?;
        tol.set(name.trim(), value)?;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| config.out.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let ctx = commands::Context {
        out: output::ensure_dir(&out)?,
        seed: cli.seed.or(config.seed).unwrap_or(0),
        tol,
        recalibrate: cli.recalibrate,
        config,
    };
    match cli.command {
        Command::Domain => commands::domain(&ctx),
        Command::Metric => commands::metric(&ctx),
        Command::Hsc => commands::hsc(&ctx),
        Command::D2 => commands::d2(&ctx),
        Command::Chain => commands::chain(&ctx),
        Command::TwistorChain => commands::twistor_chain(&ctx),
        Command::Nevanlinna => commands::nevanlinna(&ctx),
        Command::Transport => commands::transport(&ctx),
        Command::Calibrate => commands::calibrate(&ctx).map(|_| ()),
    }
}

fn fail(err: CliError) -> ExitCode {
    eprintln!("{}", err.to_json());
    ExitCode::from(err.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(CliError::Config(e.to_string().trim_end().to_string())),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}
