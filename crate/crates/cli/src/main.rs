use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use stickslip_cli::commands;
use stickslip_cli::config::{parse_config, RunConfig};
use stickslip_cli::presets;

/// Dynamic viscoelastic contact solver with rate-and-state friction.
///
/// Exit codes: 0 success, 2 scheme did not converge, 1 any other error.
#[derive(Parser)]
#[command(name = "stickslip", version, arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct CommonArgs {
    /// Configuration file ([section] headers with key = value lines)
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,

    /// Named preset: chain-1d, frictionless, rsf-compliance, rsf-damped
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,

    /// Output directory (default: the `directory` key of the config)
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Seed for randomized probes and perturbation directions
    #[arg(long, value_name = "N")]
    seed: Option<u64>,

    /// Override the time step
    #[arg(long, value_name = "X")]
    dt: Option<f64>,

    /// Override the time horizon
    #[arg(long = "T", value_name = "X")]
    horizon: Option<f64>,

    /// Override the outer stopping tolerance
    #[arg(long, value_name = "X")]
    tol: Option<f64>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Samples per probed inequality
    #[arg(long, default_value_t = 20_000)]
    samples: usize,
}

#[derive(Args)]
struct FlowmapArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Comma-separated perturbation sizes, strictly decreasing, at least
    /// three (default: 1e-2,1e-3,1e-4 scaled by the initial velocity norm)
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    deltas: Option<Vec<f64>>,
}

#[derive(Args)]
struct CurvesArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Samples per curve
    #[arg(long, default_value_t = 401)]
    points: usize,

    /// Slip rate the curves are evaluated at (default: the reference rate)
    #[arg(long, value_name = "X")]
    rate: Option<f64>,

    /// Half-width of the state window around the base state
    #[arg(long, default_value_t = 1.0)]
    width: f64,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Comma-separated list of time steps, one independent run per entry
    /// (default: dt, dt/2, dt/4)
    #[arg(long = "dt-list", value_name = "LIST", value_delimiter = ',')]
    dt_list: Option<Vec<f64>>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the configured scenario; writes trajectory.csv and report.txt
    Run(CommonArgs),
    /// Evaluate solvability conditions and probe the law hypotheses
    Check(CheckArgs),
    /// Perturb the initial data and tabulate trajectory distances
    Flowmap(FlowmapArgs),
    /// Emit friction-coefficient and state-evolution curve data
    RsfCurves(CurvesArgs),
    /// Fan independent runs over a list of time steps, one thread each
    Sweep(SweepArgs),
}

/// Load the config (file or preset), apply flag overrides, validate.
/// Returns the effective config and the output directory.
fn resolve(common: &CommonArgs) -> Result<(RunConfig, PathBuf)> {
    let mut cfg = match (&common.config, &common.preset) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            parse_config(&text).map_err(|e| anyhow!("{}: {}", path.display(), e))?
        }
        (None, Some(name)) => presets::preset(name).ok_or_else(|| {
            anyhow!("unknown preset `{}` (available: {})", name, presets::PRESET_NAMES.join(", "))
        })?,
        (None, None) => bail!("provide --config PATH or --preset NAME"),
        (Some(_), Some(_)) => bail!("--config and --preset are mutually exclusive"),
    };
    if let Some(dt) = common.dt {
        cfg.scheme.dt = dt;
    }
    if let Some(t) = common.horizon {
        cfg.scheme.horizon = t;
    }
    if let Some(tol) = common.tol {
        cfg.scheme.outer_tol = tol;
    }
    if let Some(seed) = common.seed {
        cfg.output.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output.directory = out.display().to_string();
    }
    cfg.validate().map_err(|e| anyhow!("{}", e))?;
    let dir = PathBuf::from(&cfg.output.directory);
    Ok((cfg, dir))
}

fn dispatch(cli: Cli) -> Result<u8> {
    match cli.cmd {
        Cmd::Run(common) => {
            let (cfg, dir) = resolve(&common)?;
            commands::cmd_run(&cfg, &dir)
        }
        Cmd::Check(args) => {
            let (cfg, dir) = resolve(&args.common)?;
            commands::cmd_check(&cfg, &dir, args.samples)
        }
        Cmd::Flowmap(args) => {
            let (cfg, dir) = resolve(&args.common)?;
            commands::cmd_flowmap(&cfg, &dir, args.deltas)
        }
        Cmd::RsfCurves(args) => {
            let (cfg, dir) = resolve(&args.common)?;
            commands::cmd_rsf_curves(&cfg, &dir, args.points, args.rate, args.width)
        }
        Cmd::Sweep(args) => {
            let (cfg, dir) = resolve(&args.common)?;
            commands::cmd_sweep(&cfg, &dir, args.dt_list)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {:#}", e);
            ExitCode::from(1)
        }
    }
}
