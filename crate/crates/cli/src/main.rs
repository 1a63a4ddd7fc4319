//! `solibound`: evaluate explicit solutions, sample boundary contours, run verification suites.
//!
//! Exit codes: 0 success, 1 poles found (eval, contour) or checks failed (verify),
//! 2 invalid configuration.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_param, AxisSpec, Command, ConfigError, Format, Model, RunConfig, Solution};
use run::Status;

#[derive(Parser)]
#[command(
    name = "solibound",
    version,
    about = "Integrable boundary problems for the KP equation and the 2D Toda lattice"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate a built-in solution on a grid (CSV or JSON rows).
    Eval(RunArgs),
    /// Run a verification suite and write a JSON report.
    Verify(RunArgs),
    /// Sample the boundary contour with the boundary-constraint residual at each point.
    Contour(RunArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Start from a JSON config, or from a report that embeds one. Flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    model: Option<Model>,
    /// Lattice example: ex1, ex1c1, ex2, ex3.
    #[arg(long)]
    example: Option<String>,
    #[arg(long, value_enum)]
    solution: Option<Solution>,
    /// Parameter override, repeatable. KP: alpha, y0, p. Lattice: c, x0, D, p, k.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    /// Grid axis, repeatable. KP: x, Y, T (contour: x, t). Lattice: X, Y, n (contour: y, n).
    #[arg(long = "grid", value_name = "AXIS:MIN:MAX:COUNT")]
    grid: Vec<String>,
    /// Finite-difference step.
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    suite: Option<String>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn build_config(command: Command, a: RunArgs) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::new(command),
    };
    cfg.command = command;
    if a.model.is_some() {
        cfg.model = a.model;
    }
    if a.example.is_some() {
        cfg.example = a.example;
    }
    if a.solution.is_some() {
        cfg.solution = a.solution;
    }
    for p in &a.params {
        let (k, v) = parse_param(p)?;
        cfg.params.insert(k, v);
    }
    if !a.grid.is_empty() {
        let given = a.grid.iter().map(|g| g.parse()).collect::<Result<Vec<AxisSpec>, _>>()?;
        cfg.grid.retain(|old| !given.iter().any(|g| g.axis == old.axis));
        cfg.grid.extend(given);
    }
    if a.h.is_some() {
        cfg.h = a.h;
    }
    if a.suite.is_some() {
        cfg.suite = a.suite;
    }
    if a.format.is_some() {
        cfg.format = a.format;
    }
    if a.out.is_some() {
        cfg.out = a.out;
    }
    Ok(cfg)
}

fn threads() -> Result<(), ConfigError> {
    let Ok(v) = std::env::var("SOLIBOUND_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| ConfigError(format!("SOLIBOUND_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| ConfigError(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Eval(a) => (Command::Eval, a),
        Cmd::Verify(a) => (Command::Verify, a),
        Cmd::Contour(a) => (Command::Contour, a),
    };
    let resolved = threads().and_then(|_| build_config(command, args)?.resolve());
    let resolved = match resolved {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let status = match command {
        Command::Eval => run::eval(&resolved),
        Command::Verify => run::verify(&resolved),
        Command::Contour => run::contour(&resolved),
    };
    match status {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Flagged) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
