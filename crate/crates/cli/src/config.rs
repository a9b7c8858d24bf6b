//! Run configuration: command-line flags merged over an optional key=value
//! config file (flags win).

use std::fmt;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Manifold {
    S4,
    Cp2,
    S2xs2,
}

impl fmt::Display for Manifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Manifold::S4 => "s4",
            Manifold::Cp2 => "cp2",
            Manifold::S2xs2 => "s2xs2",
        };
        write!(f, "{name}")
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "manifold-ddm",
    about = "Solve -Δu + bu = f on chart-atlas manifolds with per-chart Q1 elements and an overlapping domain-decomposition iteration",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a convergence study over one or more grid resolutions and emit
    /// one CSV row per resolution.
    Solve(SolveArgs),
}

#[derive(Debug, Clone, Parser)]
pub struct SolveArgs {
    /// Manifold to solve on.
    #[arg(long, value_enum)]
    pub manifold: Option<Manifold>,

    /// Chart half-width r (> 1); larger r means more chart overlap.
    #[arg(long)]
    pub r: Option<f64>,

    /// Per-axis subdivision counts, comma separated (e.g. 10,20,40).
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,

    /// Reaction constant b; defaults to the per-manifold value (s4: 1,
    /// cp2: 4, s2xs2: 2).
    #[arg(long)]
    pub b: Option<f64>,

    /// Relative-residual tolerance of the inner CG solves.
    #[arg(long)]
    pub cg_tol: Option<f64>,

    /// Gauss points per axis for assembly.
    #[arg(long)]
    pub quad: Option<usize>,

    /// Outer sweep cap before the run is declared non-convergent.
    #[arg(long)]
    pub max_sweeps: Option<usize>,

    /// Worker threads (default: all hardware threads).
    #[arg(long)]
    pub threads: Option<usize>,

    /// CSV output path (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Refuse configurations whose sparse-matrix estimate exceeds this
    /// many GiB.
    #[arg(long)]
    pub mem_cap_gib: Option<f64>,

    /// Optional config file with `key = value` lines (same keys as the
    /// long flags: manifold, r, n, b, cg_tol, quad, max_sweeps, threads,
    /// out, mem_cap_gib). Flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Fully resolved configuration for one study.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub manifold: Manifold,
    pub r: f64,
    pub b: Option<f64>,
    pub n_list: Vec<usize>,
    pub cg_tol: f64,
    pub quad_points: usize,
    pub max_sweeps: usize,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub mem_cap_gib: f64,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// Merge config-file values under the command-line flags and validate.
pub fn resolve(args: &SolveArgs) -> Result<RunConfig, ConfigError> {
    let mut merged = args.clone();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| err(format!("cannot read config file {}: {e}", path.display())))?;
        apply_file(&mut merged, &text)?;
    }

    let manifold = merged
        .manifold
        .ok_or_else(|| err("--manifold is required (s4, cp2 or s2xs2)"))?;
    let r = merged.r.ok_or_else(|| err("--r is required"))?;
    if !(r > 1.0) {
        return Err(err(format!(
            "r = {r} is invalid: the chart interiors cover the manifold only for r > 1"
        )));
    }
    if merged.n.is_empty() {
        return Err(err("--n is required (comma-separated subdivision counts)"));
    }
    for &n in &merged.n {
        if n < 2 {
            return Err(err(format!("n = {n} is too coarse; every N must be >= 2")));
        }
    }
    let cg_tol = merged.cg_tol.unwrap_or(1e-8);
    if !(cg_tol > 0.0 && cg_tol < 1.0) {
        return Err(err(format!("cg tolerance {cg_tol} must lie in (0, 1)")));
    }
    let quad_points = merged.quad.unwrap_or(2);
    if quad_points == 0 || quad_points > 10 {
        return Err(err(format!("quad = {quad_points} unsupported (1..=10)")));
    }
    let max_sweeps = merged.max_sweeps.unwrap_or(500);
    if max_sweeps == 0 {
        return Err(err("max sweeps must be at least 1"));
    }
    if let Some(b) = merged.b {
        if !(b > 0.0) {
            return Err(err(format!(
                "b = {b} is invalid: closed manifolds need b > 0 for well-posedness"
            )));
        }
    }
    let mem_cap_gib = merged.mem_cap_gib.unwrap_or(16.0);
    if !(mem_cap_gib > 0.0) {
        return Err(err("memory cap must be positive"));
    }
    Ok(RunConfig {
        manifold,
        r,
        b: merged.b,
        n_list: merged.n.clone(),
        cg_tol,
        quad_points,
        max_sweeps,
        threads: merged.threads,
        out: merged.out.clone(),
        mem_cap_gib,
    })
}

/// Fill unset fields of `args` from `key = value` lines.
fn apply_file(args: &mut SolveArgs, text: &str) -> Result<(), ConfigError> {
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("config line {}: expected key = value", lineno + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        let parse_f64 = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| err(format!("config line {}: bad number {v:?}", lineno + 1)))
        };
        let parse_usize = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| err(format!("config line {}: bad integer {v:?}", lineno + 1)))
        };
        match key {
            "manifold" => {
                if args.manifold.is_none() {
                    args.manifold = Some(
                        Manifold::from_str(value, true)
                            .map_err(|e| err(format!("config line {}: {e}", lineno + 1)))?,
                    );
                }
            }
            "r" => {
                if args.r.is_none() {
                    args.r = Some(parse_f64(value)?);
                }
            }
            "b" => {
                if args.b.is_none() {
                    args.b = Some(parse_f64(value)?);
                }
            }
            "n" => {
                if args.n.is_empty() {
                    args.n = value
                        .split(',')
                        .map(|v| parse_usize(v.trim()))
                        .collect::<Result<_, _>>()?;
                }
            }
            "cg_tol" => {
                if args.cg_tol.is_none() {
                    args.cg_tol = Some(parse_f64(value)?);
                }
            }
            "quad" => {
                if args.quad.is_none() {
                    args.quad = Some(parse_usize(value)?);
                }
            }
            "max_sweeps" => {
                if args.max_sweeps.is_none() {
                    args.max_sweeps = Some(parse_usize(value)?);
                }
            }
            "threads" => {
                if args.threads.is_none() {
                    args.threads = Some(parse_usize(value)?);
                }
            }
            "out" => {
                if args.out.is_none() {
                    args.out = Some(PathBuf::from(value));
                }
            }
            "mem_cap_gib" => {
                if args.mem_cap_gib.is_none() {
                    args.mem_cap_gib = Some(parse_f64(value)?);
                }
            }
            other => {
                return Err(err(format!(
                    "config line {}: unknown key {other:?}",
                    lineno + 1
                )))
            }
        }
    }
    Ok(())
}
