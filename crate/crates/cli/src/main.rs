//! `manifold-ddm solve`: build the requested atlas problem, run the
//! domain-decomposition solve for each grid resolution, and emit one CSV row
//! per resolution. Per-sweep progress goes to stderr, the CSV to stdout or
//! `--out`.

mod config;

use std::io::Write;
use std::time::Instant;

use clap::Parser;

use config::{resolve, Cli, Command, Manifold, RunConfig};
use manifold_ddm::ddm::{solve_observed, SolveOptions};
use manifold_ddm::norms::solution_error_report;
use manifold_ddm::problems::{
    cp2_problem_with, s2xs2_problem_with_b, s4_problem_with_b, Problem,
};

const EXIT_CONFIG: i32 = 2;
const EXIT_SOLVER: i32 = 3;
const EXIT_MEMORY: i32 = 4;

fn main() {
    let cli = Cli::parse();
    let Command::Solve(args) = cli.command;
    let cfg = match resolve(&args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(EXIT_CONFIG);
        }
    };
    if let Some(threads) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: cannot configure {threads} threads: {e}");
            std::process::exit(EXIT_CONFIG);
        }
    }
    std::process::exit(run_study(&cfg));
}

fn build_problem(cfg: &RunConfig) -> Result<Problem, String> {
    let result = match cfg.manifold {
        Manifold::S4 => s4_problem_with_b(cfg.r, cfg.b.unwrap_or(1.0)),
        Manifold::Cp2 => cp2_problem_with(cfg.r, cfg.b.unwrap_or(4.0), [0.0, 1.0, -1.0]),
        Manifold::S2xs2 => s2xs2_problem_with_b(cfg.r, cfg.b.unwrap_or(2.0)),
    };
    result.map_err(|e| e.to_string())
}

/// Crude sparse-storage estimate: per chart, A plus mass plus the interior
/// copy, each ≈ nodes · 3^d nonzeros at 12 bytes per stored entry.
fn estimated_bytes(charts: usize, n: usize, dim: usize) -> f64 {
    let nodes = ((n + 1) as f64).powi(dim as i32);
    charts as f64 * nodes * 3f64.powi(dim as i32) * 12.0 * 3.0
}

fn run_study(cfg: &RunConfig) -> i32 {
    let problem = match build_problem(cfg) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let dim = problem.atlas().dim();
    let charts = problem.atlas().num_charts();

    let cap_bytes = cfg.mem_cap_gib * (1u64 << 30) as f64;
    for &n in &cfg.n_list {
        let estimate = estimated_bytes(charts, n, dim);
        if estimate > cap_bytes {
            eprintln!(
                "error: n = {n} needs an estimated {:.1} GiB of sparse storage, over the {:.1} GiB cap (--mem-cap-gib to raise)",
                estimate / (1u64 << 30) as f64,
                cfg.mem_cap_gib
            );
            return EXIT_MEMORY;
        }
    }

    let mut csv = String::new();
    csv.push_str(
        "manifold,n,h,r,b,cg_tol,quad,linf,l2,l2_flat,h1_semi,h1_semi_metric,energy,n0,cg_total,wall_seconds\n",
    );

    for &n in &cfg.n_list {
        let h = 2.0 * cfg.r / n as f64;
        eprintln!(
            "[{} r={} N={n} h={h:.4}] assembling {charts} charts of {} nodes",
            cfg.manifold,
            cfg.r,
            (n + 1).pow(dim as u32)
        );
        let opts = SolveOptions {
            cg_tol: cfg.cg_tol,
            max_sweeps: cfg.max_sweeps,
            quad_points: cfg.quad_points,
            jacobi: false,
        };
        let start = Instant::now();
        let solution = match solve_observed(&problem, n, opts, |rec| {
            eprintln!(
                "[{} r={} N={n}] sweep {:>3}: cg iterations {:?}, update {:.3e}",
                cfg.manifold, cfg.r, rec.sweep, rec.cg_iterations, rec.update_inf
            );
        }) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_SOLVER;
            }
        };
        let report = match solution_error_report(&problem, &solution, cfg.quad_points) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_SOLVER;
            }
        };
        let wall = start.elapsed().as_secs_f64();
        eprintln!(
            "[{} r={} N={n}] n0 = {}, {} total cg iterations, linf {:.4e}, energy {:.4e}, {wall:.1}s",
            cfg.manifold, cfg.r, solution.n0, solution.total_cg_iterations, report.linf, report.energy
        );
        let sci = |x: f64| format!("{x:.5e}");
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            cfg.manifold,
            n,
            sci(h),
            sci(cfg.r),
            sci(problem.b()),
            sci(cfg.cg_tol),
            cfg.quad_points,
            sci(report.linf),
            sci(report.l2),
            sci(report.l2_flat),
            sci(report.h1_semi),
            sci(report.h1_semi_metric),
            sci(report.energy),
            solution.n0,
            solution.total_cg_iterations,
            sci(wall),
        ));
    }

    match &cfg.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, csv) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return EXIT_SOLVER;
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(csv.as_bytes()).is_err() {
                return EXIT_SOLVER;
            }
        }
    }
    0
}
