//! Error measures between the nodal interpolant of the exact solution and
//! the iteration limit, per chart and aggregated by max over charts.
//!
//! The energy norm uses the full metric-weighted form `a_i`; the L² norm the
//! weighted mass form; the H¹ seminorm the flat parameter-domain Dirichlet
//! form (the metric-weighted gradient part is also reported). All four are
//! quadratic forms in the DOF difference, evaluated through the assembled
//! matrices; differences of V_h elements make that exact up to quadrature.

use std::sync::Arc;

use thiserror::Error;

use crate::atlas::Chart;
use crate::ddm::Solution;
use crate::fem::{assemble, quadrature_rule, AssembledChart, FemError};
use crate::problems::Problem;
use crate::tensor_grid::ChartField;

#[derive(Debug, Error)]
pub enum NormsError {
    #[error("chart {chart}: field/matrix grids disagree")]
    GridMismatch { chart: usize },
    #[error("expected {want} per-chart entries, got {got}")]
    LengthMismatch { want: usize, got: usize },
    #[error("problem has no analytic solution to compare against")]
    NoExactSolution,
    #[error(transparent)]
    Fem(#[from] FemError),
}

/// One chart's error measures.
#[derive(Debug, Clone, Copy)]
pub struct ChartErrors {
    pub chart: usize,
    pub linf: f64,
    pub l2: f64,
    pub h1_semi: f64,
    pub energy: f64,
    /// L² against the flat (unweighted) mass form.
    pub l2_flat: f64,
    /// Metric-weighted gradient seminorm, `(eᵀ(A − b·M_w)e)^{1/2}`.
    pub h1_semi_metric: f64,
}

/// Max-over-charts error measures plus the per-chart breakdown.
#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub linf: f64,
    pub l2: f64,
    pub h1_semi: f64,
    pub energy: f64,
    pub l2_flat: f64,
    pub h1_semi_metric: f64,
    pub per_chart: Vec<ChartErrors>,
}

/// Compare two per-chart field tuples through the assembled forms. `flat`
/// holds the chart-wise flat assembly (identity coefficients, `b = 0`)
/// whose `a` is the plain Dirichlet form and whose `mass_w` the plain mass.
pub fn error_report(
    exact: &[ChartField],
    approx: &[ChartField],
    assembled: &[AssembledChart],
    flat: &[AssembledChart],
) -> Result<ErrorReport, NormsError> {
    let m = exact.len();
    for got in [approx.len(), assembled.len(), flat.len()] {
        if got != m {
            return Err(NormsError::LengthMismatch { want: m, got });
        }
    }
    let mut per_chart = Vec::with_capacity(m);
    for i in 0..m {
        let n = exact[i].grid().node_count();
        if approx[i].grid().node_count() != n
            || assembled[i].grid.node_count() != n
            || flat[i].grid.node_count() != n
            || exact[i].grid().rect() != approx[i].grid().rect()
        {
            return Err(NormsError::GridMismatch { chart: i });
        }
        let e: Vec<f64> = exact[i]
            .dofs()
            .iter()
            .zip(approx[i].dofs())
            .map(|(a, b)| a - b)
            .collect();
        let linf = e.iter().fold(0.0f64, |mx, v| mx.max(v.abs()));
        let quad_a = assembled[i].a.quadratic_form(&e, &e);
        let quad_m = assembled[i].mass_w.quadratic_form(&e, &e);
        let quad_s = flat[i].a.quadratic_form(&e, &e);
        let quad_mf = flat[i].mass_w.quadratic_form(&e, &e);
        per_chart.push(ChartErrors {
            chart: i,
            linf,
            l2: quad_m.max(0.0).sqrt(),
            h1_semi: quad_s.max(0.0).sqrt(),
            energy: quad_a.max(0.0).sqrt(),
            l2_flat: quad_mf.max(0.0).sqrt(),
            h1_semi_metric: (quad_a - assembled[i].b * quad_m).max(0.0).sqrt(),
        });
    }
    let fold = |f: fn(&ChartErrors) -> f64| per_chart.iter().map(f).fold(0.0f64, f64::max);
    Ok(ErrorReport {
        linf: fold(|c| c.linf),
        l2: fold(|c| c.l2),
        h1_semi: fold(|c| c.h1_semi),
        energy: fold(|c| c.energy),
        l2_flat: fold(|c| c.l2_flat),
        h1_semi_metric: fold(|c| c.h1_semi_metric),
        per_chart,
    })
}

/// Error report of a finished solve against the interpolated analytic
/// solution, assembling the flat forms on the fly.
pub fn solution_error_report(
    problem: &Problem,
    solution: &Solution,
    quad_points: usize,
) -> Result<ErrorReport, NormsError> {
    if !problem.has_exact() {
        return Err(NormsError::NoExactSolution);
    }
    let quad = quadrature_rule(problem.atlas().dim(), quad_points)?;
    let mut exact = Vec::new();
    let mut flat = Vec::new();
    for (i, field) in solution.state.fields.iter().enumerate() {
        let grid = Arc::clone(field.grid());
        exact.push(ChartField::interpolate(Arc::clone(&grid), |x| {
            problem.exact_on_chart(i, x).unwrap()
        }));
        let flat_chart = Chart::flat(grid.rect().clone());
        flat.push(assemble(&grid, &flat_chart, 0.0, |_| 0.0, &quad)?);
    }
    error_report(&exact, &solution.state.fields, &solution.assembled, &flat)
}

/// Per-norm least-squares order fit of `log(error)` against `log(h)`.
#[derive(Debug, Clone, Copy)]
pub struct ConvergenceRates {
    pub linf: f64,
    pub l2: f64,
    pub h1_semi: f64,
    pub energy: f64,
}

/// Fitted convergence orders over `(h, report)` rows. Needs at least two
/// rows with distinct h; norms with a nonpositive entry fit to NaN.
pub fn convergence_rates(rows: &[(f64, ErrorReport)]) -> Result<ConvergenceRates, NormsError> {
    if rows.len() < 2 {
        return Err(NormsError::LengthMismatch {
            want: 2,
            got: rows.len(),
        });
    }
    let fit = |select: fn(&ErrorReport) -> f64| -> f64 {
        let points: Vec<(f64, f64)> = rows
            .iter()
            .filter(|(h, r)| *h > 0.0 && select(r) > 0.0)
            .map(|(h, r)| (h.ln(), select(r).ln()))
            .collect();
        if points.len() < 2 {
            return f64::NAN;
        }
        let n = points.len() as f64;
        let mx = points.iter().map(|(x, _)| x).sum::<f64>() / n;
        let my = points.iter().map(|(_, y)| y).sum::<f64>() / n;
        let num: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
        let den: f64 = points.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
        if den == 0.0 {
            f64::NAN
        } else {
            num / den
        }
    };
    Ok(ConvergenceRates {
        linf: fit(|r| r.linf),
        l2: fit(|r| r.l2),
        h1_semi: fit(|r| r.h1_semi),
        energy: fit(|r| r.energy),
    })
}
