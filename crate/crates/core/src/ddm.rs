//! The discrete overlapping-Schwarz outer iteration.
//!
//! Charts are solved in order; chart i takes its Dirichlet data on `∂D_i`
//! from the freshest available neighbor field, interpolated through the
//! transition maps (charts `j < i` contribute current-sweep data, the rest
//! previous-sweep data). Inner solves are warm-started CG runs, so outer
//! convergence manifests as a full sweep of zero-iteration solves; the
//! sweep count before that happens is the reported `n0`.

use std::sync::Arc;

use thiserror::Error;

use crate::fem::{assemble, quadrature_rule, AssembledChart, FemError, InteriorSystem};
use crate::problems::Problem;
use crate::solver::{cg_with, default_max_iter, CgOptions, SolverError};
use crate::tensor_grid::{ChartField, GridError, TensorGrid};

#[derive(Debug, Error)]
pub enum DdmError {
    #[error("atlas needs at least two charts for the alternating iteration")]
    SingleChart,
    #[error("cover violation: boundary node {node} of chart {chart} lies in no other chart")]
    CoverViolation { chart: usize, node: usize },
    #[error("boundary transfer failed for node {node} of chart {chart}: {source}")]
    Transfer {
        chart: usize,
        node: usize,
        source: GridError,
    },
    #[error("cg failed on chart {chart} in sweep {sweep}: {source}")]
    ChartSolve {
        chart: usize,
        sweep: usize,
        source: SolverError,
    },
    #[error("no fixed point after {sweeps} sweeps (last update {last_update:.3e})")]
    MaxSweepsExceeded {
        sweeps: usize,
        last_update: f64,
        state: Box<DdmState>,
    },
    #[error(transparent)]
    Fem(#[from] FemError),
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Relative-residual tolerance of the inner CG solves.
    pub cg_tol: f64,
    pub max_sweeps: usize,
    /// Gauss points per axis for assembly.
    pub quad_points: usize,
    /// Jacobi-preconditioned inner solves (off for all reported runs).
    pub jacobi: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            cg_tol: 1e-8,
            max_sweeps: 500,
            quad_points: 2,
            jacobi: false,
        }
    }
}

/// Per-sweep bookkeeping: inner iteration counts, final inner residuals,
/// and the max-norm update `δ_n` over all charts.
#[derive(Debug, Clone)]
pub struct SweepRecord {
    /// 1-based outer sweep index.
    pub sweep: usize,
    pub cg_iterations: Vec<usize>,
    pub cg_residuals: Vec<f64>,
    pub update_inf: f64,
}

/// The iterate tuple `u_h^n = (u_h^{n,1}, …, u_h^{n,m})` plus sweep history.
#[derive(Debug, Clone)]
pub struct DdmState {
    pub fields: Vec<ChartField>,
    /// Completed sweeps.
    pub sweep: usize,
    pub history: Vec<SweepRecord>,
    /// Set at termination: last sweep in which any chart took an inner step.
    pub n0: Option<usize>,
}

/// Assembled data shared by every sweep of one solve: grids, matrices, and
/// interior systems per chart. Building it verifies the cover property for
/// the actual boundary nodes.
pub struct DdmWorkspace<'a> {
    problem: &'a Problem,
    grids: Vec<Arc<TensorGrid>>,
    assembled: Vec<AssembledChart>,
    systems: Vec<InteriorSystem>,
    opts: SolveOptions,
}

impl<'a> DdmWorkspace<'a> {
    pub fn new(
        problem: &'a Problem,
        n_per_axis: usize,
        opts: SolveOptions,
    ) -> Result<Self, DdmError> {
        let atlas = problem.atlas();
        let m = atlas.num_charts();
        if m < 2 {
            return Err(DdmError::SingleChart);
        }
        let quad = quadrature_rule(atlas.dim(), opts.quad_points)?;
        let mut grids = Vec::with_capacity(m);
        let mut assembled = Vec::with_capacity(m);
        let mut systems = Vec::with_capacity(m);
        for i in 0..m {
            let chart = atlas.chart(i);
            let grid = Arc::new(
                TensorGrid::uniform(chart.rect.clone(), n_per_axis).map_err(FemError::from)?,
            );
            let ac = assemble(
                &grid,
                chart,
                problem.b(),
                |x: &[f64]| problem.f_on_chart(i, x),
                &quad,
            )?;
            systems.push(InteriorSystem::new(&ac));
            assembled.push(ac);
            grids.push(grid);
        }

        // cover property: every boundary node of every chart must map into
        // some other chart
        let mut coords = vec![0.0; atlas.dim()];
        for i in 0..m {
            for &node in &assembled[i].boundary {
                grids[i].node_coords_into(node, &mut coords);
                let covered = (0..m).any(|j| j != i && atlas.membership(i, &coords, j));
                if !covered {
                    return Err(DdmError::CoverViolation { chart: i, node });
                }
            }
        }

        Ok(DdmWorkspace {
            problem,
            grids,
            assembled,
            systems,
            opts,
        })
    }

    pub fn grids(&self) -> &[Arc<TensorGrid>] {
        &self.grids
    }

    pub fn assembled(&self) -> &[AssembledChart] {
        &self.assembled
    }

    pub fn options(&self) -> &SolveOptions {
        &self.opts
    }

    /// The zero initial iterate `u_h^0 = 0`.
    pub fn initial_state(&self) -> DdmState {
        DdmState {
            fields: self
                .grids
                .iter()
                .map(|g| ChartField::zeros(Arc::clone(g)))
                .collect(),
            sweep: 0,
            history: Vec::new(),
            n0: None,
        }
    }

    /// Dirichlet data for chart i's boundary nodes, in boundary-node order:
    /// each node takes the value of the highest-indexed chart that contains
    /// it, preferring charts already updated in the current sweep (`j < i`,
    /// current data) over the rest (previous-sweep data).
    ///
    /// `state` must hold current-sweep fields for charts `j < i` and
    /// previous-sweep fields for `j ≥ i`, which is exactly the in-place
    /// mid-sweep layout.
    pub fn boundary_transfer(&self, state: &DdmState, i: usize) -> Result<Vec<f64>, DdmError> {
        let atlas = self.problem.atlas();
        let m = atlas.num_charts();
        let boundary = &self.assembled[i].boundary;
        let mut values = Vec::with_capacity(boundary.len());
        let mut coords = vec![0.0; atlas.dim()];
        for &node in boundary {
            self.grids[i].node_coords_into(node, &mut coords);
            // max of { j < i : membership }, then max of { j > i : membership }
            let source = (0..i)
                .rev()
                .chain(((i + 1)..m).rev())
                .find_map(|j| {
                    let y = atlas.transition(i, j, &coords)?;
                    atlas.chart(j)
                        .rect
                        .contains_with_tol(&y, crate::tensor_grid::LOCATE_REL_TOL)
                        .then_some((j, y))
                });
            let (j0, y) = source.ok_or(DdmError::CoverViolation { chart: i, node })?;
            let value = state.fields[j0]
                .eval(&y)
                .map_err(|source| DdmError::Transfer {
                    chart: i,
                    node,
                    source,
                })?;
            values.push(value);
        }
        Ok(values)
    }

    /// One multiplicative-Schwarz sweep over all charts, in place.
    pub fn sweep(&self, state: &mut DdmState) -> Result<SweepRecord, DdmError> {
        let m = self.grids.len();
        let sweep_index = state.sweep + 1;
        let mut iterations = Vec::with_capacity(m);
        let mut residuals = Vec::with_capacity(m);
        let mut update_inf = 0.0f64;

        for i in 0..m {
            let g = self.boundary_transfer(state, i)?;
            let rhs = self.systems[i].rhs(&g);
            let x0: Vec<f64> = self.systems[i]
                .interior
                .iter()
                .map(|&n| state.fields[i].dofs()[n])
                .collect();
            let cg_opts = CgOptions {
                tol: self.opts.cg_tol,
                max_iter: default_max_iter(x0.len()),
                jacobi: self.opts.jacobi,
            };
            let (x, report) = cg_with(&self.systems[i].a_int, &rhs, &x0, &cg_opts).map_err(
                |source| DdmError::ChartSolve {
                    chart: i,
                    sweep: sweep_index,
                    source,
                },
            )?;

            // write back: boundary values first, then the interior solve
            let dofs = state.fields[i].dofs_mut();
            for (k, &node) in self.systems[i].boundary.iter().enumerate() {
                update_inf = update_inf.max((dofs[node] - g[k]).abs());
                dofs[node] = g[k];
            }
            for (k, &node) in self.systems[i].interior.iter().enumerate() {
                update_inf = update_inf.max((dofs[node] - x[k]).abs());
                dofs[node] = x[k];
            }
            iterations.push(report.iterations);
            residuals.push(report.final_relative_residual);
        }

        state.sweep = sweep_index;
        let record = SweepRecord {
            sweep: sweep_index,
            cg_iterations: iterations,
            cg_residuals: residuals,
            update_inf,
        };
        state.history.push(record.clone());
        Ok(record)
    }
}

/// Result of a converged solve.
#[derive(Debug)]
pub struct Solution {
    pub state: DdmState,
    /// Last sweep in which any chart performed an inner iteration; the
    /// iterate is a fixed point from sweep `n0` on.
    pub n0: usize,
    pub assembled: Vec<AssembledChart>,
    pub total_cg_iterations: usize,
}

/// Run the outer iteration from `u_h^0 = 0` until a full sweep of
/// zero-iteration inner solves.
pub fn solve(problem: &Problem, n_per_axis: usize, opts: SolveOptions) -> Result<Solution, DdmError> {
    solve_observed(problem, n_per_axis, opts, |_| {})
}

/// Like [`solve`] but invoking `observer` after every sweep.
pub fn solve_observed(
    problem: &Problem,
    n_per_axis: usize,
    opts: SolveOptions,
    mut observer: impl FnMut(&SweepRecord),
) -> Result<Solution, DdmError> {
    let max_sweeps = opts.max_sweeps.max(1);
    let workspace = DdmWorkspace::new(problem, n_per_axis, opts)?;
    let mut state = workspace.initial_state();
    loop {
        let record = workspace.sweep(&mut state)?;
        observer(&record);
        if record.cg_iterations.iter().all(|&k| k == 0) {
            let n0 = state.sweep - 1;
            state.n0 = Some(n0);
            let total_cg_iterations = state
                .history
                .iter()
                .map(|r| r.cg_iterations.iter().sum::<usize>())
                .sum();
            return Ok(Solution {
                state,
                n0,
                assembled: workspace.assembled,
                total_cg_iterations,
            });
        }
        if state.sweep >= max_sweeps {
            let last_update = state.history.last().map_or(f64::NAN, |r| r.update_inf);
            return Err(DdmError::MaxSweepsExceeded {
                sweeps: state.sweep,
                last_update,
                state: Box::new(state),
            });
        }
    }
}

/// Least-squares estimate of the per-sweep contraction factor ρ from the
/// update magnitudes δ_n, skipping the first and last few sweeps where the
/// decay is not yet (or no longer) clean. `None` when there are too few
/// usable sweeps.
pub fn estimate_contraction(history: &[SweepRecord]) -> Option<f64> {
    let deltas: Vec<(f64, f64)> = history
        .iter()
        .filter(|r| r.update_inf > 0.0)
        .map(|r| (r.sweep as f64, r.update_inf.ln()))
        .collect();
    // middle window: drop 2 sweeps at the head, 3 at the tail
    let usable = deltas.len().checked_sub(5)?;
    if usable < 2 {
        return None;
    }
    let window = &deltas[2..2 + usable];
    let n = window.len() as f64;
    let mean_x = window.iter().map(|(x, _)| x).sum::<f64>() / n;
    let mean_y = window.iter().map(|(_, y)| y).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in window {
        num += (x - mean_x) * (y - mean_y);
        den += (x - mean_x) * (x - mean_x);
    }
    (den > 0.0).then(|| (num / den).exp())
}
