//! Assembly of the per-chart weak form on a tensor grid: the metric-weighted
//! stiffness-plus-reaction matrix `A`, the weighted mass matrix `M_w`, and
//! the load vector, together with the Dirichlet reduction to interior
//! degrees of freedom.
//!
//! Per element, `q^d` Gauss points integrate
//! `∇φ_ξᵀ K ∇φ_η + b φ_ξ φ_η w` with `(K, w)` evaluated at the mapped
//! quadrature points. `A` is assembled once per chart and reused across
//! outer sweeps; only the Dirichlet lift of the right-hand side changes.

mod quadrature;

pub use quadrature::{quadrature_rule, tensor_rule_from_axis, QuadratureRule};

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::atlas::Chart;
use crate::sparse::{grid_pattern, CsrMatrix, CsrPattern};
use crate::tensor_grid::{GridError, TensorGrid};

#[derive(Debug, Error)]
pub enum FemError {
    #[error("quadrature order q = {q} unsupported (1..=10)")]
    UnsupportedQuadratureOrder { q: usize },
    #[error("zero-dimensional quadrature requested")]
    ZeroDimension,
    #[error("reaction coefficient b = {b} must be nonnegative")]
    NegativeReaction { b: f64 },
    #[error("grid, chart and quadrature dimensions disagree ({grid}/{chart}/{quad})")]
    DimensionMismatch {
        grid: usize,
        chart: usize,
        quad: usize,
    },
    #[error("grid rectangle does not match the chart rectangle")]
    DomainMismatch,
    #[error("boundary values: {missing} boundary nodes missing, {extra} spurious entries")]
    BoundaryValueMismatch { missing: usize, extra: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Everything assembly produces for one chart. `a` and `mass_w` share their
/// sparsity pattern.
#[derive(Debug, Clone)]
pub struct AssembledChart {
    pub grid: Arc<TensorGrid>,
    /// Reaction constant the `a` form was assembled with.
    pub b: f64,
    /// `A[ξ,η] = ∫ ∇φ_ξᵀ K ∇φ_η + b φ_ξ φ_η w`.
    pub a: CsrMatrix,
    /// `M_w[ξ,η] = ∫ φ_ξ φ_η w`.
    pub mass_w: CsrMatrix,
    /// `∫ f φ_ξ w` over the whole rectangle.
    pub load_base: Vec<f64>,
    pub interior: Vec<usize>,
    pub boundary: Vec<usize>,
}

/// Assemble the weak form of one chart. `f` is sampled at mapped quadrature
/// points. Rows are built layer-by-layer along the last axis, so values are
/// bit-reproducible for any thread count.
pub fn assemble<F>(
    grid: &Arc<TensorGrid>,
    chart: &Chart,
    b: f64,
    f: F,
    quad: &QuadratureRule,
) -> Result<AssembledChart, FemError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let d = grid.dim();
    if d != chart.dim() || d != quad.dim() {
        return Err(FemError::DimensionMismatch {
            grid: d,
            chart: chart.dim(),
            quad: quad.dim(),
        });
    }
    if grid.rect() != &chart.rect {
        return Err(FemError::DomainMismatch);
    }
    if !(b >= 0.0) {
        return Err(FemError::NegativeReaction { b });
    }

    let pattern = Arc::new(grid_pattern(grid));
    let n_nodes = grid.node_count();
    let nl = 1usize << d; // local nodes per element
    let nq = quad.len();

    // Reference-element basis tables: values and gradients of the 2^d
    // multilinear shape functions at every quadrature point.
    let mut phi = vec![0.0; nq * nl];
    let mut dphi = vec![0.0; nq * nl * d];
    for iq in 0..nq {
        let s = quad.point(iq);
        for a in 0..nl {
            let mut v = 1.0;
            for k in 0..d {
                v *= if a >> k & 1 == 1 { s[k] } else { 1.0 - s[k] };
            }
            phi[iq * nl + a] = v;
            for k in 0..d {
                let mut g = if a >> k & 1 == 1 { 1.0 } else { -1.0 };
                for kk in 0..d {
                    if kk != k {
                        g *= if a >> kk & 1 == 1 { s[kk] } else { 1.0 - s[kk] };
                    }
                }
                dphi[(iq * nl + a) * d + k] = g;
            }
        }
    }

    let mut a_vals = vec![0.0; pattern.nnz()];
    let mut m_vals = vec![0.0; pattern.nnz()];
    let mut load = vec![0.0; n_nodes];

    let n_last = grid.subdivisions(d - 1);
    let layer_rows = grid.node_strides()[d - 1];
    debug_assert_eq!(layer_rows * (n_last + 1), n_nodes);

    // Split the value arrays into per-layer windows (layer t owns the rows
    // with last-axis index t); each window is written by exactly one task.
    let mut a_slices: Vec<&mut [f64]> = Vec::with_capacity(n_last + 1);
    let mut m_slices: Vec<&mut [f64]> = Vec::with_capacity(n_last + 1);
    let mut load_slices: Vec<&mut [f64]> = Vec::with_capacity(n_last + 1);
    {
        let (mut ra, mut rm, mut rl): (&mut [f64], &mut [f64], &mut [f64]) =
            (&mut a_vals, &mut m_vals, &mut load);
        for t in 0..=n_last {
            let lo = pattern.row_offsets[t * layer_rows];
            let hi = pattern.row_offsets[(t + 1) * layer_rows];
            let (head, tail) = ra.split_at_mut(hi - lo);
            a_slices.push(head);
            ra = tail;
            let (head, tail) = rm.split_at_mut(hi - lo);
            m_slices.push(head);
            rm = tail;
            let (head, tail) = rl.split_at_mut(layer_rows);
            load_slices.push(head);
            rl = tail;
        }
    }

    let ctx = LayerContext {
        grid,
        chart,
        pattern: &pattern,
        f: &f,
        quad,
        phi: &phi,
        dphi: &dphi,
        b,
        layer_rows,
        n_last,
    };

    a_slices
        .into_par_iter()
        .zip(m_slices)
        .zip(load_slices)
        .enumerate()
        .for_each(|(t, ((a_s, m_s), l_s))| assemble_layer(&ctx, t, a_s, m_s, l_s));

    let boundary = grid.boundary_nodes();
    let interior = grid.interior_nodes();

    Ok(AssembledChart {
        grid: Arc::clone(grid),
        b,
        a: CsrMatrix::from_parts(Arc::clone(&pattern), a_vals),
        mass_w: CsrMatrix::from_parts(pattern, m_vals),
        load_base: load,
        interior,
        boundary,
    })
}

struct LayerContext<'a, F> {
    grid: &'a TensorGrid,
    chart: &'a Chart,
    pattern: &'a CsrPattern,
    f: &'a F,
    quad: &'a QuadratureRule,
    phi: &'a [f64],
    dphi: &'a [f64],
    b: f64,
    layer_rows: usize,
    n_last: usize,
}

/// Accumulate all contributions to the rows of node layer `t` (last-axis
/// index = t). Those rows touch only elements in slabs t−1 and t; walking
/// the slabs in a fixed order keeps the float accumulation deterministic.
fn assemble_layer<F>(
    ctx: &LayerContext<'_, F>,
    t: usize,
    a_out: &mut [f64],
    m_out: &mut [f64],
    load_out: &mut [f64],
) where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let grid = ctx.grid;
    let d = grid.dim();
    let nl = 1usize << d;
    let nq = ctx.quad.len();
    let top_bit = 1usize << (d - 1);
    let val_base = ctx.pattern.row_offsets[t * ctx.layer_rows];
    let row_base = t * ctx.layer_rows;

    // scratch buffers reused across elements
    let mut kbuf = vec![0.0; d * d];
    let mut x = vec![0.0; d];
    let mut h = vec![0.0; d];
    let mut inv_h = vec![0.0; d];
    let mut corner = vec![0.0; d];
    let mut gs = vec![0.0; nl * d]; // scaled gradients at one quadrature point
    let mut kg = vec![0.0; nl * d]; // K · scaled gradient
    let mut a_loc = vec![0.0; nl * nl];
    let mut m_loc = vec![0.0; nl * nl];
    let mut l_loc = vec![0.0; nl];
    let mut elem = vec![0usize; d];
    let mut xi = vec![0usize; d];
    let mut lo = vec![0usize; d];
    let mut wstride = vec![0usize; d];

    let slab_elems: usize = (0..d - 1).map(|k| grid.subdivisions(k)).product();

    for &slab in &[t.wrapping_sub(1), t] {
        if slab >= ctx.n_last {
            continue; // t = 0 underflows for the lower slab; t = n_last skips the upper
        }
        // owned local corners: top corners of the slab below, bottom corners
        // of the slab at t
        let owned_bit = if slab + 1 == t { top_bit } else { 0 };

        for e_flat in 0..slab_elems {
            // element multi-index within the slab (axes 0..d-1), slab on the last
            let mut rest = e_flat;
            for k in 0..d - 1 {
                let len = grid.subdivisions(k);
                elem[k] = rest % len;
                rest /= len;
            }
            elem[d - 1] = slab;

            let mut vol = 1.0;
            for k in 0..d {
                let part = &grid.partitions()[k];
                corner[k] = part[elem[k]];
                h[k] = part[elem[k] + 1] - part[elem[k]];
                inv_h[k] = 1.0 / h[k];
                vol *= h[k];
            }

            for a in 0..nl {
                if a & top_bit == owned_bit {
                    l_loc[a] = 0.0;
                    for b in 0..nl {
                        a_loc[a * nl + b] = 0.0;
                        m_loc[a * nl + b] = 0.0;
                    }
                }
            }

            for iq in 0..nq {
                let s = ctx.quad.point(iq);
                for k in 0..d {
                    x[k] = corner[k] + s[k] * h[k];
                }
                let w = ctx.chart.metric_into(&x, &mut kbuf);
                let fval = (ctx.f)(&x);
                let wq = ctx.quad.weight(iq) * vol;

                for bb in 0..nl {
                    for k in 0..d {
                        gs[bb * d + k] = ctx.dphi[(iq * nl + bb) * d + k] * inv_h[k];
                    }
                }
                for bb in 0..nl {
                    for r in 0..d {
                        let mut acc = 0.0;
                        for c in 0..d {
                            acc += kbuf[r * d + c] * gs[bb * d + c];
                        }
                        kg[bb * d + r] = acc;
                    }
                }

                for a in 0..nl {
                    if a & top_bit != owned_bit {
                        continue;
                    }
                    let pa = ctx.phi[iq * nl + a];
                    for bb in 0..nl {
                        let mut stiff = 0.0;
                        for k in 0..d {
                            stiff += gs[a * d + k] * kg[bb * d + k];
                        }
                        let mass = pa * ctx.phi[iq * nl + bb] * w;
                        a_loc[a * nl + bb] += wq * (stiff + ctx.b * mass);
                        m_loc[a * nl + bb] += wq * mass;
                    }
                    l_loc[a] += wq * fval * pa * w;
                }
            }

            // scatter owned rows; entry positions follow from the tensor
            // structure of the row stencil, no search needed
            for a in 0..nl {
                if a & top_bit != owned_bit {
                    continue;
                }
                let mut row = 0usize;
                for k in 0..d {
                    xi[k] = elem[k] + (a >> k & 1);
                    row += xi[k] * grid.node_strides()[k];
                }
                let mut stride = 1usize;
                for k in 0..d {
                    lo[k] = xi[k].saturating_sub(1);
                    let hi = (xi[k] + 1).min(grid.subdivisions(k));
                    wstride[k] = stride;
                    stride *= hi - lo[k] + 1;
                }
                let row_start = ctx.pattern.row_offsets[row] - val_base;
                for bb in 0..nl {
                    let mut off = 0usize;
                    for k in 0..d {
                        off += (elem[k] + (bb >> k & 1) - lo[k]) * wstride[k];
                    }
                    a_out[row_start + off] += a_loc[a * nl + bb];
                    m_out[row_start + off] += m_loc[a * nl + bb];
                }
                load_out[row - row_base] += l_loc[a];
            }
        }
    }
}

/// Interior/boundary splitting of an assembled chart, precomputed once so
/// the outer iteration only refreshes the right-hand side.
#[derive(Debug)]
pub struct InteriorSystem {
    /// `A` restricted to interior × interior, in interior-local indexing.
    pub a_int: CsrMatrix,
    /// `A[interior, boundary]`, columns in boundary-local indexing.
    pub coupling: CsrMatrix,
    pub interior: Vec<usize>,
    pub boundary: Vec<usize>,
    /// `load_base` restricted to interior nodes.
    pub load_int: Vec<f64>,
}

impl InteriorSystem {
    pub fn new(ac: &AssembledChart) -> Self {
        let n = ac.grid.node_count();
        let mut node_kind = vec![usize::MAX; n]; // interior-local or boundary-local index
        let mut is_interior = vec![false; n];
        for (k, &node) in ac.interior.iter().enumerate() {
            node_kind[node] = k;
            is_interior[node] = true;
        }
        for (k, &node) in ac.boundary.iter().enumerate() {
            node_kind[node] = k;
        }

        let mut int_offsets = Vec::with_capacity(ac.interior.len() + 1);
        let mut int_cols: Vec<u32> = Vec::new();
        let mut int_vals: Vec<f64> = Vec::new();
        let mut cpl_offsets = Vec::with_capacity(ac.interior.len() + 1);
        let mut cpl_cols: Vec<u32> = Vec::new();
        let mut cpl_vals: Vec<f64> = Vec::new();
        int_offsets.push(0);
        cpl_offsets.push(0);
        for &node in &ac.interior {
            let (cols, vals) = ac.a.row(node);
            for (&c, &v) in cols.iter().zip(vals) {
                let c = c as usize;
                if is_interior[c] {
                    int_cols.push(node_kind[c] as u32);
                    int_vals.push(v);
                } else {
                    cpl_cols.push(node_kind[c] as u32);
                    cpl_vals.push(v);
                }
            }
            int_offsets.push(int_cols.len());
            cpl_offsets.push(cpl_cols.len());
        }

        let n_int = ac.interior.len();
        let n_bnd = ac.boundary.len();
        let a_int = CsrMatrix::from_parts(
            Arc::new(CsrPattern {
                rows: n_int,
                cols: n_int,
                row_offsets: int_offsets,
                col_indices: int_cols,
            }),
            int_vals,
        );
        let coupling = CsrMatrix::from_parts(
            Arc::new(CsrPattern {
                rows: n_int,
                cols: n_bnd,
                row_offsets: cpl_offsets,
                col_indices: cpl_cols,
            }),
            cpl_vals,
        );
        let load_int = ac.interior.iter().map(|&i| ac.load_base[i]).collect();
        InteriorSystem {
            a_int,
            coupling,
            interior: ac.interior.clone(),
            boundary: ac.boundary.clone(),
            load_int,
        }
    }

    /// Right-hand side for prescribed boundary values (boundary-local
    /// ordering): `load|interior − A[interior, boundary] · g`.
    pub fn rhs(&self, boundary_values: &[f64]) -> Vec<f64> {
        assert_eq!(boundary_values.len(), self.boundary.len());
        let mut lift = vec![0.0; self.load_int.len()];
        self.coupling.mul_vec(boundary_values, &mut lift);
        self.load_int
            .iter()
            .zip(&lift)
            .map(|(l, c)| l - c)
            .collect()
    }
}

/// Dirichlet reduction: eliminate prescribed boundary values and return the
/// interior matrix plus the lifted right-hand side. `boundary_values` must
/// cover exactly the boundary node set of the assembled grid.
pub fn apply_dirichlet(
    ac: &AssembledChart,
    boundary_values: &HashMap<usize, f64>,
) -> Result<(CsrMatrix, Vec<f64>), FemError> {
    let covered = ac
        .boundary
        .iter()
        .filter(|n| boundary_values.contains_key(n))
        .count();
    let missing = ac.boundary.len() - covered;
    let extra = boundary_values.len() - covered;
    if missing > 0 || extra > 0 {
        return Err(FemError::BoundaryValueMismatch { missing, extra });
    }
    let system = InteriorSystem::new(ac);
    let g: Vec<f64> = system.boundary.iter().map(|n| boundary_values[n]).collect();
    let rhs = system.rhs(&g);
    Ok((system.a_int, rhs))
}
