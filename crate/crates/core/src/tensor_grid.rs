//! Structured grids on d-rectangles with the Q1 (multilinear) nodal basis.
//!
//! A [`TensorGrid`] partitions every axis of a [`Rect`] independently; nodes
//! and elements are the tensor products of the per-axis partition points and
//! subintervals. Nodes are numbered lexicographically with axis 0 fastest,
//! which fixes the sparse matrix layout used throughout the crate.

use std::sync::Arc;

use thiserror::Error;

/// Relative per-axis tolerance used by [`TensorGrid::locate`] when deciding
/// whether a point just outside the rectangle should be clamped onto it.
/// Transition images of boundary nodes can land a rounding error outside the
/// closed rectangle; anything beyond this margin is a genuine error.
pub const LOCATE_REL_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("rectangle needs at least one axis")]
    EmptyRect,
    #[error("axis {axis}: lower bound {lo} must be below upper bound {hi}")]
    BadBounds { axis: usize, lo: f64, hi: f64 },
    #[error("axis {axis}: partition must be strictly increasing with at least two points")]
    BadPartition { axis: usize },
    #[error("subdivision count must be at least 1")]
    ZeroSubdivisions,
    #[error("point has dimension {got}, grid has dimension {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("node index {index:?} out of range for axis {axis} (0..={max})")]
    NodeIndexOutOfRange {
        index: Vec<usize>,
        axis: usize,
        max: usize,
    },
    #[error("coordinate {coord} on axis {axis} outside [{lo}, {hi}] beyond tolerance")]
    PointOutsideDomain {
        axis: usize,
        coord: f64,
        lo: f64,
        hi: f64,
    },
    #[error("field has {got} dofs, grid has {want} nodes")]
    DofMismatch { got: usize, want: usize },
}

/// Axis-aligned d-rectangle `Π [lo_k, hi_k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rect {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Rect {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, GridError> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(GridError::EmptyRect);
        }
        for (axis, (&a, &b)) in lo.iter().zip(&hi).enumerate() {
            if !(a < b) || !a.is_finite() || !b.is_finite() {
                return Err(GridError::BadBounds { axis, lo: a, hi: b });
            }
        }
        Ok(Rect { lo, hi })
    }

    /// The cube `[lo, hi]^d`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self, GridError> {
        Rect::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    /// Cartesian product `self × other`.
    pub fn product(&self, other: &Rect) -> Rect {
        let mut lo = self.lo.clone();
        let mut hi = self.hi.clone();
        lo.extend_from_slice(&other.lo);
        hi.extend_from_slice(&other.hi);
        Rect { lo, hi }
    }

    /// Membership in the closed rectangle with a per-axis tolerance of
    /// `rel_tol * extent(axis)`.
    pub fn contains_with_tol(&self, p: &[f64], rel_tol: f64) -> bool {
        if p.len() != self.dim() {
            return false;
        }
        p.iter().enumerate().all(|(k, &x)| {
            let tol = rel_tol * self.extent(k);
            x >= self.lo[k] - tol && x <= self.hi[k] + tol
        })
    }
}

/// Structured grid over a [`Rect`]: per-axis strictly increasing partitions,
/// nodes at every tensor-product combination of partition points.
#[derive(Debug, Clone)]
pub struct TensorGrid {
    rect: Rect,
    partitions: Vec<Vec<f64>>,
    /// Flat-index stride per axis for nodes (axis 0 fastest).
    node_strides: Vec<usize>,
    elem_strides: Vec<usize>,
    node_count: usize,
    element_count: usize,
    /// Flat node offsets of the 2^d corners of an element relative to its
    /// lowest corner node, in local-corner bit order.
    corner_offsets: Vec<usize>,
}

impl TensorGrid {
    /// Grid with `n_per_axis` equal subdivisions on every axis.
    pub fn uniform(rect: Rect, n_per_axis: usize) -> Result<Self, GridError> {
        if n_per_axis == 0 {
            return Err(GridError::ZeroSubdivisions);
        }
        let partitions = (0..rect.dim())
            .map(|k| {
                let (a, b) = (rect.lo[k], rect.hi[k]);
                let h = (b - a) / n_per_axis as f64;
                let mut pts: Vec<f64> = (0..=n_per_axis).map(|j| a + j as f64 * h).collect();
                // end point exact regardless of rounding in the increments
                pts[n_per_axis] = b;
                pts
            })
            .collect();
        Self::from_partitions(partitions)
    }

    /// Grid from explicit per-axis partitions (must be strictly increasing);
    /// the rectangle is recovered from the partition endpoints.
    pub fn from_partitions(partitions: Vec<Vec<f64>>) -> Result<Self, GridError> {
        if partitions.is_empty() {
            return Err(GridError::EmptyRect);
        }
        for (axis, p) in partitions.iter().enumerate() {
            if p.len() < 2 || p.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(GridError::BadPartition { axis });
            }
        }
        let lo: Vec<f64> = partitions.iter().map(|p| p[0]).collect();
        let hi: Vec<f64> = partitions.iter().map(|p| *p.last().unwrap()).collect();
        let rect = Rect::new(lo, hi)?;

        let d = partitions.len();
        let mut node_strides = vec![0usize; d];
        let mut elem_strides = vec![0usize; d];
        let mut nodes = 1usize;
        let mut elems = 1usize;
        for k in 0..d {
            node_strides[k] = nodes;
            elem_strides[k] = elems;
            nodes *= partitions[k].len();
            elems *= partitions[k].len() - 1;
        }
        let corner_offsets = (0..1usize << d)
            .map(|bits| {
                (0..d)
                    .filter(|&k| bits >> k & 1 == 1)
                    .map(|k| node_strides[k])
                    .sum()
            })
            .collect();
        Ok(TensorGrid {
            rect,
            partitions,
            node_strides,
            elem_strides,
            node_count: nodes,
            element_count: elems,
            corner_offsets,
        })
    }

    pub fn dim(&self) -> usize {
        self.partitions.len()
    }

    pub fn rect(&self) -> &Rect {
        &self.rect
    }

    pub fn partitions(&self) -> &[Vec<f64>] {
        &self.partitions
    }

    /// Subdivision count `N_k` per axis.
    pub fn subdivisions(&self, axis: usize) -> usize {
        self.partitions[axis].len() - 1
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn element_count(&self) -> usize {
        self.element_count
    }

    /// Mesh scale `h = max` spacing over all axes and subintervals.
    pub fn mesh_size(&self) -> f64 {
        self.partitions
            .iter()
            .flat_map(|p| p.windows(2).map(|w| w[1] - w[0]))
            .fold(0.0, f64::max)
    }

    pub fn node_strides(&self) -> &[usize] {
        &self.node_strides
    }

    pub(crate) fn corner_offsets(&self) -> &[usize] {
        &self.corner_offsets
    }

    /// Flat index of a node multi-index (axis 0 fastest). Multi-index must be
    /// in range; this is the inverse of [`TensorGrid::node_multi_index`].
    pub fn flat_node_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.node_strides)
            .map(|(&j, &s)| j * s)
            .sum()
    }

    pub fn node_multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut multi = vec![0usize; self.dim()];
        for k in 0..self.dim() {
            let len = self.partitions[k].len();
            multi[k] = flat % len;
            flat /= len;
        }
        multi
    }

    pub fn flat_element_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.elem_strides)
            .map(|(&j, &s)| j * s)
            .sum()
    }

    pub fn element_multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut multi = vec![0usize; self.dim()];
        for k in 0..self.dim() {
            let len = self.partitions[k].len() - 1;
            multi[k] = flat % len;
            flat /= len;
        }
        multi
    }

    /// Coordinates `(c_{1,j1}, ..., c_{d,jd})` of a node.
    pub fn node_coords(&self, multi: &[usize]) -> Result<Vec<f64>, GridError> {
        if multi.len() != self.dim() {
            return Err(GridError::DimensionMismatch {
                got: multi.len(),
                want: self.dim(),
            });
        }
        for (axis, (&j, p)) in multi.iter().zip(&self.partitions).enumerate() {
            if j >= p.len() {
                return Err(GridError::NodeIndexOutOfRange {
                    index: multi.to_vec(),
                    axis,
                    max: p.len() - 1,
                });
            }
        }
        Ok(multi
            .iter()
            .zip(&self.partitions)
            .map(|(&j, p)| p[j])
            .collect())
    }

    /// Node coordinates by flat index, written into `out`.
    pub fn node_coords_into(&self, flat: usize, out: &mut [f64]) {
        let mut rest = flat;
        for k in 0..self.dim() {
            let len = self.partitions[k].len();
            out[k] = self.partitions[k][rest % len];
            rest /= len;
        }
    }

    /// Locate the element containing `p` and the local coordinates of `p`
    /// inside it. Points within [`LOCATE_REL_TOL`] of the rectangle are
    /// clamped onto it; points exactly on an interior face resolve to the
    /// lower-index element (local coordinate 1 there).
    pub fn locate(&self, p: &[f64]) -> Result<Location, GridError> {
        if p.len() != self.dim() {
            return Err(GridError::DimensionMismatch {
                got: p.len(),
                want: self.dim(),
            });
        }
        let mut element = vec![0usize; self.dim()];
        let mut local = vec![0f64; self.dim()];
        self.locate_into(p, &mut element, &mut local)?;
        Ok(Location { element, local })
    }

    pub(crate) fn locate_into(
        &self,
        p: &[f64],
        element: &mut [usize],
        local: &mut [f64],
    ) -> Result<(), GridError> {
        for (axis, cs) in self.partitions.iter().enumerate() {
            let (lo, hi) = (cs[0], cs[cs.len() - 1]);
            let tol = LOCATE_REL_TOL * (hi - lo);
            let mut x = p[axis];
            if x < lo {
                if x < lo - tol {
                    return Err(GridError::PointOutsideDomain {
                        axis,
                        coord: x,
                        lo,
                        hi,
                    });
                }
                x = lo;
            } else if x > hi {
                if x > hi + tol {
                    return Err(GridError::PointOutsideDomain {
                        axis,
                        coord: x,
                        lo,
                        hi,
                    });
                }
                x = hi;
            }
            // First partition point >= x. k == 0 only when x == lo.
            let k = cs.partition_point(|&c| c < x);
            if k == 0 {
                element[axis] = 0;
                local[axis] = 0.0;
            } else {
                let e = k - 1;
                element[axis] = e;
                local[axis] = (x - cs[e]) / (cs[e + 1] - cs[e]);
            }
        }
        Ok(())
    }

    /// Whether the node with the given flat index lies on `∂D`.
    pub fn is_boundary_node(&self, flat: usize) -> bool {
        let mut rest = flat;
        for p in &self.partitions {
            let j = rest % p.len();
            if j == 0 || j == p.len() - 1 {
                return true;
            }
            rest /= p.len();
        }
        false
    }

    /// Flat indices of all boundary nodes, ascending.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.node_count)
            .filter(|&n| self.is_boundary_node(n))
            .collect()
    }

    /// Flat indices of all interior nodes, ascending.
    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.node_count)
            .filter(|&n| !self.is_boundary_node(n))
            .collect()
    }
}

/// Result of point location: element multi-index plus local coordinates in
/// `[0,1]^d` relative to that element.
#[derive(Debug, Clone, PartialEq)]
pub struct Location {
    pub element: Vec<usize>,
    pub local: Vec<f64>,
}

/// Nodal coefficient vector for the Q1 space on one grid.
#[derive(Debug, Clone)]
pub struct ChartField {
    grid: Arc<TensorGrid>,
    dofs: Vec<f64>,
}

impl ChartField {
    pub fn zeros(grid: Arc<TensorGrid>) -> Self {
        let n = grid.node_count();
        ChartField {
            grid,
            dofs: vec![0.0; n],
        }
    }

    pub fn from_dofs(grid: Arc<TensorGrid>, dofs: Vec<f64>) -> Result<Self, GridError> {
        if dofs.len() != grid.node_count() {
            return Err(GridError::DofMismatch {
                got: dofs.len(),
                want: grid.node_count(),
            });
        }
        Ok(ChartField { grid, dofs })
    }

    /// Nodal interpolant: `dofs[ξ] = f(coords(ξ))`.
    pub fn interpolate<F: Fn(&[f64]) -> f64>(grid: Arc<TensorGrid>, f: F) -> Self {
        let mut dofs = vec![0.0; grid.node_count()];
        let mut x = vec![0.0; grid.dim()];
        for (flat, dof) in dofs.iter_mut().enumerate() {
            grid.node_coords_into(flat, &mut x);
            *dof = f(&x);
        }
        ChartField { grid, dofs }
    }

    pub fn grid(&self) -> &Arc<TensorGrid> {
        &self.grid
    }

    pub fn dofs(&self) -> &[f64] {
        &self.dofs
    }

    pub fn dofs_mut(&mut self) -> &mut [f64] {
        &mut self.dofs
    }

    /// Q1 evaluation `Σ_ξ dofs[ξ] φ_ξ(p)`: the multilinear blend of the 2^d
    /// corner values of the element containing `p`.
    pub fn eval(&self, p: &[f64]) -> Result<f64, GridError> {
        let d = self.grid.dim();
        debug_assert!(d <= 16);
        let mut element = [0usize; 16];
        let mut local = [0f64; 16];
        self.grid
            .locate_into(p, &mut element[..d], &mut local[..d])?;
        let base: usize = element[..d]
            .iter()
            .zip(self.grid.node_strides())
            .map(|(&e, &s)| e * s)
            .sum();
        let mut value = 0.0;
        for (bits, &off) in self.grid.corner_offsets().iter().enumerate() {
            let mut weight = 1.0;
            for (k, &s) in local[..d].iter().enumerate() {
                weight *= if bits >> k & 1 == 1 { s } else { 1.0 - s };
            }
            value += weight * self.dofs[base + off];
        }
        Ok(value)
    }

    /// Max-norm of the difference to another field on the same grid.
    pub fn max_diff(&self, other: &ChartField) -> f64 {
        self.dofs
            .iter()
            .zip(&other.dofs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
