//! Compressed sparse row matrices with a shareable sparsity pattern.
//!
//! Assembly produces several matrices over the same grid (stiffness, mass),
//! so the pattern (row offsets + column indices) lives behind an [`Arc`] and
//! value arrays are per matrix. Column indices are `u32`: a 4-D grid at
//! N = 80 has 81^4 ≈ 4.3e7 nodes, comfortably inside range.

use std::sync::Arc;

use rayon::prelude::*;

use crate::tensor_grid::TensorGrid;

/// Sparsity structure: row offsets and sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrPattern {
    pub rows: usize,
    pub cols: usize,
    pub row_offsets: Vec<usize>,
    pub col_indices: Vec<u32>,
}

impl CsrPattern {
    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    pub fn row_cols(&self, r: usize) -> &[u32] {
        &self.col_indices[self.row_offsets[r]..self.row_offsets[r + 1]]
    }

    /// Position of entry (r, c) in the value array, if structurally present.
    pub fn position(&self, r: usize, c: usize) -> Option<usize> {
        let start = self.row_offsets[r];
        self.row_cols(r)
            .binary_search(&(c as u32))
            .ok()
            .map(|k| start + k)
    }
}

#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pattern: Arc<CsrPattern>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(pattern: Arc<CsrPattern>) -> Self {
        let nnz = pattern.nnz();
        CsrMatrix {
            pattern,
            values: vec![0.0; nnz],
        }
    }

    pub fn from_parts(pattern: Arc<CsrPattern>, values: Vec<f64>) -> Self {
        assert_eq!(pattern.nnz(), values.len());
        CsrMatrix { pattern, values }
    }

    /// Dense-to-CSR conversion keeping every entry, zero or not. Intended for
    /// small test matrices.
    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for row in rows {
            assert_eq!(row.len(), m);
            for (c, &v) in row.iter().enumerate() {
                col_indices.push(c as u32);
                values.push(v);
            }
            row_offsets.push(col_indices.len());
        }
        CsrMatrix {
            pattern: Arc::new(CsrPattern {
                rows: n,
                cols: m,
                row_offsets,
                col_indices,
            }),
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.pattern.rows
    }

    pub fn cols(&self) -> usize {
        self.pattern.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn pattern(&self) -> &Arc<CsrPattern> {
        &self.pattern
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn row(&self, r: usize) -> (&[u32], &[f64]) {
        let range = self.pattern.row_offsets[r]..self.pattern.row_offsets[r + 1];
        (&self.pattern.col_indices[range.clone()], &self.values[range])
    }

    /// Entry (r, c), zero if not stored.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.pattern.position(r, c).map_or(0.0, |p| self.values[p])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows()).map(|r| self.get(r, r)).collect()
    }

    /// `y = A x`. Rows are partitioned into fixed chunks so the per-row
    /// accumulation order never depends on the thread schedule.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.cols());
        assert_eq!(y.len(), self.rows());
        let offsets = &self.pattern.row_offsets;
        let cols = &self.pattern.col_indices;
        let vals = &self.values;
        y.par_chunks_mut(4096).enumerate().for_each(|(chunk, yc)| {
            let row0 = chunk * 4096;
            for (i, yi) in yc.iter_mut().enumerate() {
                let r = row0 + i;
                let mut acc = 0.0;
                for k in offsets[r]..offsets[r + 1] {
                    acc += vals[k] * x[cols[k] as usize];
                }
                *yi = acc;
            }
        });
    }

    /// Quadratic form `xᵀ A y` (serial, fixed order).
    pub fn quadratic_form(&self, x: &[f64], y: &[f64]) -> f64 {
        assert_eq!(x.len(), self.rows());
        assert_eq!(y.len(), self.cols());
        let offsets = &self.pattern.row_offsets;
        let cols = &self.pattern.col_indices;
        let mut total = 0.0;
        for r in 0..self.rows() {
            let mut acc = 0.0;
            for k in offsets[r]..offsets[r + 1] {
                acc += self.values[k] * y[cols[k] as usize];
            }
            total += x[r] * acc;
        }
        total
    }

    /// Largest absolute asymmetry `|a_rc − a_cr|` over stored entries.
    pub fn symmetry_defect(&self) -> f64 {
        let mut defect = 0.0f64;
        for r in 0..self.rows() {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                defect = defect.max((v - self.get(c as usize, r)).abs());
            }
        }
        defect
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Sparsity pattern of the Q1 stiffness/mass matrices on a tensor grid: node
/// ξ couples to every node η with `|η_k − ξ_k| ≤ 1` on all axes, so interior
/// rows carry 3^d entries. Column indices come out sorted because offsets are
/// walked most-significant axis outermost.
pub fn grid_pattern(grid: &TensorGrid) -> CsrPattern {
    let d = grid.dim();
    let n = grid.node_count();
    let sizes: Vec<usize> = (0..d).map(|k| grid.subdivisions(k) + 1).collect();
    let strides = grid.node_strides();

    let mut row_offsets = Vec::with_capacity(n + 1);
    row_offsets.push(0usize);
    let mut nnz = 0usize;
    let mut multi = vec![0usize; d];
    for flat in 0..n {
        grid_node_multi(flat, &sizes, &mut multi);
        let mut count = 1usize;
        for k in 0..d {
            let lo = multi[k].saturating_sub(1);
            let hi = (multi[k] + 1).min(sizes[k] - 1);
            count *= hi - lo + 1;
        }
        nnz += count;
        row_offsets.push(nnz);
    }

    let mut col_indices = vec![0u32; nnz];
    let mut pos = 0usize;
    let mut lo = vec![0usize; d];
    let mut hi = vec![0usize; d];
    let mut cursor = vec![0usize; d];
    for flat in 0..n {
        grid_node_multi(flat, &sizes, &mut multi);
        for k in 0..d {
            lo[k] = multi[k].saturating_sub(1);
            hi[k] = (multi[k] + 1).min(sizes[k] - 1);
            cursor[k] = lo[k];
        }
        loop {
            let col: usize = cursor.iter().zip(strides).map(|(&j, &s)| j * s).sum();
            col_indices[pos] = col as u32;
            pos += 1;
            // advance mixed-radix cursor, axis 0 fastest
            let mut k = 0;
            loop {
                if k == d {
                    break;
                }
                cursor[k] += 1;
                if cursor[k] <= hi[k] {
                    break;
                }
                cursor[k] = lo[k];
                k += 1;
            }
            if k == d {
                break;
            }
        }
    }
    debug_assert_eq!(pos, nnz);

    CsrPattern {
        rows: n,
        cols: n,
        row_offsets,
        col_indices,
    }
}

#[inline]
fn grid_node_multi(mut flat: usize, sizes: &[usize], out: &mut [usize]) {
    for (k, &len) in sizes.iter().enumerate() {
        out[k] = flat % len;
        flat /= len;
    }
}
