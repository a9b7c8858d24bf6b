//! Tensor-product Gauss–Legendre quadrature on the unit cube `[0,1]^d`.

use super::FemError;

/// Tensorized Gauss–Legendre rule: `q^d` points, weights summing to one.
/// Exact for polynomials of per-axis degree ≤ 2q−1.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    dim: usize,
    points_per_axis: usize,
    axis_points: Vec<f64>,
    axis_weights: Vec<f64>,
    /// Flattened tensor points, `len() * dim` entries, axis 0 fastest.
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    /// Number of tensor points per element.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn axis_points(&self) -> &[f64] {
        &self.axis_points
    }

    pub fn axis_weights(&self) -> &[f64] {
        &self.axis_weights
    }
}

/// Build the `d`-dimensional rule with `q` points per axis, `1 ≤ q ≤ 10`.
pub fn quadrature_rule(dim: usize, q: usize) -> Result<QuadratureRule, FemError> {
    if q == 0 || q > 10 {
        return Err(FemError::UnsupportedQuadratureOrder { q });
    }
    let (axis_points, axis_weights) = gauss_legendre_unit(q);
    tensorize(dim, axis_points, axis_weights)
}

/// Tensorize a custom per-axis rule on `[0,1]` (points in `[0,1]`, weights
/// summing to one).
pub fn tensor_rule_from_axis(
    dim: usize,
    axis_points: Vec<f64>,
    axis_weights: Vec<f64>,
) -> Result<QuadratureRule, FemError> {
    if axis_points.is_empty() || axis_points.len() != axis_weights.len() {
        return Err(FemError::UnsupportedQuadratureOrder {
            q: axis_points.len(),
        });
    }
    tensorize(dim, axis_points, axis_weights)
}

fn tensorize(
    dim: usize,
    axis_points: Vec<f64>,
    axis_weights: Vec<f64>,
) -> Result<QuadratureRule, FemError> {
    if dim == 0 {
        return Err(FemError::ZeroDimension);
    }
    let q = axis_points.len();
    let total = q.pow(dim as u32);
    let mut points = Vec::with_capacity(total * dim);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        let mut w = 1.0;
        for k in 0..dim {
            points.push(axis_points[idx[k]]);
            w *= axis_weights[idx[k]];
        }
        weights.push(w);
        for k in 0..dim {
            idx[k] += 1;
            if idx[k] < q {
                break;
            }
            idx[k] = 0;
        }
    }
    Ok(QuadratureRule {
        dim,
        points_per_axis: q,
        axis_points,
        axis_weights,
        points,
        weights,
    })
}

/// Gauss–Legendre points and weights on `[0,1]`, by Newton iteration on the
/// Legendre polynomial `P_q`.
fn gauss_legendre_unit(q: usize) -> (Vec<f64>, Vec<f64>) {
    let mut points = vec![0.0; q];
    let mut weights = vec![0.0; q];
    for i in 0..q {
        // Chebyshev-based initial guess for the i-th root of P_q
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(q, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(q, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // roots come out in descending order; store ascending on [0,1]
        points[q - 1 - i] = 0.5 * (x + 1.0);
        weights[q - 1 - i] = 0.5 * w;
    }
    (points, weights)
}

fn legendre_with_derivative(q: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if q == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=q {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = q as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
