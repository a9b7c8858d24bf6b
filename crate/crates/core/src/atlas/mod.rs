//! Charts, transition maps, and metric coefficients for manifolds presented
//! as overlapping coordinate-chart atlases.
//!
//! A chart is a d-rectangle together with the weak-form coefficient pair
//! `(K, w) = (g^{αβ}√G, √G)` of the metric in those coordinates; the raw
//! tensor `g_{αβ}` is never materialized. Transition maps are partial:
//! where a formula divides by zero the map is undefined and membership
//! queries simply answer `false`.

mod product;
mod projective;
mod sphere;

pub use product::product_atlas;
pub use projective::cp2_atlas;
pub use sphere::{sphere_atlas, stereographic_embed};

use std::sync::Arc;

use thiserror::Error;

use crate::tensor_grid::{Rect, LOCATE_REL_TOL};

#[derive(Debug, Error)]
pub enum AtlasError {
    #[error("chart radius r = {r} must exceed 1 or the chart interiors cannot cover the manifold")]
    RadiusTooSmall { r: f64 },
    #[error("sphere charts are implemented for dimension >= 2, got {dim}")]
    UnsupportedDimension { dim: usize },
}

/// Weak-form metric data at a point: `K = g^{αβ}√G` (symmetric positive
/// definite) and the volume weight `w = √G`.
#[derive(Debug, Clone)]
pub struct MetricCoefficients {
    /// Row-major d×d matrix.
    pub k: Vec<f64>,
    pub w: f64,
}

/// Evaluates `(K, w)` at a point: fills the row-major d×d output slice and
/// returns `w`.
pub type MetricFn = Arc<dyn Fn(&[f64], &mut [f64]) -> f64 + Send + Sync>;

/// Optional map into ambient coordinates (unit vectors for spheres,
/// normalized homogeneous coordinates for projective space).
pub type EmbedFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Partial coordinate change `φ_j⁻¹ ∘ φ_i`; `None` where undefined.
pub type TransitionFn = Arc<dyn Fn(&[f64]) -> Option<Vec<f64>> + Send + Sync>;

/// One coordinate chart: its parameter rectangle and metric coefficients.
#[derive(Clone)]
pub struct Chart {
    pub id: usize,
    pub rect: Rect,
    metric: MetricFn,
    embed: Option<EmbedFn>,
}

impl Chart {
    pub fn new(id: usize, rect: Rect, metric: MetricFn, embed: Option<EmbedFn>) -> Self {
        Chart {
            id,
            rect,
            metric,
            embed,
        }
    }

    /// Chart of a flat parameter domain: `K = I`, `w = 1`.
    pub fn flat(rect: Rect) -> Self {
        let d = rect.dim();
        let metric: MetricFn = Arc::new(move |_x, k: &mut [f64]| {
            k.fill(0.0);
            for i in 0..d {
                k[i * d + i] = 1.0;
            }
            1.0
        });
        Chart::new(0, rect, metric, None)
    }

    pub fn dim(&self) -> usize {
        self.rect.dim()
    }

    /// Fill `k_out` (row-major d×d) with `K(x)` and return `w(x)`.
    pub fn metric_into(&self, x: &[f64], k_out: &mut [f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        debug_assert_eq!(k_out.len(), self.dim() * self.dim());
        (self.metric)(x, k_out)
    }

    pub fn metric(&self, x: &[f64]) -> MetricCoefficients {
        let d = self.dim();
        let mut k = vec![0.0; d * d];
        let w = self.metric_into(x, &mut k);
        MetricCoefficients { k, w }
    }

    pub fn has_embed(&self) -> bool {
        self.embed.is_some()
    }

    pub fn embed(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.embed.as_ref().map(|f| f(x))
    }

    pub(crate) fn metric_fn(&self) -> MetricFn {
        Arc::clone(&self.metric)
    }

    pub(crate) fn embed_fn(&self) -> Option<EmbedFn> {
        self.embed.as_ref().map(Arc::clone)
    }
}

impl std::fmt::Debug for Chart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Chart")
            .field("id", &self.id)
            .field("rect", &self.rect)
            .field("embed", &self.embed.is_some())
            .finish()
    }
}

/// Ordered collection of charts covering a manifold, with pairwise
/// transition maps.
pub struct Atlas {
    charts: Vec<Chart>,
    /// Row-major m×m table; the diagonal stays `None` (identity).
    transitions: Vec<Option<TransitionFn>>,
    name: String,
}

impl Atlas {
    pub(crate) fn from_parts(
        name: impl Into<String>,
        charts: Vec<Chart>,
        transitions: Vec<Option<TransitionFn>>,
    ) -> Self {
        let m = charts.len();
        assert_eq!(transitions.len(), m * m);
        Atlas {
            charts,
            transitions,
            name: name.into(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_charts(&self) -> usize {
        self.charts.len()
    }

    pub fn dim(&self) -> usize {
        self.charts[0].dim()
    }

    pub fn charts(&self) -> &[Chart] {
        &self.charts
    }

    pub fn chart(&self, i: usize) -> &Chart {
        &self.charts[i]
    }

    pub(crate) fn transition_fn(&self, i: usize, j: usize) -> Option<TransitionFn> {
        self.transitions[i * self.num_charts() + j].as_ref().map(Arc::clone)
    }

    /// Apply `φ_j⁻¹ ∘ φ_i` to a point of chart i. Returns `None` where the
    /// map is undefined. `i == j` is the identity.
    pub fn transition(&self, i: usize, j: usize, x: &[f64]) -> Option<Vec<f64>> {
        if i == j {
            return Some(x.to_vec());
        }
        let f = self.transitions[i * self.num_charts() + j]
            .as_ref()
            .expect("off-diagonal transition must be present");
        f(x)
    }

    /// Whether `φ_i(x)` lies in subdomain `M_j`: the transition image must be
    /// defined and inside the closed rectangle `D_j` (location tolerance).
    pub fn membership(&self, i: usize, x: &[f64], j: usize) -> bool {
        match self.transition(i, j, x) {
            Some(y) => self.charts[j].rect.contains_with_tol(&y, LOCATE_REL_TOL),
            None => false,
        }
    }
}

impl std::fmt::Debug for Atlas {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Atlas")
            .field("name", &self.name)
            .field("charts", &self.charts.len())
            .field("dim", &self.dim())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_chart_identity_metric() {
        let chart = Chart::flat(Rect::cube(3, -1.0, 1.0).unwrap());
        let m = chart.metric(&[0.2, -0.4, 0.9]);
        assert_eq!(m.w, 1.0);
        for r in 0..3 {
            for c in 0..3 {
                assert_eq!(m.k[r * 3 + c], if r == c { 1.0 } else { 0.0 });
            }
        }
    }
}
