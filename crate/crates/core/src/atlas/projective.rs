//! Three-chart atlas for the complex projective plane ℂP².
//!
//! Chart j fixes the homogeneous coordinate w_j = 1 and uses the remaining
//! two complex coordinates, stored as four reals (Re, Im, Re, Im) in
//! ascending index order. All six transition maps are complex-rational and
//! undefined where the divisor coordinate vanishes.
//!
//! The metric is the Riemannian part of the Fubini–Study metric. Its
//! weak-form coefficients on every chart are
//! `K = (1+‖z‖²)^{-2} (I + p pᵀ + q qᵀ)` and `w = (1+‖z‖²)^{-3}`, where p
//! is the real coordinate 4-vector and q its per-complex-coordinate rotation
//! `(y, -x)`.

use std::sync::Arc;

use super::{Atlas, AtlasError, Chart, EmbedFn, MetricFn, TransitionFn};
use crate::tensor_grid::Rect;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Complex {
    re: f64,
    im: f64,
}

impl Complex {
    fn norm_sq(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    fn div(self, rhs: Complex) -> Complex {
        let s = rhs.norm_sq();
        Complex {
            re: (self.re * rhs.re + self.im * rhs.im) / s,
            im: (self.im * rhs.re - self.re * rhs.im) / s,
        }
    }
}

/// The two homogeneous indices a chart keeps as coordinates.
fn coordinate_indices(chart: usize) -> [usize; 2] {
    match chart {
        0 => [1, 2],
        1 => [0, 2],
        2 => [0, 1],
        _ => unreachable!("cp2 has charts 0..3"),
    }
}

/// Homogeneous representative of a chart point: w_chart = 1, the others are
/// the chart coordinates.
fn homogeneous(chart: usize, x: &[f64]) -> [Complex; 3] {
    let idx = coordinate_indices(chart);
    let mut w = [Complex { re: 0.0, im: 0.0 }; 3];
    w[chart] = Complex { re: 1.0, im: 0.0 };
    w[idx[0]] = Complex {
        re: x[0],
        im: x[1],
    };
    w[idx[1]] = Complex {
        re: x[2],
        im: x[3],
    };
    w
}

fn transition(from: usize, to: usize, x: &[f64]) -> Option<Vec<f64>> {
    let w = homogeneous(from, x);
    let pivot = w[to];
    if pivot.re == 0.0 && pivot.im == 0.0 {
        return None;
    }
    let idx = coordinate_indices(to);
    let a = w[idx[0]].div(pivot);
    let b = w[idx[1]].div(pivot);
    Some(vec![a.re, a.im, b.re, b.im])
}

fn fubini_study_metric() -> MetricFn {
    Arc::new(|x: &[f64], k: &mut [f64]| {
        let d = 4usize;
        let z2: f64 = x.iter().map(|v| v * v).sum();
        let t = 1.0 + z2;
        let scale = 1.0 / (t * t);
        let p = [x[0], x[1], x[2], x[3]];
        let q = [x[1], -x[0], x[3], -x[2]];
        for r in 0..d {
            for c in 0..d {
                let mut v = p[r] * p[c] + q[r] * q[c];
                if r == c {
                    v += 1.0;
                }
                k[r * d + c] = scale * v;
            }
        }
        1.0 / (t * t * t)
    })
}

fn embed(chart: usize) -> EmbedFn {
    Arc::new(move |x: &[f64]| {
        let w = homogeneous(chart, x);
        let norm = w.iter().map(|c| c.norm_sq()).sum::<f64>().sqrt();
        let mut out = Vec::with_capacity(6);
        for c in &w {
            out.push(c.re / norm);
            out.push(c.im / norm);
        }
        out
    })
}

/// Three-chart atlas for ℂP² on `[-r, r]^4`, `r > 1`.
pub fn cp2_atlas(r: f64) -> Result<Atlas, AtlasError> {
    if !(r > 1.0) {
        return Err(AtlasError::RadiusTooSmall { r });
    }
    let rect = Rect::cube(4, -r, r).expect("valid cube");
    let charts = (0..3)
        .map(|j| Chart::new(j, rect.clone(), fubini_study_metric(), Some(embed(j))))
        .collect();
    let mut transitions: Vec<Option<TransitionFn>> = Vec::with_capacity(9);
    for i in 0..3usize {
        for j in 0..3usize {
            if i == j {
                transitions.push(None);
            } else {
                transitions.push(Some(Arc::new(move |x: &[f64]| transition(i, j, x))));
            }
        }
    }
    Ok(Atlas::from_parts("cp2", charts, transitions))
}
