//! Two-chart stereographic atlas for the unit sphere S^d.
//!
//! Chart 0 projects from the south pole, chart 1 from the north pole; both
//! parameter domains are `[-r, r]^d` with r > 1 so the chart interiors
//! cover the sphere. The transition map in either direction is the
//! inversion `x ↦ x/‖x‖²`, undefined at the origin.
//!
//! In stereographic coordinates the round metric is conformal,
//! `g = 4(1+‖x‖²)^{-2} I`, which gives the weak-form coefficients
//! `w = (2/(1+‖x‖²))^d` and `K = (2/(1+‖x‖²))^{d-2} · I`.

use std::sync::Arc;

use super::{Atlas, AtlasError, Chart, EmbedFn, MetricFn, TransitionFn};
use crate::tensor_grid::Rect;

/// Stereographic image of a chart point on the unit sphere in ℝ^{d+1}.
/// `pole = +1` for the chart whose origin maps to the north pole,
/// `pole = -1` for the opposite one.
pub fn stereographic_embed(x: &[f64], pole: f64) -> Vec<f64> {
    let s: f64 = x.iter().map(|v| v * v).sum();
    let scale = 2.0 / (1.0 + s);
    let mut y: Vec<f64> = x.iter().map(|v| v * scale).collect();
    y.push(pole * (1.0 - s) / (1.0 + s));
    y
}

fn inversion(x: &[f64]) -> Option<Vec<f64>> {
    let s: f64 = x.iter().map(|v| v * v).sum();
    if s == 0.0 {
        return None;
    }
    Some(x.iter().map(|v| v / s).collect())
}

fn sphere_metric(dim: usize) -> MetricFn {
    Arc::new(move |x: &[f64], k: &mut [f64]| {
        let s: f64 = x.iter().map(|v| v * v).sum();
        let c = 2.0 / (1.0 + s);
        let diag = c.powi(dim as i32 - 2);
        k.fill(0.0);
        for i in 0..dim {
            k[i * dim + i] = diag;
        }
        c.powi(dim as i32)
    })
}

/// Two-chart atlas for S^d on `[-r, r]^d`, `r > 1`.
pub fn sphere_atlas(dim: usize, r: f64) -> Result<Atlas, AtlasError> {
    if dim < 2 {
        return Err(AtlasError::UnsupportedDimension { dim });
    }
    if !(r > 1.0) {
        return Err(AtlasError::RadiusTooSmall { r });
    }
    let rect = Rect::cube(dim, -r, r).expect("valid cube");
    let charts = vec![
        Chart::new(
            0,
            rect.clone(),
            sphere_metric(dim),
            Some(Arc::new(|x: &[f64]| stereographic_embed(x, 1.0)) as EmbedFn),
        ),
        Chart::new(
            1,
            rect,
            sphere_metric(dim),
            Some(Arc::new(|x: &[f64]| stereographic_embed(x, -1.0)) as EmbedFn),
        ),
    ];
    let swap: TransitionFn = Arc::new(|x: &[f64]| inversion(x));
    let transitions = vec![None, Some(Arc::clone(&swap)), Some(swap), None];
    Ok(Atlas::from_parts(format!("s{}", dim), charts, transitions))
}
