//! The concrete model problems: analytic solutions, right-hand sides, and
//! reaction constants for the sphere, ℂP², and S²×S² test cases, plus a
//! finite-difference consistency check tying coefficients, `u`, and `f`
//! together.

use std::sync::Arc;

use thiserror::Error;

use crate::atlas::{cp2_atlas, product_atlas, sphere_atlas, Atlas, AtlasError};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("problem has no analytic solution attached")]
    NoExactSolution,
    #[error("point must be at least 2·step = {min_margin} away from the chart boundary on every axis")]
    TooCloseToBoundary { min_margin: f64 },
    #[error(transparent)]
    Atlas(#[from] AtlasError),
}

type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A model problem `−Δu + bu = f` on a chart atlas: the right-hand side per
/// chart, the reaction constant, and (when known) the analytic solution per
/// chart. On chart overlaps both `f` and the solution agree through the
/// transition maps, being functions on the manifold itself.
pub struct Problem {
    atlas: Atlas,
    b: f64,
    f: Vec<ScalarFn>,
    exact: Option<Vec<ScalarFn>>,
}

impl Problem {
    pub fn new(atlas: Atlas, b: f64, f: Vec<ScalarFn>, exact: Option<Vec<ScalarFn>>) -> Self {
        assert_eq!(f.len(), atlas.num_charts());
        if let Some(e) = &exact {
            assert_eq!(e.len(), atlas.num_charts());
        }
        Problem { atlas, b, f, exact }
    }

    pub fn atlas(&self) -> &Atlas {
        &self.atlas
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn f_on_chart(&self, chart: usize, x: &[f64]) -> f64 {
        (self.f[chart])(x)
    }

    pub fn has_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn exact_on_chart(&self, chart: usize, x: &[f64]) -> Option<f64> {
        self.exact.as_ref().map(|e| (e[chart])(x))
    }
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("atlas", &self.atlas)
            .field("b", &self.b)
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

/// `u = y_{d+1}` on S^d in stereographic charts: `(1−‖x‖²)/(1+‖x‖²)` on the
/// north chart and its negative on the south chart, with `f = (d+b)u`.
pub fn sphere_problem(dim: usize, r: f64, b: f64) -> Result<Problem, ProblemError> {
    let atlas = sphere_atlas(dim, r)?;
    let height = |sign: f64| -> ScalarFn {
        Arc::new(move |x: &[f64]| {
            let s: f64 = x.iter().map(|v| v * v).sum();
            sign * (1.0 - s) / (1.0 + s)
        })
    };
    let factor = dim as f64 + b;
    let scaled = |sign: f64| -> ScalarFn {
        Arc::new(move |x: &[f64]| {
            let s: f64 = x.iter().map(|v| v * v).sum();
            factor * sign * (1.0 - s) / (1.0 + s)
        })
    };
    Ok(Problem::new(
        atlas,
        b,
        vec![scaled(1.0), scaled(-1.0)],
        Some(vec![height(1.0), height(-1.0)]),
    ))
}

/// The S⁴ test problem with the reported reaction constant `b = 1`.
pub fn s4_problem(r: f64) -> Result<Problem, ProblemError> {
    sphere_problem(4, r, 1.0)
}

pub fn s4_problem_with_b(r: f64, b: f64) -> Result<Problem, ProblemError> {
    sphere_problem(4, r, b)
}

/// `u([w]) = Σ a_j |w_j|²` on ℂP² (homogeneous coordinates normalized to
/// `Σ|w_j|² = 1`), `f = (12+b)u − 4Σa_j`. Defaults: `b = 4`, `a = (0,1,−1)`.
pub fn cp2_problem(r: f64) -> Result<Problem, ProblemError> {
    cp2_problem_with(r, 4.0, [0.0, 1.0, -1.0])
}

pub fn cp2_problem_with(r: f64, b: f64, a: [f64; 3]) -> Result<Problem, ProblemError> {
    let atlas = cp2_atlas(r)?;
    // chart j keeps the homogeneous coordinates other than j, ascending
    let others = |j: usize| -> [usize; 2] {
        match j {
            0 => [1, 2],
            1 => [0, 2],
            _ => [0, 1],
        }
    };
    let chart_u = |j: usize| -> ScalarFn {
        let [b1, b2] = others(j);
        Arc::new(move |x: &[f64]| {
            let m1 = x[0] * x[0] + x[1] * x[1];
            let m2 = x[2] * x[2] + x[3] * x[3];
            (a[j] + a[b1] * m1 + a[b2] * m2) / (1.0 + m1 + m2)
        })
    };
    let a_sum: f64 = a.iter().sum();
    let factor = 12.0 + b;
    let chart_f = |j: usize| -> ScalarFn {
        let u = chart_u(j);
        Arc::new(move |x: &[f64]| factor * u(x) - 4.0 * a_sum)
    };
    Ok(Problem::new(
        atlas,
        b,
        (0..3).map(chart_f).collect(),
        Some((0..3).map(chart_u).collect()),
    ))
}

/// `u = y₃ + y₃'` on S²×S² with the product stereographic atlas,
/// `f = (2+b)u`. Default `b = 2`.
pub fn s2xs2_problem(r: f64) -> Result<Problem, ProblemError> {
    s2xs2_problem_with_b(r, 2.0)
}

pub fn s2xs2_problem_with_b(r: f64, b: f64) -> Result<Problem, ProblemError> {
    let first = sphere_atlas(2, r)?;
    let second = sphere_atlas(2, r)?;
    let atlas = product_atlas(&first, &second);
    let height = |sign: f64, offset: usize| {
        move |x: &[f64]| {
            let s: f64 = x[offset..offset + 2].iter().map(|v| v * v).sum();
            sign * (1.0 - s) / (1.0 + s)
        }
    };
    let chart_u = |i: usize| -> ScalarFn {
        // chart i = (i/2, i%2); factor chart 0 projects to the north pole
        let s1 = if i / 2 == 0 { 1.0 } else { -1.0 };
        let s2 = if i % 2 == 0 { 1.0 } else { -1.0 };
        let (h1, h2) = (height(s1, 0), height(s2, 2));
        Arc::new(move |x: &[f64]| h1(x) + h2(x))
    };
    let factor = 2.0 + b;
    let chart_f = |i: usize| -> ScalarFn {
        let u = chart_u(i);
        Arc::new(move |x: &[f64]| factor * u(x))
    };
    Ok(Problem::new(
        atlas,
        b,
        (0..4).map(chart_f).collect(),
        Some((0..4).map(chart_u).collect()),
    ))
}

/// Strong-form consistency check: evaluates `|−Δu + bu − f|` at a chart
/// point, applying the coordinate Laplacian
/// `Δu = (1/w) Σ_α D_α(Σ_β K_{αβ} D_β u)` to the analytic solution with
/// nested central differences of size `step`. Small residuals certify that
/// the chart coefficients, `u`, and `f` are mutually consistent.
pub fn strong_residual_check(
    problem: &Problem,
    chart: usize,
    x: &[f64],
    step: f64,
) -> Result<f64, ProblemError> {
    if !problem.has_exact() {
        return Err(ProblemError::NoExactSolution);
    }
    let ch = problem.atlas().chart(chart);
    let d = ch.dim();
    for k in 0..d {
        if x[k] - 2.0 * step < ch.rect.lo()[k] || x[k] + 2.0 * step > ch.rect.hi()[k] {
            return Err(ProblemError::TooCloseToBoundary {
                min_margin: 2.0 * step,
            });
        }
    }
    let u = |y: &[f64]| problem.exact_on_chart(chart, y).unwrap();

    // flux F_α(y) = Σ_β K_{αβ}(y) ∂u/∂x_β(y) by central differences
    let mut kbuf = vec![0.0; d * d];
    let flux = |y: &[f64], alpha: usize, kbuf: &mut [f64]| -> f64 {
        ch.metric_into(y, kbuf);
        let mut acc = 0.0;
        let mut yp = y.to_vec();
        let mut ym = y.to_vec();
        for beta in 0..d {
            yp[beta] += step;
            ym[beta] -= step;
            let du = (u(&yp) - u(&ym)) / (2.0 * step);
            acc += kbuf[alpha * d + beta] * du;
            yp[beta] = y[beta];
            ym[beta] = y[beta];
        }
        acc
    };

    let mut divergence = 0.0;
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    for alpha in 0..d {
        xp[alpha] += step;
        xm[alpha] -= step;
        divergence += (flux(&xp, alpha, &mut kbuf) - flux(&xm, alpha, &mut kbuf)) / (2.0 * step);
        xp[alpha] = x[alpha];
        xm[alpha] = x[alpha];
    }
    let w = ch.metric_into(x, &mut kbuf);
    let laplacian = divergence / w;
    Ok((-laplacian + problem.b() * u(x) - problem.f_on_chart(chart, x)).abs())
}
