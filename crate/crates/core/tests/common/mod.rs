//! Helpers shared by the integration suites: cached full-pipeline runs,
//! independent oracles (dense Cholesky, high-order quadrature), and the
//! weak-form pullback checker for transition maps.
#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::{Arc, LazyLock, Mutex};

use manifold_ddm::atlas::Atlas;
use manifold_ddm::ddm::{solve, SolveOptions};
use manifold_ddm::norms::{solution_error_report, ErrorReport};
use manifold_ddm::problems::{cp2_problem, s2xs2_problem, s4_problem, Problem};

pub struct StudyRow {
    pub h: f64,
    pub n0: usize,
    pub total_cg: usize,
    pub report: ErrorReport,
}

pub fn problem_for(manifold: &str, r: f64) -> Problem {
    match manifold {
        "s4" => s4_problem(r).unwrap(),
        "cp2" => cp2_problem(r).unwrap(),
        "s2xs2" => s2xs2_problem(r).unwrap(),
        other => panic!("unknown manifold {other}"),
    }
}

static RUNS: LazyLock<Mutex<HashMap<(String, u64, usize), Arc<StudyRow>>>> =
    LazyLock::new(|| Mutex::new(HashMap::new()));

/// Full pipeline at default settings (cg_tol 1e-8, q = 2, per-problem b),
/// cached so criteria sharing a configuration run it once.
pub fn run_case(manifold: &str, r: f64, n: usize) -> Arc<StudyRow> {
    let key = (manifold.to_string(), r.to_bits(), n);
    if let Some(row) = RUNS.lock().unwrap().get(&key) {
        return Arc::clone(row);
    }
    let problem = problem_for(manifold, r);
    let solution = solve(&problem, n, SolveOptions::default())
        .unwrap_or_else(|e| panic!("{manifold} r={r} N={n}: {e}"));
    let report = solution_error_report(&problem, &solution, 2).unwrap();
    let row = Arc::new(StudyRow {
        h: 2.0 * r / n as f64,
        n0: solution.n0,
        total_cg: solution.total_cg_iterations,
        report,
    });
    RUNS.lock().unwrap().insert(key, Arc::clone(&row));
    row
}

pub fn within_relative(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol * target.abs()
}

/// Dense symmetric positive definite solve by Cholesky factorization;
/// the direct-method oracle for CG.
pub fn cholesky_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut l = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                assert!(sum > 0.0, "matrix not positive definite");
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i][k] * y[k];
        }
        y[i] = sum / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in i + 1..n {
            sum -= l[k][i] * x[k];
        }
        x[i] = sum / l[i][i];
    }
    x
}

/// C² bump `Π_k (1 - t_k²)³`, `t_k = (x_k - c_k)/δ`, with its gradient.
fn bump_with_grad(x: &[f64], center: &[f64], delta: f64, grad: &mut [f64]) -> f64 {
    let d = x.len();
    let mut factors = vec![0.0; d];
    let mut derivs = vec![0.0; d];
    for k in 0..d {
        let t = (x[k] - center[k]) / delta;
        if t.abs() >= 1.0 {
            grad.fill(0.0);
            return 0.0;
        }
        let s = 1.0 - t * t;
        factors[k] = s * s * s;
        derivs[k] = -6.0 * t * s * s / delta;
    }
    let value: f64 = factors.iter().product();
    for k in 0..d {
        grad[k] = derivs[k];
        for (kk, f) in factors.iter().enumerate() {
            if kk != k {
                grad[k] *= f;
            }
        }
    }
    value
}

/// Test pair: u = bump, v = bump · (0.5 + t_0).
fn test_pair(x: &[f64], center: &[f64], delta: f64, gu: &mut [f64], gv: &mut [f64]) -> (f64, f64) {
    let u = bump_with_grad(x, center, delta, gu);
    let t0 = (x[0] - center[0]) / delta;
    let v = u * (0.5 + t0);
    for k in 0..x.len() {
        gv[k] = gu[k] * (0.5 + t0);
    }
    gv[0] += u / delta;
    (u, v)
}

/// Central-difference Jacobian of a transition map.
fn fd_jacobian(
    f: &dyn Fn(&[f64]) -> Option<Vec<f64>>,
    x: &[f64],
    step: f64,
) -> Option<Vec<f64>> {
    let d = x.len();
    let mut jac = vec![0.0; d * d];
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    for c in 0..d {
        xp[c] += step;
        xm[c] -= step;
        let fp = f(&xp)?;
        let fm = f(&xm)?;
        for r in 0..d {
            jac[r * d + c] = (fp[r] - fm[r]) / (2.0 * step);
        }
        xp[c] = x[c];
        xm[c] = x[c];
    }
    Some(jac)
}

fn determinant(mat: &[f64], d: usize) -> f64 {
    let mut m = mat.to_vec();
    let mut det = 1.0;
    for col in 0..d {
        let pivot = (col..d)
            .max_by(|&a, &b| m[a * d + col].abs().total_cmp(&m[b * d + col].abs()))
            .unwrap();
        if m[pivot * d + col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for k in 0..d {
                m.swap(col * d + k, pivot * d + k);
            }
            det = -det;
        }
        det *= m[col * d + col];
        for row in col + 1..d {
            let factor = m[row * d + col] / m[col * d + col];
            for k in col..d {
                m[row * d + k] -= factor * m[col * d + k];
            }
        }
    }
    det
}

/// Weak-form pullback check for the chart pair (i, j): the quadrature of
/// `∇uᵀK∇v + b·u·v·w` for smooth test functions supported in a small box of
/// the overlap must agree between chart i and chart j after composing with
/// the transition. The chart-j integral is taken back over the same box by
/// the change of variables `y = T(x)` with a finite-difference Jacobian, so
/// both integrands stay smooth. Returns the relative defect, or `None` if
/// the box does not sit cleanly inside the overlap.
pub fn metric_pullback_defect(
    atlas: &Atlas,
    i: usize,
    j: usize,
    center: &[f64],
    delta: f64,
    b: f64,
) -> Option<f64> {
    let d = atlas.dim();
    let rect_i = &atlas.chart(i).rect;
    for k in 0..d {
        if center[k] - delta < rect_i.lo()[k] || center[k] + delta > rect_i.hi()[k] {
            return None;
        }
    }
    // the whole box must map into chart j; sample a 3^d grid
    let mut idx = vec![0usize; d];
    for _ in 0..3usize.pow(d as u32) {
        let x: Vec<f64> = (0..d)
            .map(|k| center[k] + delta * (idx[k] as f64 - 1.0))
            .collect();
        if !atlas.membership(i, &x, j) {
            return None;
        }
        for k in 0..d {
            idx[k] += 1;
            if idx[k] < 3 {
                break;
            }
            idx[k] = 0;
        }
    }

    let quad = manifold_ddm::fem::quadrature_rule(1, 10).unwrap();
    let axis_pts = quad.axis_points();
    let axis_wts = quad.axis_weights();
    let q = axis_pts.len();
    let forward = |x: &[f64]| atlas.transition(i, j, x);
    let backward = |y: &[f64]| atlas.transition(j, i, y);
    let fd_step = 1e-5;

    let mut kbuf = vec![0.0; d * d];
    let mut gu = vec![0.0; d];
    let mut gv = vec![0.0; d];
    let mut gu_j = vec![0.0; d];
    let mut gv_j = vec![0.0; d];
    let vol: f64 = (2.0 * delta).powi(d as i32);
    let mut on_i = 0.0;
    let mut on_j = 0.0;
    let mut idx = vec![0usize; d];
    for _ in 0..q.pow(d as u32) {
        let mut weight = 1.0;
        let mut x = vec![0.0; d];
        for k in 0..d {
            x[k] = center[k] - delta + 2.0 * delta * axis_pts[idx[k]];
            weight *= axis_wts[idx[k]];
        }
        let (u, v) = test_pair(&x, center, delta, &mut gu, &mut gv);

        // chart i integrand
        let w_i = atlas.chart(i).metric_into(&x, &mut kbuf);
        let mut stiff = 0.0;
        for r in 0..d {
            for c in 0..d {
                stiff += gu[r] * kbuf[r * d + c] * gv[c];
            }
        }
        on_i += weight * (stiff + b * u * v * w_i);

        // chart j integrand at y = T(x), pulled back with |det DT|
        let y = forward(&x)?;
        let jac_t = fd_jacobian(&forward, &x, fd_step)?;
        let det = determinant(&jac_t, d).abs();
        // gradients of u∘T⁻¹ and v∘T⁻¹ at y by the chain rule through the
        // finite-difference Jacobian of the reverse transition
        let jac_back = fd_jacobian(&backward, &y, fd_step)?;
        let x_back = backward(&y)?;
        let (u_j, v_j) = test_pair(&x_back, center, delta, &mut gu_j, &mut gv_j);
        let mut gu_y = vec![0.0; d];
        let mut gv_y = vec![0.0; d];
        for r in 0..d {
            for c in 0..d {
                // ∇_y (u∘T⁻¹) = (D T⁻¹)ᵀ ∇_x u
                gu_y[r] += jac_back[c * d + r] * gu_j[c];
                gv_y[r] += jac_back[c * d + r] * gv_j[c];
            }
        }
        let w_j = atlas.chart(j).metric_into(&y, &mut kbuf);
        let mut stiff_j = 0.0;
        for r in 0..d {
            for c in 0..d {
                stiff_j += gu_y[r] * kbuf[r * d + c] * gv_y[c];
            }
        }
        on_j += weight * (stiff_j + b * u_j * v_j * w_j) * det;

        for k in 0..d {
            idx[k] += 1;
            if idx[k] < q {
                break;
            }
            idx[k] = 0;
        }
    }
    let scale = (on_i * vol).abs().max((on_j * vol).abs()).max(1e-12);
    Some(((on_i - on_j) * vol).abs() / scale)
}
