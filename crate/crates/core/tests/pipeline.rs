//! Cross-module integration tests at desk scale: atlas embedding and cover
//! checks, the quadrature-order guard for the q = 2 default, and a cheap
//! two-chart sphere study exercising the full solve-and-measure path.

mod common;

use common::problem_for;
use manifold_ddm::atlas::{cp2_atlas, product_atlas, sphere_atlas};
use manifold_ddm::ddm::{solve, SolveOptions};
use manifold_ddm::norms::{convergence_rates, solution_error_report};
use manifold_ddm::problems::sphere_problem;
use manifold_ddm::tensor_grid::TensorGrid;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

#[test]
fn sphere_embedding_agrees_on_overlaps() {
    let mut rng = StdRng::seed_from_u64(31);
    for dim in [2usize, 4] {
        let atlas = sphere_atlas(dim, 1.2).unwrap();
        let mut checked = 0;
        while checked < 1000 {
            let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.2..1.2)).collect();
            if !atlas.membership(0, &x, 1) {
                continue;
            }
            let y = atlas.transition(0, 1, &x).unwrap();
            let e0 = atlas.chart(0).embed(&x).unwrap();
            let e1 = atlas.chart(1).embed(&y).unwrap();
            let unit: f64 = e0.iter().map(|v| v * v).sum::<f64>();
            assert!((unit - 1.0).abs() < 1e-12);
            for (a, b) in e0.iter().zip(&e1) {
                assert!((a - b).abs() < 1e-10);
            }
            checked += 1;
        }
    }
}

#[test]
fn cp2_projector_agrees_on_overlaps() {
    // homogeneous-coordinate embeddings differ by a phase; compare the
    // phase-free rank-one projector w w* instead
    let mut rng = StdRng::seed_from_u64(32);
    let atlas = cp2_atlas(1.2).unwrap();
    let projector = |w: &[f64]| -> Vec<f64> {
        let mut p = Vec::with_capacity(18);
        for a in 0..3 {
            for b in 0..3 {
                let (ra, ia) = (w[2 * a], w[2 * a + 1]);
                let (rb, ib) = (w[2 * b], w[2 * b + 1]);
                p.push(ra * rb + ia * ib);
                p.push(ia * rb - ra * ib);
            }
        }
        p
    };
    for i in 0..3 {
        for j in 0..3 {
            if i == j {
                continue;
            }
            let mut checked = 0;
            while checked < 300 {
                let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.2..1.2)).collect();
                if !atlas.membership(i, &x, j) {
                    continue;
                }
                let y = atlas.transition(i, j, &x).unwrap();
                let pi = projector(&atlas.chart(i).embed(&x).unwrap());
                let pj = projector(&atlas.chart(j).embed(&y).unwrap());
                for (a, b) in pi.iter().zip(&pj) {
                    assert!((a - b).abs() < 1e-10);
                }
                checked += 1;
            }
        }
    }
}

#[test]
fn cover_property_for_shipped_atlases() {
    // every boundary node of every chart grid must land in some other chart
    for r in [1.2, 2.0] {
        let atlases = vec![
            sphere_atlas(4, r).unwrap(),
            cp2_atlas(r).unwrap(),
            product_atlas(&sphere_atlas(2, r).unwrap(), &sphere_atlas(2, r).unwrap()),
        ];
        for atlas in &atlases {
            for n in [4usize, 10] {
                for i in 0..atlas.num_charts() {
                    let grid = TensorGrid::uniform(atlas.chart(i).rect.clone(), n).unwrap();
                    let mut coords = vec![0.0; atlas.dim()];
                    for node in grid.boundary_nodes() {
                        grid.node_coords_into(node, &mut coords);
                        let covered =
                            (0..atlas.num_charts()).any(|j| j != i && atlas.membership(i, &coords, j));
                        assert!(
                            covered,
                            "{} r={r} N={n}: boundary node {node} of chart {i} uncovered",
                            atlas.name()
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn quadrature_order_guard_for_default() {
    // q = 2 vs q = 4 on the coarse S4 problem: integral error norms of the
    // converged solve move by well under 1%; the single-node L-inf is the
    // quadrature-sensitive spot and gets a looser band
    let problem = problem_for("s4", 1.2);
    let mut reports = Vec::new();
    for q in [2usize, 4] {
        let opts = SolveOptions {
            quad_points: q,
            ..SolveOptions::default()
        };
        let solution = solve(&problem, 10, opts).unwrap();
        reports.push(solution_error_report(&problem, &solution, q).unwrap());
    }
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    assert!(rel(reports[0].l2, reports[1].l2) < 0.01);
    assert!(rel(reports[0].h1_semi, reports[1].h1_semi) < 0.01);
    assert!(rel(reports[0].energy, reports[1].energy) < 0.01);
    assert!(rel(reports[0].linf, reports[1].linf) < 0.05);
}

#[test]
fn s2_pipeline_converges_at_second_order() {
    let problem = sphere_problem(2, 1.2, 1.0).unwrap();
    let mut rows = Vec::new();
    for n in [8usize, 16, 32] {
        let solution = solve(&problem, n, SolveOptions::default()).unwrap();
        let report = solution_error_report(&problem, &solution, 2).unwrap();
        rows.push((2.0 * 1.2 / n as f64, report));
    }
    let rates = convergence_rates(&rows).unwrap();
    assert!(rates.linf > 1.7, "L-inf order {}", rates.linf);
    assert!(rates.l2 > 1.7, "L2 order {}", rates.l2);
    assert!(rates.energy > 0.9, "energy order {}", rates.energy);
    assert!(rates.h1_semi > 0.9, "H1 order {}", rates.h1_semi);
}

#[test]
fn jacobi_option_reaches_same_fixed_point() {
    let problem = sphere_problem(2, 1.2, 1.0).unwrap();
    let plain = solve(&problem, 10, SolveOptions::default()).unwrap();
    let jacobi = solve(
        &problem,
        10,
        SolveOptions {
            jacobi: true,
            ..SolveOptions::default()
        },
    )
    .unwrap();
    for (a, b) in plain.state.fields.iter().zip(&jacobi.state.fields) {
        let scale = a.dofs().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(a.max_diff(b) <= 1e-6 * scale.max(1.0));
    }
}
