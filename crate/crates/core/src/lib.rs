//! Numerical solver for the elliptic model problem `−Δu + bu = f` on
//! compact Riemannian manifolds given as overlapping coordinate-chart
//! atlases.
//!
//! No global mesh or triangulation of the manifold is ever built. Each chart
//! is a d-rectangle carrying its own structured grid and tensor-product Q1
//! element space; the metric enters assembly through the weak-form
//! coefficient pair `(g^{αβ}√G, √G)`. Charts exchange boundary data through
//! the atlas transition maps — which preserve neither nodes nor grids — by
//! point location and multilinear interpolation. A multiplicative-Schwarz
//! outer iteration alternates warm-started conjugate-gradient solves over
//! the charts until a full sweep accepts every warm start unchanged.
//!
//! Shipped atlases and model problems: the unit spheres S² and S⁴ under
//! stereographic charts, the complex projective plane ℂP² under its three
//! homogeneous charts with the Fubini–Study metric, and product manifolds
//! such as S²×S², each with an analytic solution for convergence studies.
//!
//! ```
//! use manifold_ddm::{ddm, norms, problems};
//!
//! let problem = problems::sphere_problem(2, 1.2, 1.0).unwrap();
//! let solution = ddm::solve(&problem, 8, ddm::SolveOptions::default()).unwrap();
//! let report = norms::solution_error_report(&problem, &solution, 2).unwrap();
//! assert!(report.linf < 0.05);
//! ```

pub mod atlas;
pub mod ddm;
pub mod fem;
pub mod norms;
pub mod problems;
pub mod solver;
pub mod sparse;
pub mod tensor_grid;

pub use atlas::{cp2_atlas, product_atlas, sphere_atlas, Atlas, Chart, MetricCoefficients};
pub use ddm::{solve, DdmState, SolveOptions, Solution, SweepRecord};
pub use fem::{assemble, apply_dirichlet, quadrature_rule, AssembledChart, QuadratureRule};
pub use norms::{convergence_rates, error_report, solution_error_report, ErrorReport};
pub use problems::{cp2_problem, s2xs2_problem, s4_problem, sphere_problem, Problem};
pub use solver::{cg, CgReport};
pub use sparse::CsrMatrix;
pub use tensor_grid::{ChartField, Rect, TensorGrid};
