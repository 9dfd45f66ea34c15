//! Ball-proximal point method (RBPPM) on Hadamard manifolds.
//!
//! Each outer step minimizes the objective over a geodesic ball around the
//! current iterate. The crate ships Euclidean space and the hyperboloid model
//! of hyperbolic space, quadratic and Fréchet-mean objectives, an inexact
//! projected-gradient ball solver plus an exact oracle for quadratics, two
//! baselines (proximal point and gradient descent), checks of the theoretical
//! guarantees against recorded traces, and a small benchmark harness.

pub mod ball;
pub mod bench;
pub mod diagnostics;
pub mod error;
pub mod linesearch;
pub mod manifold;
pub mod objective;
mod oracle;
pub mod solver;
pub mod trace;

pub use ball::{
    estimate_multiplier, exact_quadratic_ball_oracle, kkt_residual, solve_ball_pg, BroxResult,
    InnerSolverConfig,
};
pub use error::{Error, Result};
pub use linesearch::StepPolicy;
pub use manifold::{Manifold, Point, Tangent};
pub use objective::{
    initial_point, make_diagonal_quadratic, make_frechet_mean, make_quadratic, Objective, ProblemInstance, ProblemSpec,
    QuadraticSpec,
};
pub use solver::{
    next_radius, run_gradient, run_proximal, run_rbppm, Method, OracleMode, RadiusRule,
    RadiusStrategy, SolverConfig,
};
pub use trace::{TerminalStatus, Trace};
