//! The ball subproblem `min { f(q) : d(q, center) <= t }`.
//!
//! Two solvers are provided: a Riemannian projected-gradient method with
//! Armijo backtracking (any geometry, any objective) and an exact oracle for
//! Euclidean quadratics based on the secular equation of the trust-region
//! subproblem. The KKT multiplier is recovered from the gradient at the
//! returned point, so both paths report it the same way.

use nalgebra::DVector;

use crate::error::{invalid, Result};
use crate::linesearch::{backtrack, StepMemory, StepPolicy};
use crate::manifold::{Manifold, Point, Tangent};
use crate::objective::{ProblemInstance, QuadraticSpec};
use crate::oracle::CountingOracle;

/// Distance to the sphere under which a solution counts as a boundary point.
pub fn boundary_tol(t: f64) -> f64 {
    (1e-6 * t).max(1e-8)
}

#[derive(Clone, Debug)]
pub struct InnerSolverConfig {
    pub armijo_c: f64,
    pub backtrack_factor: f64,
    pub max_inner: usize,
    /// Stop once the projected-gradient residual falls to this value.
    pub tol: f64,
    /// Starting point; projected into the ball before use. Defaults to the center.
    pub warm_start: Option<Point>,
    pub initial_step: StepPolicy,
    /// Keep every accepted inner iterate in [`BroxResult::path`].
    pub record_path: bool,
}

impl Default for InnerSolverConfig {
    fn default() -> Self {
        InnerSolverConfig {
            armijo_c: 1e-4,
            backtrack_factor: 0.5,
            max_inner: 100_000,
            tol: 1e-8,
            warm_start: None,
            initial_step: StepPolicy::Unit,
            record_path: false,
        }
    }
}

impl InnerSolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return Err(invalid("Armijo parameter must lie in (0, 1)"));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(invalid("backtracking factor must lie in (0, 1)"));
        }
        if !(self.tol > 0.0) {
            return Err(invalid("inner tolerance must be positive"));
        }
        Ok(())
    }
}

/// Solution of one ball subproblem.
#[derive(Clone, Debug)]
pub struct BroxResult {
    pub point: Point,
    pub f_value: f64,
    pub gradient: Tangent,
    pub multiplier_theta: f64,
    pub kkt_residual: f64,
    /// The solution sits on the sphere (within [`boundary_tol`]).
    pub active: bool,
    pub inner_iterations: usize,
    /// Final projected-gradient residual (zero for the exact oracle).
    pub pg_residual: f64,
    /// False when the inner solver stopped on its iteration cap or stalled.
    pub converged: bool,
    pub f_evals: u64,
    /// Accepted inner iterates with their values, when requested.
    pub path: Vec<(Point, f64)>,
}

/// Projected-gradient residual `|log_x P(exp_x(-grad f(x)))|`.
pub fn pg_residual(m: &Manifold, center: &Point, t: f64, x: &Point, g: &Tangent) -> f64 {
    let step = m.exp_unchecked(x, &(-g.vec()));
    let proj = m.project_to_ball_unchecked(center, t, &step);
    m.norm(&m.log_unchecked(x, &proj))
}

/// Solves the ball subproblem inexactly by projected gradient with Armijo
/// backtracking.
pub fn solve_ball_pg(
    problem: &ProblemInstance,
    center: &Point,
    t: f64,
    cfg: &InnerSolverConfig,
) -> Result<BroxResult> {
    cfg.validate()?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(invalid(format!("ball radius must be positive, got {t}")));
    }
    let m = problem.manifold();
    m.validate_point(center)?;
    let start = match &cfg.warm_start {
        Some(w) => {
            m.validate_point(w)?;
            m.project_to_ball_unchecked(center, t, w)
        }
        None => center.clone(),
    };
    let oracle = CountingOracle::new(problem);
    let (f0, g0) = oracle.eval(&start);
    let mut memory = StepMemory::new();
    let mut out = pg_from(&oracle, center, t, cfg, start, f0, g0, &mut memory);
    out.f_evals = oracle.evals();
    Ok(out)
}

/// Projected-gradient loop from a point whose value and gradient are known.
/// `f_evals` in the result counts only the evaluations made here.
#[allow(clippy::too_many_arguments)]
pub(crate) fn pg_from(
    oracle: &CountingOracle<'_>,
    center: &Point,
    t: f64,
    cfg: &InnerSolverConfig,
    start: Point,
    f_start: f64,
    g_start: Tangent,
    memory: &mut StepMemory,
) -> BroxResult {
    let problem = oracle.problem();
    let m = problem.manifold();
    let evals_before = oracle.evals();
    let (mut x, mut fx, mut g) = (start, f_start, g_start);
    let mut path = Vec::new();
    if cfg.record_path {
        path.push((x.clone(), fx));
    }
    let mut iters = 0;
    let mut residual = pg_residual(m, center, t, &x, &g);
    let mut converged = residual <= cfg.tol;
    while !converged && iters < cfg.max_inner {
        let alpha0 = memory.initial(cfg.initial_step, problem.lipschitz());
        let accepted = backtrack(
            m,
            &x,
            fx,
            &g,
            alpha0,
            cfg.armijo_c,
            cfg.backtrack_factor,
            |alpha| {
                let y = m.exp_unchecked(&x, &(g.vec() * -alpha));
                m.project_to_ball_unchecked(center, t, &y)
            },
            |y| oracle.eval(y),
        );
        let Some(acc) = accepted else { break };
        memory.accept(acc.step);
        x = acc.point;
        fx = acc.f;
        g = acc.grad;
        iters += 1;
        if cfg.record_path {
            path.push((x.clone(), fx));
        }
        residual = pg_residual(m, center, t, &x, &g);
        converged = residual <= cfg.tol;
    }
    let theta = multiplier_from_gradient(m, center, &x, t, &g);
    let kkt = kkt_from_gradient(m, center, &x, t, theta, &g);
    let active = m.distance_unchecked(center, &x) >= t - boundary_tol(t);
    BroxResult {
        point: x,
        f_value: fx,
        gradient: g,
        multiplier_theta: theta,
        kkt_residual: kkt,
        active,
        inner_iterations: iters,
        pg_residual: residual,
        converged,
        f_evals: oracle.evals() - evals_before,
        path,
    }
}

/// Exact solution of `min 0.5 x^T A x` subject to `|x - center| <= t`.
///
/// When the ball contains the origin the answer is the origin with zero
/// multiplier. Otherwise the solution is `x(θ) = θ (A + θI)^{-1} center` on
/// the sphere, where `θ > 0` solves the secular equation
/// `|(A + θI)^{-1} A center| = t`.
pub fn exact_quadratic_ball_oracle(spec: &QuadraticSpec, center: &Point, t: f64) -> Result<BroxResult> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(invalid(format!("ball radius must be positive, got {t}")));
    }
    let n = spec.dim();
    if center.len() != n || center.0.iter().any(|v| !v.is_finite()) {
        return Err(invalid("center does not belong to the quadratic's space"));
    }
    let eig = spec.eigenvalues();
    if eig.iter().any(|&d| !(d > 0.0)) {
        return Err(invalid("matrix is not positive definite"));
    }
    let m = Manifold::Euclidean(n);
    let u = spec.basis();
    let c_hat = u.transpose() * &center.0;
    let c_norm = center.0.norm();

    let (x, theta, iters) = if c_norm <= t {
        (DVector::zeros(n), 0.0, 0)
    } else {
        let (theta, iters) = solve_secular(eig, &c_hat, t);
        let x_hat = DVector::from_fn(n, |i, _| theta * c_hat[i] / (eig[i] + theta));
        (u * x_hat, theta, iters)
    };
    let point = Point(x);
    let (f, g) = (spec_value(spec, &point), spec_gradient(spec, &point));
    let kkt = kkt_from_gradient(&m, center, &point, t, theta, &g);
    Ok(BroxResult {
        active: theta > 0.0,
        point,
        f_value: f,
        gradient: g,
        multiplier_theta: theta,
        kkt_residual: kkt,
        inner_iterations: iters,
        pg_residual: 0.0,
        converged: true,
        f_evals: 1,
        path: Vec::new(),
    })
}

fn spec_value(spec: &QuadraticSpec, p: &Point) -> f64 {
    0.5 * p.0.dot(&(spec.matrix() * &p.0))
}

fn spec_gradient(spec: &QuadraticSpec, p: &Point) -> Tangent {
    Tangent::raw(p.clone(), spec.matrix() * &p.0)
}

/// Root of `|(D + θI)^{-1} D c| = t` in the eigenbasis, assuming `|c| > t`.
/// Bisection on a guaranteed bracket, then Newton on the reciprocal form
/// `1/|r(θ)| - 1/t`, which is close to linear in θ.
fn solve_secular(eig: &DVector<f64>, c: &DVector<f64>, t: f64) -> (f64, usize) {
    let norm_r = |theta: f64| -> f64 {
        eig.iter()
            .zip(c.iter())
            .map(|(d, ci)| {
                let r = d * ci / (d + theta);
                r * r
            })
            .sum::<f64>()
            .sqrt()
    };
    let a_norm = eig.max();
    let c_norm = c.norm();
    let mut lo = 0.0_f64;
    let mut hi = a_norm * c_norm / t + a_norm;
    let mut iters = 0;
    while hi - lo > 1e-12 * (1.0 + hi) && iters < 400 {
        let mid = 0.5 * (lo + hi);
        if norm_r(mid) > t {
            lo = mid;
        } else {
            hi = mid;
        }
        iters += 1;
    }
    let mut theta = 0.5 * (lo + hi);
    for _ in 0..4 {
        let mut s2 = 0.0;
        let mut ds2 = 0.0;
        for (d, ci) in eig.iter().zip(c.iter()) {
            let r = d * ci / (d + theta);
            s2 += r * r;
            ds2 += -2.0 * r * r / (d + theta);
        }
        let s = s2.sqrt();
        if s == 0.0 {
            break;
        }
        // psi = 1/s - 1/t, dpsi/dθ = -ds2 / (2 s^3)
        let psi = 1.0 / s - 1.0 / t;
        let dpsi = -ds2 / (2.0 * s * s2);
        if dpsi <= 0.0 {
            break;
        }
        let next = theta - psi / dpsi;
        if !(next > lo && next < hi) {
            break;
        }
        theta = next;
        iters += 1;
    }
    (theta, iters)
}

/// KKT multiplier of the ball constraint at a feasible `x`.
///
/// Zero for interior points; on the sphere, the least-squares coefficient of
/// the gradient along `log_x(center)`, clamped at zero.
pub fn estimate_multiplier(problem: &ProblemInstance, center: &Point, x: &Point, t: f64) -> Result<f64> {
    let m = problem.manifold();
    m.validate_point(center)?;
    m.validate_point(x)?;
    let g = problem.gradient(x);
    Ok(multiplier_from_gradient(m, center, x, t, &g))
}

pub(crate) fn multiplier_from_gradient(m: &Manifold, center: &Point, x: &Point, t: f64, g: &Tangent) -> f64 {
    let d = m.distance_unchecked(center, x);
    if d < t - boundary_tol(t) || d == 0.0 {
        return 0.0;
    }
    let normal = m.log_unchecked(x, center);
    (m.inner_unchecked(g.vec(), normal.vec()) / (d * d)).max(0.0)
}

/// Residual of the ball KKT system at `(x, θ)`:
/// `|grad f(x) - θ log_x(center)| + max(0, d - t) + θ |d - t|`.
pub fn kkt_residual(problem: &ProblemInstance, center: &Point, x: &Point, t: f64, theta: f64) -> Result<f64> {
    if !(theta >= 0.0) {
        return Err(invalid("multiplier must be nonnegative"));
    }
    let m = problem.manifold();
    m.validate_point(center)?;
    m.validate_point(x)?;
    let g = problem.gradient(x);
    Ok(kkt_from_gradient(m, center, x, t, theta, &g))
}

pub(crate) fn kkt_from_gradient(m: &Manifold, center: &Point, x: &Point, t: f64, theta: f64, g: &Tangent) -> f64 {
    let d = m.distance_unchecked(center, x);
    let normal = m.log_unchecked(x, center);
    let station = g.vec() - normal.vec() * theta;
    let stat_norm = m.inner_unchecked(&station, &station).max(0.0).sqrt();
    stat_norm + (d - t).max(0.0) + theta * (d - t).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{make_quadratic, quadratic_from_spec};

    fn half_square() -> ProblemInstance {
        make_quadratic(1, 1.0, 1.0, 0).unwrap()
    }

    #[test]
    fn pg_clamps_toward_minimizer() {
        let p = half_square();
        let r = solve_ball_pg(&p, &Point::new(vec![5.0]), 2.0, &InnerSolverConfig::default()).unwrap();
        assert!((r.point.0[0] - 3.0).abs() < 1e-8);
        assert!(r.active && r.converged);
        assert!((r.multiplier_theta - 1.5).abs() < 1e-7);
    }

    #[test]
    fn pg_interior_minimizer() {
        let p = half_square();
        let r = solve_ball_pg(&p, &Point::new(vec![1.0]), 2.0, &InnerSolverConfig::default()).unwrap();
        assert!(r.point.0[0].abs() < 1e-8);
        assert!(!r.active);
        assert_eq!(r.multiplier_theta, 0.0);
    }

    #[test]
    fn pg_projects_warm_start() {
        let p = half_square();
        let cfg = InnerSolverConfig {
            warm_start: Some(Point::new(vec![100.0])),
            record_path: true,
            ..Default::default()
        };
        let r = solve_ball_pg(&p, &Point::new(vec![5.0]), 2.0, &cfg).unwrap();
        assert_eq!(r.path[0].0, Point::new(vec![7.0]));
        assert!((r.point.0[0] - 3.0).abs() < 1e-8);
    }

    #[test]
    fn pg_reports_iteration_cap_without_failing() {
        let p = make_quadratic(5, 1.0, 1000.0, 2).unwrap();
        let cfg = InnerSolverConfig {
            max_inner: 2,
            tol: 1e-12,
            ..Default::default()
        };
        let r = solve_ball_pg(&p, &Point::new(vec![1.0; 5]), 0.5, &cfg).unwrap();
        assert!(!r.converged);
        assert_eq!(r.inner_iterations, 2);
        assert!(r.pg_residual > 1e-12);
    }

    #[test]
    fn pg_rejects_bad_config() {
        let p = half_square();
        let c = Point::new(vec![1.0]);
        let bad = InnerSolverConfig {
            armijo_c: 1.5,
            ..Default::default()
        };
        assert!(solve_ball_pg(&p, &c, 1.0, &bad).is_err());
        assert!(solve_ball_pg(&p, &c, 0.0, &InnerSolverConfig::default()).is_err());
    }

    #[test]
    fn exact_oracle_one_dimensional() {
        let spec = QuadraticSpec::diagonal(&[1.0]).unwrap();
        let r = exact_quadratic_ball_oracle(&spec, &Point::new(vec![5.0]), 2.0).unwrap();
        assert!((r.point.0[0] - 3.0).abs() < 1e-12);
        assert!((r.multiplier_theta - 1.5).abs() < 1e-10);
        assert!(r.kkt_residual <= 1e-9);

        let r = exact_quadratic_ball_oracle(&spec, &Point::new(vec![1.5]), 2.0).unwrap();
        assert_eq!(r.point.0[0], 0.0);
        assert_eq!(r.multiplier_theta, 0.0);
        assert!(!r.active);
    }

    #[test]
    fn exact_oracle_rejects_wrong_dimension() {
        let spec = QuadraticSpec::diagonal(&[1.0, 2.0]).unwrap();
        assert!(exact_quadratic_ball_oracle(&spec, &Point::new(vec![5.0]), 2.0).is_err());
        assert!(exact_quadratic_ball_oracle(&spec, &Point::new(vec![5.0, 1.0]), -2.0).is_err());
    }

    #[test]
    fn pg_matches_exact_on_ill_conditioned_disk() {
        let spec = QuadraticSpec::diagonal(&[1.0, 100.0]).unwrap();
        let c = Point::new(vec![1.0, 1.0]);
        let exact = exact_quadratic_ball_oracle(&spec, &c, 0.5).unwrap();
        let p = quadratic_from_spec(spec, "diag").unwrap();
        let r = solve_ball_pg(&p, &c, 0.5, &InnerSolverConfig::default()).unwrap();
        assert!((&r.point.0 - &exact.point.0).norm() < 1e-5);
    }

    #[test]
    fn multiplier_examples() {
        let p = half_square();
        let th = estimate_multiplier(&p, &Point::new(vec![5.0]), &Point::new(vec![3.0]), 2.0).unwrap();
        assert!((th - 1.5).abs() < 1e-15);
        let th = estimate_multiplier(&p, &Point::new(vec![3.0]), &Point::new(vec![1.0]), 2.0).unwrap();
        assert!((th - 0.5).abs() < 1e-15);
        let th = estimate_multiplier(&p, &Point::new(vec![1.0]), &Point::new(vec![0.0]), 2.0).unwrap();
        assert_eq!(th, 0.0);
    }

    #[test]
    fn kkt_residual_examples() {
        let p = half_square();
        let c = Point::new(vec![5.0]);
        let x = Point::new(vec![3.0]);
        assert!(kkt_residual(&p, &c, &x, 2.0, 1.5).unwrap() < 1e-12);
        // wrong multiplier: the normal term grows linearly in θ
        let wrong = kkt_residual(&p, &c, &x, 2.0, 2.5).unwrap();
        assert!(wrong >= 2.0 - 1e-9);
        // interior stationary point with θ = 0
        let r = kkt_residual(&p, &Point::new(vec![1.0]), &Point::new(vec![0.0]), 2.0, 0.0).unwrap();
        assert_eq!(r, 0.0);
        assert!(kkt_residual(&p, &c, &x, 2.0, -1.0).is_err());
    }
}
