//! Outer loops: the ball-proximal point method and the two baselines
//! (proximal point with an inner gradient solver, and plain gradient descent).
//!
//! All three stop when the Riemannian gradient norm at the current iterate
//! drops to `eps_opt`, share the Armijo constants of [`InnerSolverConfig`],
//! and count objective evaluations through a single per-run counter.

use serde::{Deserialize, Serialize};

use crate::ball::{exact_quadratic_ball_oracle, pg_from, InnerSolverConfig};
use crate::error::{invalid, Result};
use crate::linesearch::{backtrack, StepMemory};
use crate::manifold::Point;
use crate::objective::{initial_point, ProblemInstance};
use crate::oracle::CountingOracle;
use crate::trace::{InnerPoint, IterRecord, RunMeta, StepRecord, TerminalStatus, Trace};

/// Steps shorter than this at a nonstationary point end the run.
const STAGNATION_STEP: f64 = 1e-14;

pub const INNER_TOL_RULE: &str = "tol = max(eps_opt, min(sqrt(eps_opt), outer_residual/10)); ball subproblems: min(tol, 0.1*t_k)";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum RadiusRule {
    Fixed { t: f64 },
    /// `alpha * |grad f(p_k)|`
    AdaptiveGrad { alpha: f64 },
    /// `beta * (f(p_k) - f_lower) / |grad f(p_k)|`; `f_lower` defaults to the
    /// problem's known optimal value.
    Polyak { beta: f64, f_lower: Option<f64> },
    /// `t0 / (k + 1)^power`, a divergent-sum schedule for `power <= 1`.
    Diminishing { t0: f64, power: f64 },
}

/// A radius rule together with its clipping band. `Fixed` and `Diminishing`
/// ignore the band.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusStrategy {
    pub rule: RadiusRule,
    pub t_min: f64,
    pub t_max: f64,
}

impl RadiusStrategy {
    pub const DEFAULT_T_MAX: f64 = 1e6;

    fn with_default_band(rule: RadiusRule) -> Self {
        RadiusStrategy {
            rule,
            t_min: 1e-6_f64.cbrt(),
            t_max: Self::DEFAULT_T_MAX,
        }
    }

    pub fn fixed(t: f64) -> Self {
        Self::with_default_band(RadiusRule::Fixed { t })
    }

    pub fn adaptive(alpha: f64) -> Self {
        Self::with_default_band(RadiusRule::AdaptiveGrad { alpha })
    }

    pub fn polyak(beta: f64) -> Self {
        Self::with_default_band(RadiusRule::Polyak { beta, f_lower: None })
    }

    pub fn diminishing(t0: f64, power: f64) -> Self {
        Self::with_default_band(RadiusRule::Diminishing { t0, power })
    }

    /// Sets `t_min = eps_opt^(1/3)`.
    pub fn with_eps_opt(mut self, eps_opt: f64) -> Self {
        self.t_min = eps_opt.cbrt();
        self
    }

    pub fn with_band(mut self, t_min: f64, t_max: f64) -> Self {
        self.t_min = t_min;
        self.t_max = t_max;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_min > 0.0 && self.t_min <= self.t_max) {
            return Err(invalid("radius band must satisfy 0 < t_min <= t_max"));
        }
        let ok = match self.rule {
            RadiusRule::Fixed { t } => t > 0.0 && t.is_finite(),
            RadiusRule::AdaptiveGrad { alpha } => alpha > 0.0,
            RadiusRule::Polyak { beta, .. } => beta > 0.0,
            RadiusRule::Diminishing { t0, power } => t0 > 0.0 && power >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("invalid radius rule {:?}", self.rule)))
        }
    }

    /// Constant radius, when the rule produces one.
    pub fn constant_radius(&self) -> Option<f64> {
        match self.rule {
            RadiusRule::Fixed { t } => Some(t),
            _ => None,
        }
    }

    fn clip(&self, t: f64) -> f64 {
        t.max(self.t_min).min(self.t_max)
    }
}

/// Radius for outer iteration `k`.
pub fn next_radius(
    strategy: &RadiusStrategy,
    k: usize,
    grad_norm: f64,
    f_val: f64,
    f_lower: Option<f64>,
) -> Result<f64> {
    if !(grad_norm >= 0.0) {
        return Err(invalid("gradient norm must be nonnegative"));
    }
    Ok(match strategy.rule {
        RadiusRule::Fixed { t } => t,
        RadiusRule::AdaptiveGrad { alpha } => strategy.clip(alpha * grad_norm),
        RadiusRule::Polyak { beta, .. } => {
            let lower = f_lower.ok_or_else(|| invalid("Polyak radius needs a lower bound on f*"))?;
            let mut gap = f_val - lower;
            if gap < 0.0 {
                if -gap > 1e-12 * (1.0 + f_val.abs()) {
                    return Err(invalid(format!("lower bound {lower} exceeds f = {f_val}")));
                }
                gap = 0.0;
            }
            if grad_norm < 1e-300 {
                strategy.t_min
            } else {
                strategy.clip(beta * gap / grad_norm)
            }
        }
        RadiusRule::Diminishing { t0, power } => t0 / ((k + 1) as f64).powf(power),
    })
}

/// Stopping tolerance for one inner solve.
pub fn inner_tolerance(outer_residual: f64, t_k: f64, eps_opt: f64, is_ball: bool) -> f64 {
    let mut tol = eps_opt.sqrt().min(outer_residual / 10.0).max(eps_opt);
    if is_ball {
        tol = tol.min(0.1 * t_k);
    }
    tol
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    /// Ball subproblems solved by projected gradient.
    Inexact,
    /// Ball subproblems solved by the exact quadratic oracle.
    Exact,
}

/// Which outer method produced a trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "snake_case")]
pub enum Method {
    Broximal { strategy: RadiusStrategy },
    Proximal { lambda: f64 },
    Gradient,
}

impl Method {
    /// Short algorithm id: `broximal-f`, `broximal-a`, `broximal-p`,
    /// `broximal-d`, `proximal` or `gradient`.
    pub fn algorithm_id(&self) -> &'static str {
        match self {
            Method::Broximal { strategy } => match strategy.rule {
                RadiusRule::Fixed { .. } => "broximal-f",
                RadiusRule::AdaptiveGrad { .. } => "broximal-a",
                RadiusRule::Polyak { .. } => "broximal-p",
                RadiusRule::Diminishing { .. } => "broximal-d",
            },
            Method::Proximal { .. } => "proximal",
            Method::Gradient => "gradient",
        }
    }

    /// The method's scalar parameter (t, alpha, beta, t0 or lambda).
    pub fn parameter(&self) -> Option<f64> {
        match self {
            Method::Broximal { strategy } => Some(match strategy.rule {
                RadiusRule::Fixed { t } => t,
                RadiusRule::AdaptiveGrad { alpha } => alpha,
                RadiusRule::Polyak { beta, .. } => beta,
                RadiusRule::Diminishing { t0, .. } => t0,
            }),
            Method::Proximal { lambda } => Some(*lambda),
            Method::Gradient => None,
        }
    }

    pub fn label(&self) -> String {
        match self.parameter() {
            Some(p) => format!("{}({p})", self.algorithm_id()),
            None => self.algorithm_id().to_string(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub eps_opt: f64,
    pub max_outer: usize,
    /// Armijo constants, inner iteration cap and step policy. `tol` and
    /// `warm_start` are overridden per subproblem.
    pub inner: InnerSolverConfig,
    pub oracle: OracleMode,
    pub record_theory_fields: bool,
    pub record_inner_points: bool,
    /// Starting point; drawn with `initial_point(problem, seed)` when absent.
    pub start: Option<Point>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            eps_opt: 1e-6,
            max_outer: 100_000,
            inner: InnerSolverConfig::default(),
            oracle: OracleMode::Inexact,
            record_theory_fields: true,
            record_inner_points: false,
            start: None,
        }
    }
}

impl SolverConfig {
    pub fn exact() -> Self {
        SolverConfig {
            oracle: OracleMode::Exact,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_opt > 0.0) {
            return Err(invalid("eps_opt must be positive"));
        }
        self.inner.validate()
    }

    fn meta(&self, seed: u64) -> RunMeta {
        RunMeta {
            version: concat!("rbppm ", env!("CARGO_PKG_VERSION")).to_string(),
            seed,
            eps_opt: self.eps_opt,
            max_outer: self.max_outer,
            oracle_mode: self.oracle,
            armijo_c: self.inner.armijo_c,
            backtrack_factor: self.inner.backtrack_factor,
            max_inner: self.inner.max_inner,
            initial_step: self.inner.initial_step,
            inner_tol_rule: INNER_TOL_RULE.to_string(),
            generator_note: "quadratic eigenbasis: QR of a standard-normal matrix, sign-fixed R diagonal".into(),
        }
    }

    fn start_point(&self, problem: &ProblemInstance, seed: u64) -> Result<Point> {
        let p = match &self.start {
            Some(p) => p.clone(),
            None => initial_point(problem, seed),
        };
        problem.manifold().validate_point(&p)?;
        Ok(p)
    }
}

struct TraceBuilder {
    records: Vec<IterRecord>,
    inner_points: Vec<InnerPoint>,
}

impl TraceBuilder {
    fn new() -> Self {
        TraceBuilder {
            records: Vec::new(),
            inner_points: Vec::new(),
        }
    }

    fn push(&mut self, point: &Point, f: f64, grad_norm: f64, f_evals: u64, step: Option<StepRecord>) {
        self.records.push(IterRecord {
            k: self.records.len(),
            point: point.clone(),
            f,
            grad_norm,
            f_evals,
            step,
        });
    }

    fn finish(self, problem: &ProblemInstance, method: Method, status: TerminalStatus, meta: RunMeta) -> Trace {
        Trace {
            problem_label: problem.label().to_string(),
            problem_spec: problem.spec().cloned(),
            method,
            status,
            meta,
            records: self.records,
            inner_points: self.inner_points,
        }
    }
}

/// Ball-proximal point method: `p_{k+1}` minimizes `f` over the geodesic
/// ball of radius `t_k` around `p_k`.
pub fn run_rbppm(problem: &ProblemInstance, strategy: &RadiusStrategy, cfg: &SolverConfig, seed: u64) -> Result<Trace> {
    cfg.validate()?;
    strategy.validate()?;
    let m = problem.manifold();
    let quad = match cfg.oracle {
        OracleMode::Exact => Some(
            problem
                .quadratic()
                .ok_or_else(|| invalid("exact oracle mode needs a Euclidean quadratic"))?,
        ),
        OracleMode::Inexact => None,
    };
    let f_lower = match strategy.rule {
        RadiusRule::Polyak { f_lower, .. } => problem.f_star().or(f_lower),
        _ => None,
    };
    if matches!(strategy.rule, RadiusRule::Polyak { .. }) && f_lower.is_none() {
        return Err(invalid("Polyak radius needs f* or an explicit lower bound"));
    }

    let oracle = CountingOracle::new(problem);
    let mut p = cfg.start_point(problem, seed)?;
    let (mut f, mut g) = oracle.eval(&p);
    let mut memory = StepMemory::new();
    let mut out = TraceBuilder::new();
    let mut k = 0;
    let status = loop {
        let gn = m.norm(&g);
        let evals_here = oracle.evals();
        if gn <= cfg.eps_opt {
            out.push(&p, f, gn, evals_here, None);
            break TerminalStatus::Converged;
        }
        if k >= cfg.max_outer {
            out.push(&p, f, gn, evals_here, None);
            break TerminalStatus::MaxOuter;
        }
        let t = next_radius(strategy, k, gn, f, f_lower)?;
        let outer_residual = if k == 0 { f64::INFINITY } else { gn };
        let tol = inner_tolerance(outer_residual, t, cfg.eps_opt, true);

        let brox = match quad {
            Some(spec) => {
                let mut r = exact_quadratic_ball_oracle(spec, &p, t)?;
                let (fr, gr) = oracle.eval(&r.point);
                r.f_value = fr;
                r.gradient = gr;
                r
            }
            None => {
                let inner = InnerSolverConfig {
                    tol,
                    warm_start: None,
                    record_path: cfg.record_inner_points,
                    ..cfg.inner.clone()
                };
                pg_from(&oracle, &p, t, &inner, p.clone(), f, g.clone(), &mut memory)
            }
        };
        if cfg.record_inner_points {
            // path[0] is p_k itself
            for (q, fq) in brox.path.iter().skip(1) {
                out.inner_points.push(InnerPoint {
                    k,
                    point: q.clone(),
                    f: *fq,
                });
            }
        }
        let step_len = m.distance_unchecked(&p, &brox.point);
        let (theta, s_norm) = if cfg.record_theory_fields {
            (Some(brox.multiplier_theta), Some(brox.multiplier_theta * step_len))
        } else {
            (None, None)
        };
        out.push(
            &p,
            f,
            gn,
            evals_here,
            Some(StepRecord {
                t: Some(t),
                theta,
                s_norm,
                step_len,
                inner_iters: brox.inner_iterations,
                inner_tol: quad.is_none().then_some(tol),
                active: Some(brox.active),
                inner_converged: brox.converged,
            }),
        );
        p = brox.point;
        f = brox.f_value;
        g = brox.gradient;
        k += 1;
        if step_len <= STAGNATION_STEP {
            let gn = m.norm(&g);
            out.push(&p, f, gn, oracle.evals(), None);
            break if gn <= cfg.eps_opt {
                TerminalStatus::Converged
            } else {
                TerminalStatus::Stagnated
            };
        }
    };
    Ok(out.finish(problem, Method::Broximal { strategy: *strategy }, status, cfg.meta(seed)))
}

/// Proximal point baseline: `p_{k+1}` approximately minimizes
/// `f(q) + (lambda/2) d^2(q, p_k)` by Riemannian gradient descent with Armijo.
pub fn run_proximal(problem: &ProblemInstance, lambda: f64, cfg: &SolverConfig, seed: u64) -> Result<Trace> {
    cfg.validate()?;
    if !(lambda > 0.0) {
        return Err(invalid("proximal parameter must be positive"));
    }
    let m = problem.manifold();
    let oracle = CountingOracle::new(problem);
    let mut p = cfg.start_point(problem, seed)?;
    let (mut f, mut g) = oracle.eval(&p);
    let mut memory = StepMemory::new();
    let lipschitz = problem.lipschitz().map(|l| l + lambda);
    let mut out = TraceBuilder::new();
    let mut k = 0;
    let status = loop {
        let gn = m.norm(&g);
        let evals_here = oracle.evals();
        if gn <= cfg.eps_opt {
            out.push(&p, f, gn, evals_here, None);
            break TerminalStatus::Converged;
        }
        if k >= cfg.max_outer {
            out.push(&p, f, gn, evals_here, None);
            break TerminalStatus::MaxOuter;
        }
        let outer_residual = if k == 0 { f64::INFINITY } else { gn };
        let tol = inner_tolerance(outer_residual, f64::INFINITY, cfg.eps_opt, false);

        // Inner gradient descent on phi(q) = f(q) + lambda/2 d^2(q, p), from q = p.
        let (mut q, mut fq, mut gq) = (p.clone(), f, g.clone());
        let (mut phi, mut gphi) = (f, g.clone());
        let mut iters = 0;
        let mut converged = false;
        while iters < cfg.inner.max_inner {
            if m.norm(&gphi) <= tol {
                converged = true;
                break;
            }
            let mut last = None;
            let alpha0 = memory.initial(cfg.inner.initial_step, lipschitz);
            let acc = backtrack(
                m,
                &q,
                phi,
                &gphi,
                alpha0,
                cfg.inner.armijo_c,
                cfg.inner.backtrack_factor,
                |alpha| m.exp_unchecked(&q, &(gphi.vec() * -alpha)),
                |y| {
                    let (fy, gy) = oracle.eval(y);
                    let to_center = m.log_unchecked(y, &p);
                    let d2 = m.inner_unchecked(to_center.vec(), to_center.vec());
                    let phi_y = fy + 0.5 * lambda * d2;
                    let gphi_y = gy.axpy(-lambda, &to_center).expect("same base point");
                    last = Some((fy, gy));
                    (phi_y, gphi_y)
                },
            );
            let Some(acc) = acc else { break };
            memory.accept(acc.step);
            (fq, gq) = last.expect("accepted point was evaluated");
            if cfg.record_inner_points {
                out.inner_points.push(InnerPoint {
                    k,
                    point: acc.point.clone(),
                    f: fq,
                });
            }
            q = acc.point;
            phi = acc.f;
            gphi = acc.grad;
            iters += 1;
        }
        let step_len = m.distance_unchecked(&p, &q);
        out.push(
            &p,
            f,
            gn,
            evals_here,
            Some(StepRecord {
                t: None,
                theta: None,
                s_norm: None,
                step_len,
                inner_iters: iters,
                inner_tol: Some(tol),
                active: None,
                inner_converged: converged,
            }),
        );
        p = q;
        f = fq;
        g = gq;
        k += 1;
        if step_len <= STAGNATION_STEP {
            let gn = m.norm(&g);
            out.push(&p, f, gn, oracle.evals(), None);
            break if gn <= cfg.eps_opt {
                TerminalStatus::Converged
            } else {
                TerminalStatus::Stagnated
            };
        }
    };
    Ok(out.finish(problem, Method::Proximal { lambda }, status, cfg.meta(seed)))
}

/// Riemannian gradient descent `p_{k+1} = exp_{p_k}(-a_k grad f(p_k))` with
/// Armijo backtracking.
pub fn run_gradient(problem: &ProblemInstance, cfg: &SolverConfig, seed: u64) -> Result<Trace> {
    cfg.validate()?;
    let m = problem.manifold();
    let oracle = CountingOracle::new(problem);
    let mut p = cfg.start_point(problem, seed)?;
    let (mut f, mut g) = oracle.eval(&p);
    let mut memory = StepMemory::new();
    let mut out = TraceBuilder::new();
    let mut k = 0;
    let status = loop {
        let gn = m.norm(&g);
        let evals_here = oracle.evals();
        if gn <= cfg.eps_opt {
            out.push(&p, f, gn, evals_here, None);
            break TerminalStatus::Converged;
        }
        if k >= cfg.max_outer {
            out.push(&p, f, gn, evals_here, None);
            break TerminalStatus::MaxOuter;
        }
        let alpha0 = memory.initial(cfg.inner.initial_step, problem.lipschitz());
        let acc = backtrack(
            m,
            &p,
            f,
            &g,
            alpha0,
            cfg.inner.armijo_c,
            cfg.inner.backtrack_factor,
            |alpha| m.exp_unchecked(&p, &(g.vec() * -alpha)),
            |y| oracle.eval(y),
        );
        let Some(acc) = acc else {
            out.push(&p, f, gn, evals_here, None);
            break TerminalStatus::Stagnated;
        };
        memory.accept(acc.step);
        let step_len = m.distance_unchecked(&p, &acc.point);
        out.push(
            &p,
            f,
            gn,
            evals_here,
            Some(StepRecord {
                t: None,
                theta: None,
                s_norm: None,
                step_len,
                inner_iters: 0,
                inner_tol: None,
                active: None,
                inner_converged: true,
            }),
        );
        p = acc.point;
        f = acc.f;
        g = acc.grad;
        k += 1;
    };
    Ok(out.finish(problem, Method::Gradient, status, cfg.meta(seed)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::make_quadratic;

    fn half_square_from(x0: f64) -> (ProblemInstance, SolverConfig) {
        let p = make_quadratic(1, 1.0, 1.0, 0).unwrap();
        let cfg = SolverConfig {
            start: Some(Point::new(vec![x0])),
            ..SolverConfig::exact()
        };
        (p, cfg)
    }

    #[test]
    fn radius_rules() {
        let fixed = RadiusStrategy::fixed(0.1);
        assert_eq!(next_radius(&fixed, 0, 123.0, 5.0, None).unwrap(), 0.1);
        assert_eq!(next_radius(&fixed, 9, 0.0, 5.0, None).unwrap(), 0.1);

        let a = RadiusStrategy::adaptive(1e-3).with_band(1e-2, 1e6);
        assert!((next_radius(&a, 0, 2000.0, 0.0, None).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(next_radius(&a, 0, 1.0, 0.0, None).unwrap(), 1e-2);
        assert_eq!(next_radius(&a, 0, 1e12, 0.0, None).unwrap(), 1e6);

        let p = RadiusStrategy::polyak(1e-2).with_eps_opt(1e-6);
        assert!((p.t_min - 0.01).abs() < 1e-15);
        let t = next_radius(&p, 0, 100.0, 50.0, Some(0.0)).unwrap();
        assert_eq!(t, p.t_min);
        let t = next_radius(&p, 0, 1.0, 500.0, Some(0.0)).unwrap();
        assert!((t - 5.0).abs() < 1e-12);
        assert_eq!(next_radius(&p, 0, 0.0, 1.0, Some(0.0)).unwrap(), p.t_min);
        assert!(next_radius(&p, 0, 100.0, 50.0, None).is_err());

        let d = RadiusStrategy::diminishing(0.01, 0.5);
        assert!((next_radius(&d, 3, 1.0, 1.0, None).unwrap() - 0.005).abs() < 1e-15);
    }

    #[test]
    fn inner_tolerance_examples() {
        assert_eq!(inner_tolerance(f64::INFINITY, 0.5, 1e-6, true), 1e-3);
        assert!((inner_tolerance(1e-5, 0.5, 1e-6, true) - 1e-6).abs() < 1e-18);
        assert_eq!(inner_tolerance(1e-7, 0.5, 1e-6, true), 1e-6);
        assert!(inner_tolerance(f64::INFINITY, 1e-3, 1e-6, true) <= 1e-4);
        assert_eq!(inner_tolerance(f64::INFINITY, 1e-3, 1e-6, false), 1e-3);
    }

    #[test]
    fn exact_rbppm_on_half_square() {
        let (p, cfg) = half_square_from(5.0);
        let tr = run_rbppm(&p, &RadiusStrategy::fixed(2.0), &cfg, 0).unwrap();
        let xs: Vec<f64> = tr.points().map(|q| q.0[0]).collect();
        assert_eq!(tr.status, TerminalStatus::Converged);
        assert_eq!(tr.outer_iterations(), 3);
        for (x, want) in xs.iter().zip([5.0, 3.0, 1.0, 0.0]) {
            assert!((x - want).abs() < 1e-12, "{xs:?}");
        }
        let th: Vec<f64> = tr.records.iter().filter_map(|r| r.step.as_ref()?.theta).collect();
        assert!((th[0] - 1.5).abs() < 1e-10 && (th[1] - 0.5).abs() < 1e-10 && th[2] == 0.0);
    }

    #[test]
    fn already_optimal_start() {
        let (p, cfg) = half_square_from(0.0);
        let tr = run_rbppm(&p, &RadiusStrategy::fixed(2.0), &cfg, 0).unwrap();
        assert_eq!(tr.outer_iterations(), 0);
        assert_eq!(tr.status, TerminalStatus::Converged);
        assert_eq!(tr.f_evals(), 1);
    }

    #[test]
    fn exact_mode_requires_quadratic() {
        use crate::manifold::Manifold;
        use crate::objective::make_frechet_mean;
        let m = Manifold::hyperboloid(2).unwrap();
        let p = make_frechet_mean(m, &[m.origin()], &[1.0]).unwrap();
        assert!(run_rbppm(&p, &RadiusStrategy::fixed(1.0), &SolverConfig::exact(), 0).is_err());
    }

    #[test]
    fn proximal_first_step() {
        let p = make_quadratic(1, 1.0, 1.0, 0).unwrap();
        let cfg = SolverConfig {
            start: Some(Point::new(vec![4.0])),
            max_outer: 1,
            ..Default::default()
        };
        let tr = run_proximal(&p, 1.0, &cfg, 0).unwrap();
        // x + (x - 4) = 0, solved to the first inner tolerance sqrt(eps_opt)
        assert!((tr.records[1].point.0[0] - 2.0).abs() < 1e-3);
        assert_eq!(tr.status, TerminalStatus::MaxOuter);
    }

    #[test]
    fn gradient_single_exact_step() {
        let p = make_quadratic(1, 1.0, 1.0, 0).unwrap();
        let cfg = SolverConfig {
            start: Some(Point::new(vec![1.0])),
            ..Default::default()
        };
        let tr = run_gradient(&p, &cfg, 0).unwrap();
        assert_eq!(tr.outer_iterations(), 1);
        assert_eq!(tr.records[1].point.0[0], 0.0);
        assert_eq!(tr.status, TerminalStatus::Converged);
    }

    #[test]
    fn max_outer_is_reported() {
        let p = make_quadratic(3, 1.0, 10.0, 1).unwrap();
        let cfg = SolverConfig {
            max_outer: 2,
            ..Default::default()
        };
        let tr = run_rbppm(&p, &RadiusStrategy::fixed(0.01), &cfg, 1).unwrap();
        assert_eq!(tr.status, TerminalStatus::MaxOuter);
        assert_eq!(tr.outer_iterations(), 2);
        assert_eq!(tr.records.len(), 3);
    }
}
