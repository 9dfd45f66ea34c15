//! Post-hoc theory checks on recorded traces.
//!
//! Every inequality is reported as `lhs - rhs` at its worst iteration, so a
//! positive `worst_violation` means the inequality itself failed and the
//! check fails once that exceeds the check's tolerance.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::manifold::Point;
use crate::objective::ProblemInstance;
use crate::solver::{Method, RadiusRule};
use crate::trace::{StepRecord, Trace};

pub const VALUE_MONOTONICITY: &str = "value_monotonicity";
pub const DISTANCE_DROP: &str = "distance_drop";
pub const STEP_LENGTH_IDENTITY: &str = "step_length_identity";
pub const MULTIPLIER_MONOTONICITY: &str = "multiplier_monotonicity";
pub const SUBGRADIENT_NORM_MONOTONICITY: &str = "subgradient_norm_monotonicity";
pub const SUBGRADIENT_BUDGET: &str = "subgradient_budget";
pub const SUBGRADIENT_LAST_ITERATE: &str = "subgradient_last_iterate";
pub const GEOMETRIC_DECAY: &str = "geometric_decay";
pub const O1K_BOUND: &str = "o1k_bound";
pub const FINITE_TERMINATION: &str = "finite_termination";
pub const DICHOTOMY: &str = "dichotomy";

/// All check names, in report order.
pub const CHECK_NAMES: [&str; 11] = [
    VALUE_MONOTONICITY,
    DISTANCE_DROP,
    STEP_LENGTH_IDENTITY,
    MULTIPLIER_MONOTONICITY,
    SUBGRADIENT_NORM_MONOTONICITY,
    SUBGRADIENT_BUDGET,
    SUBGRADIENT_LAST_ITERATE,
    GEOMETRIC_DECAY,
    O1K_BOUND,
    FINITE_TERMINATION,
    DICHOTOMY,
];

/// Gap below which a diminishing-radius run counts as having approached f*.
pub const DICHOTOMY_GAP: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagMode {
    /// Fixed absolute slacks; meant for exact-oracle traces.
    Exact,
    /// Slack `10 * inner_tol * (1 + scale)` per inequality.
    Inexact,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub status: CheckStatus,
    /// Largest `lhs - rhs` seen; 0 when not applicable.
    pub worst_violation: f64,
    pub iteration_of_worst: usize,
    /// Largest slack allowed at any tested iteration.
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub trace_id: String,
    pub mode: DiagMode,
    pub checks: Vec<CheckResult>,
}

impl TheoryReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| c.status == CheckStatus::Fail)
            .map(|c| c.name.as_str())
            .collect()
    }

    pub fn passed(&self) -> bool {
        self.failed().is_empty()
    }

    /// `pass`, `fail` or, when nothing applied, `n/a`.
    pub fn summary(&self) -> &'static str {
        if !self.passed() {
            "fail"
        } else if self.checks.iter().all(|c| c.status == CheckStatus::NotApplicable) {
            "n/a"
        } else {
            "pass"
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "trace: {}  mode: {:?}", self.trace_id, self.mode);
        let _ = writeln!(
            out,
            "{:<31} {:<6} {:>13} {:>6} {:>10}",
            "check", "status", "worst", "iter", "tol"
        );
        for c in &self.checks {
            let status = match c.status {
                CheckStatus::Pass => "pass",
                CheckStatus::Fail => "FAIL",
                CheckStatus::NotApplicable => "n/a",
            };
            let _ = writeln!(
                out,
                "{:<31} {:<6} {:>13.4e} {:>6} {:>10.1e}",
                c.name, status, c.worst_violation, c.iteration_of_worst, c.tolerance
            );
        }
        out
    }
}

/// Tracks the worst `lhs - rhs - tol` over the tested iterations.
struct Acc {
    name: &'static str,
    worst: f64,
    at: usize,
    margin: f64,
    max_tol: f64,
    any: bool,
}

impl Acc {
    fn new(name: &'static str) -> Self {
        Acc {
            name,
            worst: f64::NEG_INFINITY,
            at: 0,
            margin: f64::NEG_INFINITY,
            max_tol: 0.0,
            any: false,
        }
    }

    /// Records `lhs - rhs` at iteration `k` against slack `tol`. NaN counts
    /// as a violation.
    fn add(&mut self, k: usize, violation: f64, tol: f64) {
        let v = if violation.is_nan() { f64::INFINITY } else { violation };
        self.any = true;
        self.max_tol = self.max_tol.max(tol);
        if v - tol > self.margin {
            self.margin = v - tol;
        }
        if v > self.worst {
            self.worst = v;
            self.at = k;
        }
    }

    fn finish(self) -> CheckResult {
        if !self.any {
            return na(self.name, "no applicable iterations");
        }
        CheckResult {
            name: self.name.to_string(),
            status: if self.margin > 0.0 {
                CheckStatus::Fail
            } else {
                CheckStatus::Pass
            },
            worst_violation: self.worst,
            iteration_of_worst: self.at,
            tolerance: self.max_tol,
            note: None,
        }
    }
}

fn na(name: &str, why: &str) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        status: CheckStatus::NotApplicable,
        worst_violation: 0.0,
        iteration_of_worst: 0,
        tolerance: 0.0,
        note: Some(why.to_string()),
    }
}

/// Slack policy shared by all checks.
struct Slack {
    mode: DiagMode,
    fixed: Option<f64>,
    /// Inner tolerance of each step (0 when none was recorded).
    inner: Vec<f64>,
    /// Running maximum of `inner`.
    inner_max: Vec<f64>,
}

impl Slack {
    fn new(trace: &Trace, mode: DiagMode, fixed: Option<f64>) -> Self {
        let inner: Vec<f64> = trace
            .records
            .iter()
            .map(|r| r.step.as_ref().and_then(|s| s.inner_tol).unwrap_or(0.0))
            .collect();
        let inner_max = inner
            .iter()
            .scan(0.0_f64, |m, &t| {
                *m = m.max(t);
                Some(*m)
            })
            .collect();
        Slack {
            mode,
            fixed,
            inner,
            inner_max,
        }
    }

    fn pick(&self, exact: f64, scale: f64, inner: f64) -> f64 {
        if let Some(t) = self.fixed {
            return t;
        }
        match self.mode {
            DiagMode::Exact => exact,
            DiagMode::Inexact => exact.max(10.0 * inner * (1.0 + scale.abs())),
        }
    }

    /// Slack for an inequality about step `k`. `exact` is the exact-mode
    /// slack and `scale` the magnitude of the quantities compared.
    fn at(&self, exact: f64, scale: f64, k: usize) -> f64 {
        self.pick(exact, scale, self.inner.get(k).copied().unwrap_or(0.0))
    }

    /// Slack for an inequality accumulated over steps `0..=k`.
    fn upto(&self, exact: f64, scale: f64, k: usize) -> f64 {
        self.pick(exact, scale, self.inner_max.get(k).copied().unwrap_or(0.0))
    }
}

fn validate_trace(trace: &Trace, problem: &ProblemInstance) -> Result<()> {
    let m = problem.manifold();
    let n = trace.records.len();
    if n == 0 {
        return Err(invalid("trace has no records"));
    }
    for (i, r) in trace.records.iter().enumerate() {
        if r.k != i {
            return Err(invalid(format!("record {i} has index {}", r.k)));
        }
        m.validate_point(&r.point)
            .map_err(|e| invalid(format!("record {i}: {e}")))?;
        if !r.f.is_finite() || !(r.grad_norm >= 0.0) {
            return Err(invalid(format!("record {i}: non-finite value or gradient norm")));
        }
        match (&r.step, i + 1 == n) {
            (Some(_), true) => return Err(invalid("final record carries a step")),
            (None, false) => return Err(invalid(format!("record {i} is missing its step"))),
            (Some(s), false) if !(s.step_len >= 0.0) => {
                return Err(invalid(format!("record {i}: negative step length")))
            }
            _ => {}
        }
        if i > 0 && r.f_evals < trace.records[i - 1].f_evals {
            return Err(invalid(format!("record {i}: evaluation counter decreased")));
        }
    }
    Ok(())
}

/// Runs every check with the mode's default slacks.
pub fn evaluate(trace: &Trace, problem: &ProblemInstance, mode: DiagMode) -> Result<TheoryReport> {
    evaluate_inner(trace, problem, mode, None)
}

/// Runs every check with one absolute slack `tol` for all inequalities.
pub fn evaluate_with_tolerance(
    trace: &Trace,
    problem: &ProblemInstance,
    mode: DiagMode,
    tol: f64,
) -> Result<TheoryReport> {
    if !(tol >= 0.0) {
        return Err(invalid("tolerance must be nonnegative"));
    }
    evaluate_inner(trace, problem, mode, Some(tol))
}

struct Ctx<'a> {
    trace: &'a Trace,
    problem: &'a ProblemInstance,
    slack: Slack,
    broximal: Option<RadiusRule>,
    /// (p*, f*, d0) when the optimum is known.
    optimum: Option<(&'a Point, f64, f64)>,
    f0: f64,
}

impl<'a> Ctx<'a> {
    fn steps(&self) -> impl Iterator<Item = (usize, &'a StepRecord)> + 'a {
        self.trace
            .records
            .iter()
            .filter_map(|r| r.step.as_ref().map(|s| (r.k, s)))
    }

    fn dist(&self, p: &Point, q: &Point) -> f64 {
        self.problem.manifold().distance_unchecked(p, q)
    }

    fn constant_radius(&self) -> Option<f64> {
        match self.broximal {
            Some(RadiusRule::Fixed { t }) => Some(t),
            _ => None,
        }
    }

    /// Number of leading steps that ended on the sphere.
    fn boundary_prefix(&self) -> usize {
        self.steps().take_while(|(_, s)| s.active == Some(true)).count()
    }
}

fn evaluate_inner(
    trace: &Trace,
    problem: &ProblemInstance,
    mode: DiagMode,
    fixed: Option<f64>,
) -> Result<TheoryReport> {
    validate_trace(trace, problem)?;
    let broximal = match &trace.method {
        Method::Broximal { strategy } => Some(strategy.rule),
        _ => None,
    };
    let f0 = trace.records[0].f;
    let optimum = match (problem.p_star(), problem.f_star()) {
        (Some(p), Some(f)) => Some((p, f, problem.manifold().distance_unchecked(&trace.records[0].point, p))),
        _ => None,
    };
    let ctx = Ctx {
        trace,
        problem,
        slack: Slack::new(trace, mode, fixed),
        broximal,
        optimum,
        f0,
    };
    let checks = vec![
        value_monotonicity(&ctx),
        distance_drop(&ctx),
        step_length_identity(&ctx),
        multiplier_monotonicity(&ctx),
        subgradient_norm_monotonicity(&ctx),
        subgradient_budget(&ctx),
        subgradient_last_iterate(&ctx),
        geometric_decay(&ctx),
        o1k_bound(&ctx),
        finite_termination(&ctx),
        dichotomy(&ctx),
    ];
    Ok(TheoryReport {
        trace_id: format!(
            "{}/{}/seed{}",
            trace.problem_label,
            trace.method.label(),
            trace.meta.seed
        ),
        mode,
        checks,
    })
}

fn value_monotonicity(c: &Ctx) -> CheckResult {
    let mut acc = Acc::new(VALUE_MONOTONICITY);
    let exact = 1e-12 * (1.0 + c.f0.abs());
    for w in c.trace.records.windows(2) {
        acc.add(w[1].k, w[1].f - w[0].f, c.slack.at(exact, w[0].f, w[0].k));
    }
    acc.finish()
}

fn distance_drop(c: &Ctx) -> CheckResult {
    if c.broximal.is_none() {
        return na(DISTANCE_DROP, "ball-proximal traces only");
    }
    let Some((p_star, _, _)) = c.optimum else {
        return na(DISTANCE_DROP, "minimizer unknown");
    };
    let mut acc = Acc::new(DISTANCE_DROP);
    let recs = &c.trace.records;
    for (k, s) in c.steps() {
        let (Some(t), Some(true)) = (s.t, s.active) else { continue };
        let d_k = c.dist(&recs[k].point, p_star);
        let d_next = c.dist(&recs[k + 1].point, p_star);
        acc.add(k, d_next * d_next - (d_k * d_k - t * t), c.slack.at(1e-9, d_k * d_k, k));
    }
    acc.finish()
}

fn step_length_identity(c: &Ctx) -> CheckResult {
    let mut acc = Acc::new(STEP_LENGTH_IDENTITY);
    let recs = &c.trace.records;
    for (k, s) in c.steps() {
        let d = c.dist(&recs[k].point, &recs[k + 1].point);
        acc.add(k, (s.step_len - d).abs(), c.slack.at(1e-8, d, k));
        if let (Some(t), Some(true)) = (s.t, s.active) {
            let band = crate::ball::boundary_tol(t);
            let tol = match c.slack.mode {
                DiagMode::Exact => c.slack.at(1e-8, t, k),
                DiagMode::Inexact => c.slack.at(1e-8, t, k).max(band),
            };
            acc.add(k, (s.step_len - t).abs(), tol);
        }
    }
    acc.finish()
}

fn multiplier_monotonicity(c: &Ctx) -> CheckResult {
    if c.broximal.is_none() {
        return na(MULTIPLIER_MONOTONICITY, "ball-proximal traces only");
    }
    let mut acc = Acc::new(MULTIPLIER_MONOTONICITY);
    let steps: Vec<_> = c.steps().collect();
    for &(k, s) in &steps {
        // recorded subgradient norm must match theta * step length
        if let (Some(th), Some(sn)) = (s.theta, s.s_norm) {
            if th < 0.0 {
                acc.add(k, -th, 0.0);
            }
            acc.add(k, (sn - th * s.step_len).abs(), c.slack.at(1e-8, sn, k));
        }
    }
    for w in steps.windows(2) {
        let ((_, a), (k, b)) = (w[0], w[1]);
        let (Some(ta), Some(tha), Some(tb), Some(thb)) = (a.t, a.theta, b.t, b.theta) else {
            continue;
        };
        let (prev, next) = (ta * tha, tb * thb);
        acc.add(k, next - prev, c.slack.at(1e-8, prev, k));
    }
    acc.finish()
}

fn subgradient_norm_monotonicity(c: &Ctx) -> CheckResult {
    if c.broximal.is_none() {
        return na(SUBGRADIENT_NORM_MONOTONICITY, "ball-proximal traces only");
    }
    let mut acc = Acc::new(SUBGRADIENT_NORM_MONOTONICITY);
    let s: Vec<(usize, f64)> = c.steps().filter_map(|(k, s)| Some((k, s.s_norm?))).collect();
    for w in s.windows(2) {
        acc.add(w[1].0, w[1].1 - w[0].1, c.slack.at(1e-8, w[0].1, w[1].0));
    }
    acc.finish()
}

fn subgradient_budget(c: &Ctx) -> CheckResult {
    if c.broximal.is_none() {
        return na(SUBGRADIENT_BUDGET, "ball-proximal traces only");
    }
    let Some((_, f_star, _)) = c.optimum else {
        return na(SUBGRADIENT_BUDGET, "optimal value unknown");
    };
    let gap0 = c.f0 - f_star;
    let mut acc = Acc::new(SUBGRADIENT_BUDGET);
    let mut sum = 0.0;
    for (k, s) in c.steps() {
        let (Some(t), Some(sn)) = (s.t, s.s_norm) else { continue };
        sum += t * sn;
        acc.add(k, sum - gap0, c.slack.upto(1e-8, gap0, k));
    }
    acc.finish()
}

fn subgradient_last_iterate(c: &Ctx) -> CheckResult {
    let Some(t) = c.constant_radius() else {
        return na(SUBGRADIENT_LAST_ITERATE, "constant radius only");
    };
    let Some((_, f_star, _)) = c.optimum else {
        return na(SUBGRADIENT_LAST_ITERATE, "optimal value unknown");
    };
    let gap0 = c.f0 - f_star;
    let mut acc = Acc::new(SUBGRADIENT_LAST_ITERATE);
    for (k, s) in c.steps() {
        let Some(sn) = s.s_norm else { continue };
        let big_k = (k + 1) as f64;
        acc.add(k + 1, sn - gap0 / (t * big_k), c.slack.at(1e-8, sn, k));
    }
    acc.finish()
}

fn geometric_decay(c: &Ctx) -> CheckResult {
    if c.broximal.is_none() {
        return na(GEOMETRIC_DECAY, "ball-proximal traces only");
    }
    let Some((_, f_star, d0)) = c.optimum else {
        return na(GEOMETRIC_DECAY, "optimum unknown");
    };
    let gap0 = c.f0 - f_star;
    let mut acc = Acc::new(GEOMETRIC_DECAY);
    let mut factor = 1.0;
    for (k, s) in c.steps() {
        let Some(t) = s.t else { continue };
        factor *= d0 / (d0 + t);
        let gap = c.trace.records[k + 1].f - f_star;
        acc.add(k + 1, gap - factor * gap0, c.slack.upto(1e-9, gap0, k));
    }
    acc.finish()
}

fn o1k_bound(c: &Ctx) -> CheckResult {
    let Some(t) = c.constant_radius() else {
        return na(O1K_BOUND, "constant radius only");
    };
    let Some((_, f_star, d0)) = c.optimum else {
        return na(O1K_BOUND, "optimum unknown");
    };
    let gap0 = c.f0 - f_star;
    let constant = (d0 / t).min(d0.powi(3) / ((2.0 * d0 + t) * t * t));
    // up to and including the iterate produced by the last boundary step
    let last = c.boundary_prefix();
    let mut acc = Acc::new(O1K_BOUND);
    for big_k in 1..=last {
        let gap = c.trace.records[big_k].f - f_star;
        acc.add(big_k, gap - constant * gap0 / big_k as f64, c.slack.upto(1e-9, gap0, big_k - 1));
    }
    acc.finish()
}

fn finite_termination(c: &Ctx) -> CheckResult {
    if c.broximal.is_none() {
        return na(FINITE_TERMINATION, "ball-proximal traces only");
    }
    let Some((_, _, d0)) = c.optimum else {
        return na(FINITE_TERMINATION, "minimizer unknown");
    };
    let d0sq = d0 * d0;
    // first K with sum_{j<K} t_j^2 >= d0^2 (0 when starting at the optimum)
    let mut cap = None;
    let mut acc_t2 = 0.0;
    if d0sq <= 0.0 {
        cap = Some(0);
    } else if let Some(t) = c.constant_radius() {
        cap = Some((d0sq / (t * t) * (1.0 - 1e-12)).ceil() as usize);
    }
    for (k, s) in c.steps() {
        if cap.is_some() {
            break;
        }
        let Some(t) = s.t else { continue };
        acc_t2 += t * t;
        if acc_t2 >= d0sq * (1.0 - 1e-12) {
            cap = Some(k + 1);
        }
    }
    // index of the first iterate known to be optimal
    let hit = c
        .steps()
        .find(|(_, s)| s.active == Some(false))
        .map(|(k, _)| k + 1)
        .or_else(|| {
            let last = c.trace.last().expect("validated nonempty");
            (c.trace.status == crate::trace::TerminalStatus::Converged).then_some(last.k)
        });
    let mut acc = Acc::new(FINITE_TERMINATION);
    let tol = match c.slack.mode {
        DiagMode::Exact => 0.0,
        // one extra step covers radii reached only up to the inner tolerance
        DiagMode::Inexact => 1.0,
    };
    match (cap, hit) {
        (Some(cap), Some(hit)) => acc.add(hit, hit as f64 - cap as f64, tol),
        (Some(cap), None) => {
            let n = c.trace.records.len() - 1;
            acc.add(n, n as f64 - cap as f64, tol);
        }
        (None, _) => {}
    }
    match (cap, hit) {
        (None, Some(hit)) => CheckResult {
            name: FINITE_TERMINATION.to_string(),
            status: CheckStatus::Pass,
            worst_violation: 0.0,
            iteration_of_worst: hit,
            tolerance: tol,
            note: Some("optimum reached before the squared radii summed to d0^2".into()),
        },
        (None, None) => na(FINITE_TERMINATION, "squared radii never summed to d0^2"),
        _ => acc.finish(),
    }
}

fn dichotomy(c: &Ctx) -> CheckResult {
    let Some(RadiusRule::Diminishing { power, .. }) = c.broximal else {
        return na(DICHOTOMY, "diminishing radii only");
    };
    if power > 1.0 {
        return na(DICHOTOMY, "radii are summable");
    }
    let Some((_, f_star, _)) = c.optimum else {
        return na(DICHOTOMY, "optimal value unknown");
    };
    let (k, best) = c
        .trace
        .records
        .iter()
        .map(|r| (r.k, r.f - f_star))
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let mut acc = Acc::new(DICHOTOMY);
    acc.add(k, best - DICHOTOMY_GAP, 0.0);
    acc.finish()
}

/// Slack list `theta_k t_k - theta_{k+1} t_{k+1}` over consecutive boundary
/// steps, tagged with `k`.
pub fn chain_multiplier_check(trace: &Trace) -> Vec<(usize, f64)> {
    let steps: Vec<(usize, &StepRecord)> = trace
        .records
        .iter()
        .filter_map(|r| r.step.as_ref().map(|s| (r.k, s)))
        .collect();
    steps
        .windows(2)
        .filter_map(|w| {
            let ((k, a), (_, b)) = (w[0], w[1]);
            if a.active != Some(true) || b.active != Some(true) {
                return None;
            }
            Some((k, a.t? * a.theta? - b.t? * b.theta?))
        })
        .collect()
}

/// Single-row corruptions used to probe the checks' sensitivity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Fault {
    /// Sets `f_k = f_{k-1} + bump`.
    ValueBump(f64),
    /// Moves `p_k` this far further from the known minimizer.
    MoveAway(f64),
    /// Adds to the step length recorded at row `k`.
    StepLength(f64),
    /// Multiplies `theta_k` by `1 + m`.
    Theta(f64),
    /// Multiplies the recorded subgradient norm by `1 + m`.
    SubgradientNorm(f64),
}

/// Returns a copy of `trace` with `fault` applied to row `k`.
pub fn inject_fault(trace: &Trace, problem: &ProblemInstance, k: usize, fault: Fault) -> Result<Trace> {
    let mut out = trace.clone();
    let n = out.records.len();
    if k >= n {
        return Err(invalid(format!("row {k} out of range for {n} records")));
    }
    fn step_mut(out: &mut Trace, k: usize) -> Result<&mut StepRecord> {
        out.records[k]
            .step
            .as_mut()
            .ok_or_else(|| invalid(format!("row {k} has no step")))
    }
    match fault {
        Fault::ValueBump(bump) => {
            if k == 0 {
                return Err(invalid("value bump needs a previous row"));
            }
            out.records[k].f = out.records[k - 1].f + bump;
        }
        Fault::MoveAway(delta) => {
            let p_star = problem
                .p_star()
                .ok_or_else(|| invalid("moving away needs a known minimizer"))?;
            let m = problem.manifold();
            let p = &out.records[k].point;
            let away = m.log(p_star, p)?;
            let len = m.norm(&away);
            if len == 0.0 {
                return Err(invalid("row sits on the minimizer; direction undefined"));
            }
            out.records[k].point = m.exp(p_star, &away.scaled((len + delta) / len))?;
        }
        Fault::StepLength(add) => step_mut(&mut out, k)?.step_len += add,
        Fault::Theta(mult) => {
            let s = step_mut(&mut out, k)?;
            let th = s.theta.ok_or_else(|| invalid("row has no multiplier"))?;
            s.theta = Some(th * (1.0 + mult));
        }
        Fault::SubgradientNorm(mult) => {
            let s = step_mut(&mut out, k)?;
            let sn = s.s_norm.ok_or_else(|| invalid("row has no subgradient norm"))?;
            s.s_norm = Some(sn * (1.0 + mult));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::make_quadratic;
    use crate::solver::{run_gradient, run_rbppm, RadiusStrategy, SolverConfig};

    fn half_square_run() -> (ProblemInstance, Trace) {
        let p = make_quadratic(1, 1.0, 1.0, 0).unwrap();
        let cfg = SolverConfig {
            start: Some(Point::new(vec![5.0])),
            ..SolverConfig::exact()
        };
        let tr = run_rbppm(&p, &RadiusStrategy::fixed(2.0), &cfg, 0).unwrap();
        (p, tr)
    }

    #[test]
    fn hand_example_passes_everything() {
        let (p, tr) = half_square_run();
        let rep = evaluate(&tr, &p, DiagMode::Exact).unwrap();
        assert!(rep.passed(), "{}", rep.render_table());
        let names: Vec<&str> = rep.checks.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, CHECK_NAMES);
        // budget: 2*3 + 2*1 + 2*0 = 8 against f0 - f* = 12.5
        let b = rep.check(SUBGRADIENT_BUDGET).unwrap();
        assert!((b.worst_violation - (8.0 - 12.5)).abs() < 1e-9);
        assert_eq!(rep.check(DICHOTOMY).unwrap().status, CheckStatus::NotApplicable);
        assert_eq!(rep.check(FINITE_TERMINATION).unwrap().status, CheckStatus::Pass);
    }

    #[test]
    fn chain_slacks_match_hand_values() {
        let (_, tr) = half_square_run();
        let slacks = chain_multiplier_check(&tr);
        assert_eq!(slacks.len(), 1);
        assert!((slacks[0].1 - 2.0).abs() < 1e-9);
    }

    #[test]
    fn chain_on_single_step_is_empty() {
        let p = make_quadratic(1, 1.0, 1.0, 0).unwrap();
        let cfg = SolverConfig {
            start: Some(Point::new(vec![1.0])),
            ..SolverConfig::exact()
        };
        let tr = run_rbppm(&p, &RadiusStrategy::fixed(2.0), &cfg, 0).unwrap();
        assert_eq!(tr.outer_iterations(), 1);
        assert!(chain_multiplier_check(&tr).is_empty());
    }

    #[test]
    fn value_bump_reported_exactly() {
        let (p, tr) = half_square_run();
        let bad = inject_fault(&tr, &p, 2, Fault::ValueBump(0.25)).unwrap();
        let rep = evaluate(&bad, &p, DiagMode::Exact).unwrap();
        let c = rep.check(VALUE_MONOTONICITY).unwrap();
        assert_eq!(c.status, CheckStatus::Fail);
        assert!((c.worst_violation - 0.25).abs() < 1e-12);
        assert_eq!(c.iteration_of_worst, 2);
    }

    #[test]
    fn unknown_optimum_is_not_applicable() {
        use crate::objective::QuadraticSpec;
        let (p, tr) = half_square_run();
        let spec = QuadraticSpec::diagonal(&[1.0]).unwrap();
        let bare = ProblemInstance::new(*p.manifold(), std::sync::Arc::new(spec), "bare");
        let rep = evaluate(&tr, &bare, DiagMode::Exact).unwrap();
        for name in [DISTANCE_DROP, SUBGRADIENT_BUDGET, GEOMETRIC_DECAY, O1K_BOUND, FINITE_TERMINATION] {
            assert_eq!(rep.check(name).unwrap().status, CheckStatus::NotApplicable, "{name}");
        }
        assert_eq!(rep.check(VALUE_MONOTONICITY).unwrap().status, CheckStatus::Pass);
    }

    #[test]
    fn gradient_trace_gets_generic_checks_only() {
        let p = make_quadratic(2, 1.0, 10.0, 3).unwrap();
        let tr = run_gradient(&p, &SolverConfig::default(), 3).unwrap();
        let rep = evaluate(&tr, &p, DiagMode::Inexact).unwrap();
        assert_eq!(rep.check(VALUE_MONOTONICITY).unwrap().status, CheckStatus::Pass);
        assert_eq!(rep.check(STEP_LENGTH_IDENTITY).unwrap().status, CheckStatus::Pass);
        assert_eq!(rep.check(DISTANCE_DROP).unwrap().status, CheckStatus::NotApplicable);
    }

    #[test]
    fn malformed_traces_are_rejected() {
        let (p, tr) = half_square_run();
        let mut empty = tr.clone();
        empty.records.clear();
        assert!(evaluate(&empty, &p, DiagMode::Exact).is_err());
        let mut gap = tr.clone();
        gap.records.remove(1);
        assert!(evaluate(&gap, &p, DiagMode::Exact).is_err());
        let mut wrong_dim = tr;
        wrong_dim.records[1].point = Point::new(vec![1.0, 2.0]);
        assert!(evaluate(&wrong_dim, &p, DiagMode::Exact).is_err());
    }

    #[test]
    fn report_is_deterministic() {
        let (p, tr) = half_square_run();
        let a = evaluate(&tr, &p, DiagMode::Exact).unwrap().to_json().unwrap();
        let b = evaluate(&tr, &p, DiagMode::Exact).unwrap().to_json().unwrap();
        assert_eq!(a, b);
    }
}
