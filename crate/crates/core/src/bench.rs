//! Benchmark plans over the quadratic family, with CSV/JSON persistence,
//! Table-style text reports and 2-D trajectory files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{evaluate, DiagMode};
use crate::error::{invalid, Error, Result};
use crate::manifold::Manifold;
use crate::objective::{make_quadratic, ProblemInstance};
use crate::solver::{run_gradient, run_proximal, run_rbppm, OracleMode, RadiusStrategy, SolverConfig};
use crate::trace::{TerminalStatus, Trace};

pub const ROWS_CSV_SCHEMA: &str = "# rbppm-rows v1";
pub const ROWS_CSV_HEADER: &str =
    "n,algorithm,parameter,seed,status,outer_iters,inner_iters_total,f_evals,wall_time_seconds,final_f,final_grad_norm,theory_status";
pub const TRAJECTORY_CSV_SCHEMA: &str = "# rbppm-trajectory v1";
pub const TRAJECTORY_CSV_HEADER: &str = "phase,k,x1,x2,f";

pub const ALGORITHMS: [&str; 5] = ["broximal-f", "broximal-a", "broximal-p", "proximal", "gradient"];

/// One algorithm and its parameter (`t`, `alpha`, `beta` or `lambda`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSpec {
    pub algorithm: String,
    #[serde(default)]
    pub param: Option<f64>,
}

impl SolverSpec {
    pub fn new(algorithm: &str, param: Option<f64>) -> Self {
        SolverSpec {
            algorithm: algorithm.to_string(),
            param,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !ALGORITHMS.contains(&self.algorithm.as_str()) {
            return Err(invalid(format!(
                "unknown algorithm {:?}; expected one of {}",
                self.algorithm,
                ALGORITHMS.join(", ")
            )));
        }
        match (self.algorithm.as_str(), self.param) {
            ("gradient", None) => Ok(()),
            ("gradient", Some(_)) => Err(invalid("gradient takes no parameter")),
            (_, Some(p)) if p > 0.0 && p.is_finite() => Ok(()),
            (a, _) => Err(invalid(format!("{a} needs a positive parameter"))),
        }
    }

    /// Runs this solver; radius bands follow `cfg.eps_opt`.
    pub fn run(&self, problem: &ProblemInstance, cfg: &SolverConfig, seed: u64) -> Result<Trace> {
        let strategy = |s: RadiusStrategy| s.with_eps_opt(cfg.eps_opt);
        let p = self.param.unwrap_or(0.0);
        match self.algorithm.as_str() {
            "broximal-f" => run_rbppm(problem, &RadiusStrategy::fixed(p), cfg, seed),
            "broximal-a" => run_rbppm(problem, &strategy(RadiusStrategy::adaptive(p)), cfg, seed),
            "broximal-p" => run_rbppm(problem, &strategy(RadiusStrategy::polyak(p)), cfg, seed),
            "proximal" => run_proximal(problem, p, cfg, seed),
            "gradient" => run_gradient(problem, cfg, seed),
            other => Err(invalid(format!("unknown algorithm {other:?}"))),
        }
    }

    fn is_broximal(&self) -> bool {
        self.algorithm.starts_with("broximal")
    }
}

fn default_eig_lo() -> f64 {
    1.0
}

fn default_eig_hi() -> f64 {
    1000.0
}

fn default_max_outer() -> usize {
    100_000
}

fn default_oracle() -> OracleMode {
    OracleMode::Inexact
}

/// A benchmark plan; one JSON document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchPlan {
    pub dims: Vec<usize>,
    pub solvers: Vec<SolverSpec>,
    pub seeds: Vec<u64>,
    pub eps_opt: f64,
    pub output_dir: PathBuf,
    #[serde(default = "default_oracle")]
    pub oracle_mode: OracleMode,
    /// Parallel runs; all available cores when absent.
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default = "default_eig_lo")]
    pub eig_lo: f64,
    #[serde(default = "default_eig_hi")]
    pub eig_hi: f64,
    #[serde(default = "default_max_outer")]
    pub max_outer: usize,
}

impl BenchPlan {
    /// The full grid of the quadratic experiment: n = 100..1000, thirteen
    /// solver/parameter pairs, one seed per cell.
    pub fn standard(output_dir: impl Into<PathBuf>) -> Self {
        let mut solvers = Vec::new();
        for t in [0.05, 0.10, 0.50] {
            solvers.push(SolverSpec::new("broximal-f", Some(t)));
        }
        for a in [1e-4, 1e-3, 1e-2] {
            solvers.push(SolverSpec::new("broximal-a", Some(a)));
        }
        for b in [1e-3, 1e-2, 1e-1] {
            solvers.push(SolverSpec::new("broximal-p", Some(b)));
        }
        for l in [1e-3, 1e-1, 2.0] {
            solvers.push(SolverSpec::new("proximal", Some(l)));
        }
        solvers.push(SolverSpec::new("gradient", None));
        BenchPlan {
            dims: (1..=10).map(|i| 100 * i).collect(),
            solvers,
            seeds: vec![0],
            eps_opt: 1e-6,
            output_dir: output_dir.into(),
            oracle_mode: OracleMode::Inexact,
            workers: None,
            eig_lo: default_eig_lo(),
            eig_hi: default_eig_hi(),
            max_outer: default_max_outer(),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() || self.solvers.is_empty() || self.seeds.is_empty() {
            return Err(invalid("plan needs at least one dimension, solver and seed"));
        }
        if self.dims.contains(&0) {
            return Err(invalid("dimensions must be positive"));
        }
        if !(self.eps_opt > 0.0) {
            return Err(invalid("eps_opt must be positive"));
        }
        if self.workers == Some(0) {
            return Err(invalid("workers must be positive"));
        }
        if !(self.eig_lo > 0.0 && self.eig_lo <= self.eig_hi) {
            return Err(invalid("eigenvalue range must satisfy 0 < eig_lo <= eig_hi"));
        }
        for s in &self.solvers {
            s.validate()?;
        }
        Ok(())
    }

    /// Cells in plan order: dims, then solvers, then seeds.
    pub fn cells(&self) -> Vec<(usize, SolverSpec, u64)> {
        let mut out = Vec::new();
        for &n in &self.dims {
            for s in &self.solvers {
                for &seed in &self.seeds {
                    out.push((n, s.clone(), seed));
                }
            }
        }
        out
    }

    fn solver_config(&self, spec: &SolverSpec) -> SolverConfig {
        SolverConfig {
            eps_opt: self.eps_opt,
            max_outer: self.max_outer,
            oracle: if spec.is_broximal() {
                self.oracle_mode
            } else {
                OracleMode::Inexact
            },
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub algorithm: String,
    pub parameter: Option<f64>,
    pub seed: u64,
    /// Terminal status, or `error` when the run could not complete.
    pub status: String,
    pub outer_iters: usize,
    pub inner_iters_total: usize,
    pub f_evals: u64,
    pub wall_time_seconds: f64,
    /// NaN (stored as JSON null) for rows that errored.
    #[serde(with = "nan_as_null")]
    pub final_f: f64,
    #[serde(with = "nan_as_null")]
    pub final_grad_norm: f64,
    /// `pass`, `fail`, `n/a` or `error`.
    pub theory_status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

impl BenchRow {
    pub fn converged(&self) -> bool {
        self.status == "converged"
    }

    fn failed(n: usize, spec: &SolverSpec, seed: u64, err: &Error) -> Self {
        BenchRow {
            n,
            algorithm: spec.algorithm.clone(),
            parameter: spec.param,
            seed,
            status: "error".into(),
            outer_iters: 0,
            inner_iters_total: 0,
            f_evals: 0,
            wall_time_seconds: 0.0,
            final_f: f64::NAN,
            final_grad_norm: f64::NAN,
            theory_status: "error".into(),
            error: Some(err.to_string()),
        }
    }
}

fn status_name(s: TerminalStatus) -> &'static str {
    match s {
        TerminalStatus::Converged => "converged",
        TerminalStatus::MaxOuter => "max_outer",
        TerminalStatus::Stagnated => "stagnated",
    }
}

/// File stem for a cell's trace, e.g. `n100_broximal-a_0.01_s0`.
pub fn trace_stem(n: usize, spec: &SolverSpec, seed: u64) -> String {
    match spec.param {
        Some(p) => format!("n{n}_{}_{p}_s{seed}", spec.algorithm),
        None => format!("n{n}_{}_s{seed}", spec.algorithm),
    }
}

/// Runs a single cell and returns its trace and row. Diagnostics run in the
/// mode matching the oracle that produced the trace.
pub fn run_cell(plan: &BenchPlan, n: usize, spec: &SolverSpec, seed: u64) -> Result<(Trace, BenchRow)> {
    spec.validate()?;
    let problem = make_quadratic(n, plan.eig_lo, plan.eig_hi, seed)?;
    let cfg = plan.solver_config(spec);
    let start = Instant::now();
    let trace = spec.run(&problem, &cfg, seed)?;
    let wall = start.elapsed().as_secs_f64();
    let mode = match cfg.oracle {
        OracleMode::Exact => DiagMode::Exact,
        OracleMode::Inexact => DiagMode::Inexact,
    };
    let theory = match evaluate(&trace, &problem, mode) {
        Ok(r) => r.summary().to_string(),
        Err(_) => "error".to_string(),
    };
    let last = trace.last().expect("traces always hold the final iterate");
    let row = BenchRow {
        n,
        algorithm: spec.algorithm.clone(),
        parameter: spec.param,
        seed,
        status: status_name(trace.status).into(),
        outer_iters: trace.outer_iterations(),
        inner_iters_total: trace.inner_iterations(),
        f_evals: trace.f_evals(),
        wall_time_seconds: wall,
        final_f: last.f,
        final_grad_norm: last.grad_norm,
        theory_status: theory,
        error: None,
    };
    Ok((trace, row))
}

fn check_writable(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir.join("traces"))?;
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"")?;
    fs::remove_file(&probe)?;
    Ok(())
}

/// Runs every cell of the plan, persisting one trace CSV and JSON per cell
/// plus `rows.csv` and `rows.json`. Rows come back in plan order. A failing
/// cell is recorded in its row and does not stop the plan.
pub fn run_plan(plan: &BenchPlan) -> Result<Vec<BenchRow>> {
    plan.validate()?;
    check_writable(&plan.output_dir)?;
    let traces_dir = plan.output_dir.join("traces");
    let cells = plan.cells();
    let work = || -> Vec<BenchRow> {
        cells
            .par_iter()
            .map(|(n, spec, seed)| {
                let stem = trace_stem(*n, spec, *seed);
                let persisted = run_cell(plan, *n, spec, *seed).and_then(|(trace, row)| {
                    fs::write(traces_dir.join(format!("{stem}.csv")), trace.to_csv())?;
                    fs::write(traces_dir.join(format!("{stem}.json")), trace.to_json()?)?;
                    Ok(row)
                });
                persisted.unwrap_or_else(|e| BenchRow::failed(*n, spec, *seed, &e))
            })
            .collect()
    };
    let rows = match plan.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| invalid(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    write_rows(&plan.output_dir, &rows)?;
    Ok(rows)
}

fn opt_num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn rows_to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{ROWS_CSV_SCHEMA}");
    let _ = writeln!(out, "{ROWS_CSV_HEADER}");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.algorithm,
            opt_num(r.parameter),
            r.seed,
            r.status,
            r.outer_iters,
            r.inner_iters_total,
            r.f_evals,
            r.wall_time_seconds,
            r.final_f,
            r.final_grad_norm,
            r.theory_status
        );
    }
    out
}

pub fn write_rows(dir: &Path, rows: &[BenchRow]) -> Result<()> {
    fs::write(dir.join("rows.csv"), rows_to_csv(rows))?;
    fs::write(dir.join("rows.json"), serde_json::to_string_pretty(rows)?)?;
    Ok(())
}

/// Reads `rows.json` from a results directory.
pub fn read_rows(dir: &Path) -> Result<Vec<BenchRow>> {
    let text = fs::read_to_string(dir.join("rows.json"))?;
    Ok(serde_json::from_str(&text)?)
}

fn param_label(r: &BenchRow) -> String {
    r.parameter.map(|p| format!("{p}")).unwrap_or_else(|| "--".into())
}

/// Fixed-width table grouped by `n`. Within each group an asterisk marks
/// every row attaining the smallest `#f` and every row attaining the
/// smallest time.
pub fn emit_table(rows: &[BenchRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(invalid("no rows to tabulate"));
    }
    let mut dims: Vec<usize> = rows.iter().map(|r| r.n).collect();
    dims.sort_unstable();
    dims.dedup();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>5}  {:<11} {:>8} {:>16} {:>10} {:>9}  {:<9}",
        "n", "Alg.", "Param.", "Outer(Inner)", "#f", "time", "status"
    );
    for n in dims {
        let group: Vec<&BenchRow> = rows.iter().filter(|r| r.n == n).collect();
        let ok = |r: &BenchRow| r.status != "error";
        let min_f = group.iter().filter(|r| ok(r)).map(|r| r.f_evals).min();
        let min_t = group
            .iter()
            .filter(|r| ok(r))
            .map(|r| r.wall_time_seconds)
            .fold(f64::INFINITY, f64::min);
        let _ = writeln!(out, "{}", "-".repeat(76));
        for r in group {
            let outer = if r.algorithm == "gradient" {
                format!("{}", r.outer_iters)
            } else {
                format!("{}({})", r.outer_iters, r.inner_iters_total)
            };
            let fmark = if ok(r) && Some(r.f_evals) == min_f { "*" } else { " " };
            let tmark = if ok(r) && r.wall_time_seconds == min_t { "*" } else { " " };
            let _ = writeln!(
                out,
                "{:>5}  {:<11} {:>8} {:>16} {:>9}{} {:>8.3}{}  {:<9}",
                r.n,
                r.algorithm,
                param_label(r),
                outer,
                r.f_evals,
                fmark,
                r.wall_time_seconds,
                tmark,
                r.status
            );
        }
    }
    Ok(out)
}

/// Per-`n` ratio of the smallest ball-proximal `#f` to the gradient
/// method's `#f`, for every `n` where both are present.
pub fn best_broximal_ratio(rows: &[BenchRow]) -> Vec<(usize, f64)> {
    let mut dims: Vec<usize> = rows.iter().map(|r| r.n).collect();
    dims.sort_unstable();
    dims.dedup();
    dims.into_iter()
        .filter_map(|n| {
            let group = rows.iter().filter(|r| r.n == n && r.status != "error");
            let (mut best, mut grad) = (None::<u64>, None::<u64>);
            for r in group {
                if r.algorithm.starts_with("broximal") {
                    best = Some(best.map_or(r.f_evals, |b| b.min(r.f_evals)));
                } else if r.algorithm == "gradient" {
                    grad = Some(r.f_evals);
                }
            }
            Some((n, best? as f64 / grad? as f64))
        })
        .collect()
}

/// One row of a trajectory file.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub outer: bool,
    pub k: usize,
    pub x1: f64,
    pub x2: f64,
    pub f: f64,
}

/// Outer iterates of a 2-D Euclidean trace interleaved with the inner
/// iterates recorded for each outer step.
pub fn emit_trajectory(trace: &Trace) -> Result<String> {
    let Some(first) = trace.records.first() else {
        return Err(invalid("trace has no records"));
    };
    let planar = match &trace.problem_spec {
        Some(crate::objective::ProblemSpec::Quadratic { dim, .. }) => *dim == 2,
        Some(crate::objective::ProblemSpec::DiagonalQuadratic { eigenvalues }) => eigenvalues.len() == 2,
        Some(crate::objective::ProblemSpec::FrechetMean { manifold, .. }) => {
            *manifold == Manifold::Euclidean(2)
        }
        None => first.point.len() == 2,
    };
    if !planar || trace.records.iter().any(|r| r.point.len() != 2) {
        return Err(invalid("trajectories are only defined for 2-D Euclidean traces"));
    }
    let mut out = String::new();
    let _ = writeln!(out, "{TRAJECTORY_CSV_SCHEMA}");
    let _ = writeln!(out, "{TRAJECTORY_CSV_HEADER}");
    let mut inner = trace.inner_points.iter().peekable();
    for r in &trace.records {
        let _ = writeln!(out, "outer,{},{},{},{}", r.k, r.point.0[0], r.point.0[1], r.f);
        while let Some(p) = inner.next_if(|p| p.k == r.k) {
            if p.point.len() != 2 {
                return Err(invalid("inner point is not 2-D"));
            }
            let _ = writeln!(out, "inner,{},{},{},{}", p.k, p.point.0[0], p.point.0[1], p.f);
        }
    }
    Ok(out)
}

pub fn parse_trajectory(text: &str) -> Result<Vec<TrajectoryRow>> {
    let mut rows = Vec::new();
    let mut header = false;
    for (i, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if !header {
            if line != TRAJECTORY_CSV_HEADER {
                return Err(Error::Parse(format!("unexpected header {line:?}")));
            }
            header = true;
            continue;
        }
        let bad = || Error::Parse(format!("line {}: malformed trajectory row", i + 1));
        let c: Vec<&str> = line.split(',').collect();
        if c.len() != 5 {
            return Err(bad());
        }
        let outer = match c[0] {
            "outer" => true,
            "inner" => false,
            _ => return Err(bad()),
        };
        rows.push(TrajectoryRow {
            outer,
            k: c[1].parse().map_err(|_| bad())?,
            x1: c[2].parse().map_err(|_| bad())?,
            x2: c[3].parse().map_err(|_| bad())?,
            f: c[4].parse().map_err(|_| bad())?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(n: usize, alg: &str, f: u64, t: f64) -> BenchRow {
        BenchRow {
            n,
            algorithm: alg.into(),
            parameter: None,
            seed: 0,
            status: "converged".into(),
            outer_iters: 1,
            inner_iters_total: 1,
            f_evals: f,
            wall_time_seconds: t,
            final_f: 0.0,
            final_grad_norm: 0.0,
            theory_status: "pass".into(),
            error: None,
        }
    }

    #[test]
    fn standard_plan_has_130_cells() {
        let plan = BenchPlan::standard("out");
        plan.validate().unwrap();
        assert_eq!(plan.cells().len(), 130);
    }

    #[test]
    fn plan_validation() {
        let mut plan = BenchPlan::standard("out");
        plan.solvers.clear();
        assert!(plan.validate().is_err());
        let mut plan = BenchPlan::standard("out");
        plan.solvers.push(SolverSpec::new("newton", Some(1.0)));
        assert!(plan.validate().is_err());
        let mut plan = BenchPlan::standard("out");
        plan.solvers.push(SolverSpec::new("proximal", None));
        assert!(plan.validate().is_err());
    }

    #[test]
    fn plan_json_round_trip_with_defaults() {
        let text = r#"{"dims":[3],"solvers":[{"algorithm":"gradient"}],"seeds":[1],"eps_opt":1e-6,"output_dir":"x"}"#;
        let plan = BenchPlan::from_json(text).unwrap();
        assert_eq!(plan.max_outer, 100_000);
        assert_eq!(plan.oracle_mode, OracleMode::Inexact);
        assert_eq!(BenchPlan::from_json(&plan.to_json().unwrap()).unwrap(), plan);
    }

    #[test]
    fn single_row_gets_both_markers() {
        let t = emit_table(&[row(100, "gradient", 10, 0.5)]).unwrap();
        let line = t.lines().find(|l| l.contains("gradient")).unwrap();
        assert_eq!(line.matches('*').count(), 2);
    }

    #[test]
    fn ties_mark_every_minimizer() {
        let rows = [row(100, "broximal-f", 10, 0.5), row(100, "gradient", 10, 0.7)];
        let t = emit_table(&rows).unwrap();
        for alg in ["broximal-f", "gradient"] {
            let line = t.lines().find(|l| l.contains(alg)).unwrap();
            assert!(line.contains("10*"), "{line}");
        }
        assert!(emit_table(&[]).is_err());
    }

    #[test]
    fn error_rows_survive_json() {
        let spec = SolverSpec::new("gradient", None);
        let r = BenchRow::failed(5, &spec, 2, &invalid("boom"));
        let text = serde_json::to_string(&vec![r]).unwrap();
        let back: Vec<BenchRow> = serde_json::from_str(&text).unwrap();
        assert!(back[0].final_f.is_nan());
        assert_eq!(back[0].error.as_deref(), Some("rejected input: boom"));
    }

    #[test]
    fn ratio_uses_best_broximal() {
        let rows = [
            row(100, "broximal-f", 30, 0.0),
            row(100, "broximal-a", 20, 0.0),
            row(100, "proximal", 5, 0.0),
            row(100, "gradient", 40, 0.0),
            row(200, "broximal-f", 30, 0.0),
        ];
        assert_eq!(best_broximal_ratio(&rows), vec![(100, 0.5)]);
    }
}
