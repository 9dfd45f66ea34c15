//! Per-iteration run logs and their CSV / JSON forms.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::Point;
use crate::objective::ProblemSpec;
use crate::solver::{Method, OracleMode};

/// Schema line written at the top of every trace CSV.
pub const TRACE_CSV_SCHEMA: &str = "# rbppm-trace v1";
pub const TRACE_CSV_HEADER: &str = "k,t_k,f,grad_norm,theta,s_norm,step_len,inner_iters,f_evals";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalStatus {
    Converged,
    MaxOuter,
    /// The iterate stopped moving at a nonstationary point.
    Stagnated,
}

/// The step taken from iterate `k` to iterate `k + 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Ball radius (ball-proximal runs only).
    pub t: Option<f64>,
    pub theta: Option<f64>,
    /// `theta * d(p_k, p_{k+1})`, the norm of the recovered subgradient.
    pub s_norm: Option<f64>,
    pub step_len: f64,
    pub inner_iters: usize,
    pub inner_tol: Option<f64>,
    /// The subproblem solution was on the sphere.
    pub active: Option<bool>,
    pub inner_converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub k: usize,
    pub point: Point,
    pub f: f64,
    pub grad_norm: f64,
    /// Objective evaluations spent up to and including reaching this iterate.
    pub f_evals: u64,
    pub step: Option<StepRecord>,
}

/// An inner-solver iterate, tagged with the outer step it belongs to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InnerPoint {
    pub k: usize,
    pub point: Point,
    pub f: f64,
}

/// Resolved run configuration, stored alongside the iterations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub version: String,
    pub seed: u64,
    pub eps_opt: f64,
    pub max_outer: usize,
    pub oracle_mode: OracleMode,
    pub armijo_c: f64,
    pub backtrack_factor: f64,
    pub max_inner: usize,
    pub initial_step: crate::linesearch::StepPolicy,
    pub inner_tol_rule: String,
    pub generator_note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub problem_label: String,
    pub problem_spec: Option<ProblemSpec>,
    pub method: Method,
    pub status: TerminalStatus,
    pub meta: RunMeta,
    pub records: Vec<IterRecord>,
    #[serde(default)]
    pub inner_points: Vec<InnerPoint>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl Trace {
    pub fn outer_iterations(&self) -> usize {
        self.records.iter().filter(|r| r.step.is_some()).count()
    }

    pub fn inner_iterations(&self) -> usize {
        self.records
            .iter()
            .filter_map(|r| r.step.as_ref())
            .map(|s| s.inner_iters)
            .sum()
    }

    pub fn f_evals(&self) -> u64 {
        self.records.last().map_or(0, |r| r.f_evals)
    }

    pub fn last(&self) -> Option<&IterRecord> {
        self.records.last()
    }

    pub fn points(&self) -> impl Iterator<Item = &Point> {
        self.records.iter().map(|r| &r.point)
    }

    /// One row per iterate in the fixed column order of [`TRACE_CSV_HEADER`].
    /// Step fields are empty on the final row and for methods that lack them.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{TRACE_CSV_SCHEMA}");
        let _ = writeln!(out, "{TRACE_CSV_HEADER}");
        for r in &self.records {
            let (t, theta, s, len, inner) = match &r.step {
                Some(s) => (
                    opt(s.t),
                    opt(s.theta),
                    opt(s.s_norm),
                    s.step_len.to_string(),
                    s.inner_iters.to_string(),
                ),
                None => Default::default(),
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.k, t, r.f, r.grad_norm, theta, s, len, inner, r.f_evals
            );
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Trace> {
        serde_json::from_str(s).map_err(Error::from)
    }
}

/// A row of a trace CSV read back from disk.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceCsvRow {
    pub k: usize,
    pub t: Option<f64>,
    pub f: f64,
    pub grad_norm: f64,
    pub theta: Option<f64>,
    pub s_norm: Option<f64>,
    pub step_len: Option<f64>,
    pub inner_iters: Option<usize>,
    pub f_evals: u64,
}

pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceCsvRow>> {
    fn field<T: std::str::FromStr>(s: &str, line: usize) -> Result<Option<T>> {
        if s.is_empty() {
            return Ok(None);
        }
        s.parse()
            .map(Some)
            .map_err(|_| Error::Parse(format!("line {line}: bad field {s:?}")))
    }
    fn req<T>(v: Option<T>, line: usize) -> Result<T> {
        v.ok_or_else(|| Error::Parse(format!("line {line}: missing required field")))
    }
    let mut rows = Vec::new();
    let mut header_seen = false;
    for (i, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if !header_seen {
            if line != TRACE_CSV_HEADER {
                return Err(Error::Parse(format!("unexpected header {line:?}")));
            }
            header_seen = true;
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 9 {
            return Err(Error::Parse(format!("line {}: expected 9 columns", i + 1)));
        }
        let n = i + 1;
        rows.push(TraceCsvRow {
            k: req(field(cols[0], n)?, n)?,
            t: field(cols[1], n)?,
            f: req(field(cols[2], n)?, n)?,
            grad_norm: req(field(cols[3], n)?, n)?,
            theta: field(cols[4], n)?,
            s_norm: field(cols[5], n)?,
            step_len: field(cols[6], n)?,
            inner_iters: field(cols[7], n)?,
            f_evals: req(field(cols[8], n)?, n)?,
        });
    }
    Ok(rows)
}
