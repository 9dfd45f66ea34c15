//! Browser demo bindings. Each exported function takes plain numbers and
//! returns a JSON document that the page draws on a canvas. The `*_json`
//! functions are ordinary Rust and are what the native tests exercise.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use rbppm::bench::SolverSpec;
use rbppm::{
    exact_quadratic_ball_oracle, make_diagonal_quadratic, make_frechet_mean, solve_ball_pg, InnerSolverConfig,
    Manifold, OracleMode, Point, RadiusStrategy, SolverConfig,
};

#[derive(Serialize)]
struct TrajectoryOut {
    label: String,
    status: String,
    outer_iterations: usize,
    f_evals: u64,
    /// `[x1, x2, f]` per outer iterate.
    outer: Vec<[f64; 3]>,
    /// `[k, x1, x2]` per inner iterate.
    inner: Vec<[f64; 3]>,
}

/// Runs one solver on `0.5 (l1 x^2 + l2 y^2)` from `(x0, y0)`.
pub fn trajectory_json(
    l1: f64,
    l2: f64,
    x0: f64,
    y0: f64,
    algorithm: &str,
    param: Option<f64>,
    max_outer: usize,
) -> Result<String, String> {
    let problem = make_diagonal_quadratic(&[l1, l2]).map_err(|e| e.to_string())?;
    let solver = SolverSpec::new(algorithm, param);
    solver.validate().map_err(|e| e.to_string())?;
    let cfg = SolverConfig {
        max_outer,
        record_inner_points: true,
        start: Some(Point::new(vec![x0, y0])),
        ..Default::default()
    };
    let trace = solver.run(&problem, &cfg, 0).map_err(|e| e.to_string())?;
    let out = TrajectoryOut {
        label: trace.method.label(),
        status: format!("{:?}", trace.status),
        outer_iterations: trace.outer_iterations(),
        f_evals: trace.f_evals(),
        outer: trace.records.iter().map(|r| [r.point.0[0], r.point.0[1], r.f]).collect(),
        inner: trace
            .inner_points
            .iter()
            .map(|p| [p.k as f64, p.point.0[0], p.point.0[1]])
            .collect(),
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct BallPoint {
    x: f64,
    y: f64,
    f: f64,
    theta: f64,
    active: bool,
}

#[derive(Serialize)]
struct BallStepOut {
    exact: BallPoint,
    pg: BallPoint,
    pg_iterations: usize,
    pg_path: Vec<[f64; 2]>,
    /// Distance between the two solutions.
    gap: f64,
}

/// One ball subproblem on `0.5 (l1 x^2 + l2 y^2)` with center `(cx, cy)`
/// and radius `t`, solved exactly and by projected gradient.
pub fn ball_step_json(l1: f64, l2: f64, cx: f64, cy: f64, t: f64) -> Result<String, String> {
    let problem = make_diagonal_quadratic(&[l1, l2]).map_err(|e| e.to_string())?;
    let spec = problem.quadratic().expect("diagonal quadratic");
    let center = Point::new(vec![cx, cy]);
    let exact = exact_quadratic_ball_oracle(spec, &center, t).map_err(|e| e.to_string())?;
    let cfg = InnerSolverConfig {
        record_path: true,
        ..Default::default()
    };
    let pg = solve_ball_pg(&problem, &center, t, &cfg).map_err(|e| e.to_string())?;
    let point = |r: &rbppm::BroxResult| BallPoint {
        x: r.point.0[0],
        y: r.point.0[1],
        f: r.f_value,
        theta: r.multiplier_theta,
        active: r.active,
    };
    let out = BallStepOut {
        gap: (&exact.point.0 - &pg.point.0).norm(),
        exact: point(&exact),
        pg: point(&pg),
        pg_iterations: pg.inner_iterations,
        pg_path: pg.path.iter().map(|(p, _)| [p.0[0], p.0[1]]).collect(),
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

/// Poincaré disk point to hyperboloid coordinates.
fn from_disk(u: f64, v: f64) -> Result<Point, String> {
    let r2 = u * u + v * v;
    if !(r2 < 1.0) {
        return Err(format!("({u}, {v}) is outside the unit disk"));
    }
    let s = 1.0 - r2;
    Ok(Point::new(vec![(1.0 + r2) / s, 2.0 * u / s, 2.0 * v / s]))
}

fn to_disk(p: &Point) -> [f64; 2] {
    let x = &p.0;
    [x[1] / (1.0 + x[0]), x[2] / (1.0 + x[0])]
}

#[derive(Serialize)]
struct FrechetOut {
    status: String,
    outer_iterations: usize,
    /// Iterates in disk coordinates.
    path: Vec<[f64; 2]>,
    radii: Vec<f64>,
    /// Samples of the geodesic between the anchors.
    geodesic: Vec<[f64; 2]>,
    midpoint: [f64; 2],
    /// Hyperbolic distance from the last iterate to the midpoint.
    error: f64,
}

/// Fréchet mean of two equally weighted anchors on the hyperbolic plane,
/// given and returned in Poincaré disk coordinates. The run starts at the
/// disk point `(sx, sy)` and uses the adaptive radius `alpha * |grad f|`.
pub fn frechet_path_json(ax: f64, ay: f64, bx: f64, by: f64, sx: f64, sy: f64, alpha: f64) -> Result<String, String> {
    let m = Manifold::hyperboloid(2).map_err(|e| e.to_string())?;
    let a = from_disk(ax, ay)?;
    let b = from_disk(bx, by)?;
    let problem = make_frechet_mean(m, &[a.clone(), b.clone()], &[0.5, 0.5]).map_err(|e| e.to_string())?;
    let cfg = SolverConfig {
        oracle: OracleMode::Inexact,
        start: Some(from_disk(sx, sy)?),
        max_outer: 10_000,
        ..Default::default()
    };
    let trace = rbppm::run_rbppm(&problem, &RadiusStrategy::adaptive(alpha), &cfg, 0).map_err(|e| e.to_string())?;
    let mid = problem.p_star().cloned().ok_or("midpoint unavailable")?;
    let geodesic = (0..=64)
        .map(|i| m.geodesic_point(&a, &b, i as f64 / 64.0).map(|p| to_disk(&p)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let last = trace.last().expect("nonempty trace");
    let out = FrechetOut {
        status: format!("{:?}", trace.status),
        outer_iterations: trace.outer_iterations(),
        path: trace.points().map(to_disk).collect(),
        radii: trace.records.iter().filter_map(|r| r.step.as_ref()?.t).collect(),
        geodesic,
        midpoint: to_disk(&mid),
        error: m.distance(&last.point, &mid).map_err(|e| e.to_string())?,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

/// `param` is ignored for `gradient`; pass any number.
#[wasm_bindgen]
pub fn trajectory(l1: f64, l2: f64, x0: f64, y0: f64, algorithm: &str, param: f64) -> Result<String, JsValue> {
    let param = (algorithm != "gradient").then_some(param);
    js(trajectory_json(l1, l2, x0, y0, algorithm, param, 20_000))
}

#[wasm_bindgen]
pub fn ball_step(l1: f64, l2: f64, cx: f64, cy: f64, t: f64) -> Result<String, JsValue> {
    js(ball_step_json(l1, l2, cx, cy, t))
}

#[wasm_bindgen]
pub fn frechet_path(ax: f64, ay: f64, bx: f64, by: f64, sx: f64, sy: f64, alpha: f64) -> Result<String, JsValue> {
    js(frechet_path_json(ax, ay, bx, by, sx, sy, alpha))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_round_trip() {
        let p = from_disk(0.3, -0.4).unwrap();
        let q = to_disk(&p);
        assert!((q[0] - 0.3).abs() < 1e-12 && (q[1] + 0.4).abs() < 1e-12);
        assert!(from_disk(0.8, 0.8).is_err());
    }
}
