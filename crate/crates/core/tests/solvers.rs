use rbppm::bench::{read_rows, run_plan, BenchPlan, SolverSpec};
use rbppm::diagnostics::{evaluate, DiagMode};
use rbppm::{
    estimate_multiplier, exact_quadratic_ball_oracle, initial_point, kkt_residual, make_diagonal_quadratic,
    make_frechet_mean, make_quadratic, run_gradient, run_proximal, run_rbppm, solve_ball_pg, InnerSolverConfig,
    Manifold, Point, RadiusStrategy, SolverConfig, TerminalStatus,
};

fn lift(spatial: &[f64]) -> Point {
    let s: f64 = spatial.iter().map(|v| v * v).sum();
    let mut x = vec![(1.0 + s).sqrt()];
    x.extend_from_slice(spatial);
    Point::new(x)
}

#[test]
fn exact_oracle_is_the_ball_constrained_minimizer_in_1d() {
    // 0.5 * a x^2 over [c - t, c + t] is minimized at the endpoint nearest 0.
    let problem = make_diagonal_quadratic(&[3.0]).unwrap();
    let spec = problem.quadratic().unwrap();
    let r = exact_quadratic_ball_oracle(spec, &Point::new(vec![2.0]), 0.5).unwrap();
    assert!((r.point.0[0] - 1.5).abs() < 1e-12);
    // gradient 4.5 = theta * (c - x) = theta * 0.5
    assert!((r.multiplier_theta - 9.0).abs() < 1e-9);
    assert!(r.active && r.kkt_residual < 1e-9);
    let inside = exact_quadratic_ball_oracle(spec, &Point::new(vec![0.2]), 0.5).unwrap();
    assert_eq!(inside.point.0[0], 0.0);
    assert_eq!(inside.multiplier_theta, 0.0);
}

#[test]
fn multiplier_and_kkt_agree_between_solvers() {
    for seed in 0..10 {
        let problem = make_quadratic(3, 1.0, 50.0, seed).unwrap();
        let c = initial_point(&problem, seed);
        let exact = exact_quadratic_ball_oracle(problem.quadratic().unwrap(), &c, 0.7).unwrap();
        let pg = solve_ball_pg(&problem, &c, 0.7, &InnerSolverConfig::default()).unwrap();
        // Armijo can stall a hair above 1e-8 once the decrease drops below
        // the rounding of f, so check the residual with a little headroom.
        assert!(pg.pg_residual < 1e-7, "{}", pg.pg_residual);
        assert!((&pg.point.0 - &exact.point.0).norm() < 1e-7);
        let theta = estimate_multiplier(&problem, &c, &pg.point, 0.7).unwrap();
        assert!((theta - exact.multiplier_theta).abs() <= 1e-4 * (1.0 + exact.multiplier_theta));
        assert!(kkt_residual(&problem, &c, &exact.point, 0.7, exact.multiplier_theta).unwrap() < 1e-8);
    }
}

#[test]
fn ball_solvers_reject_bad_radius() {
    let problem = make_quadratic(2, 1.0, 10.0, 0).unwrap();
    let c = Point::new(vec![1.0, 1.0]);
    for t in [0.0, -1.0, f64::NAN, f64::INFINITY] {
        assert!(solve_ball_pg(&problem, &c, t, &InnerSolverConfig::default()).is_err());
        assert!(exact_quadratic_ball_oracle(problem.quadratic().unwrap(), &c, t).is_err());
    }
    assert!(kkt_residual(&problem, &c, &c, 1.0, -1.0).is_err());
}

#[test]
fn exact_and_inexact_runs_pass_their_diagnostics() {
    for (n, seed) in [(1, 0), (2, 1), (5, 2)] {
        let problem = make_quadratic(n, 1.0, 100.0, seed).unwrap();
        for strategy in [
            RadiusStrategy::fixed(0.5),
            RadiusStrategy::adaptive(0.05),
            RadiusStrategy::polyak(0.5),
        ] {
            let exact = run_rbppm(&problem, &strategy, &SolverConfig::exact(), seed).unwrap();
            let inexact = run_rbppm(&problem, &strategy, &SolverConfig::default(), seed).unwrap();
            for (trace, mode) in [(&exact, DiagMode::Exact), (&inexact, DiagMode::Inexact)] {
                assert_eq!(trace.status, TerminalStatus::Converged);
                let report = evaluate(trace, &problem, mode).unwrap();
                assert!(report.passed(), "{}", report.render_table());
            }
        }
    }
}

#[test]
fn divergent_radii_reach_the_dichotomy_gap() {
    let problem = make_quadratic(2, 1.0, 1000.0, 0).unwrap();
    let strategy = RadiusStrategy::diminishing(0.5, 0.5);
    let trace = run_rbppm(&problem, &strategy, &SolverConfig::exact(), 0).unwrap();
    let best = trace.records.iter().map(|r| r.f).fold(f64::INFINITY, f64::min);
    assert!(best <= 1e-4, "{best}");
}

#[test]
fn smaller_proximal_weight_means_fewer_outer_steps() {
    let problem = make_quadratic(20, 1.0, 1000.0, 0).unwrap();
    let outer: Vec<usize> = [1e-3, 1e-1, 1.0, 10.0]
        .iter()
        .map(|&l| run_proximal(&problem, l, &SolverConfig::default(), 0).unwrap().outer_iterations())
        .collect();
    assert!(outer.windows(2).all(|w| w[0] <= w[1]), "{outer:?}");
}

#[test]
fn tiny_adaptive_radius_matches_reference_scale() {
    // Reference at n = 100: 501 outer iterations for alpha = 1e-4.
    let problem = make_quadratic(100, 1.0, 1000.0, 0).unwrap();
    let trace = SolverSpec::new("broximal-a", Some(1e-4))
        .run(&problem, &SolverConfig::default(), 0)
        .unwrap();
    assert_eq!(trace.status, TerminalStatus::Converged);
    let k = trace.outer_iterations() as f64;
    assert!((250.0..=1002.0).contains(&k), "{k}");
}

#[test]
fn gradient_cost_matches_reference_scale() {
    // Reference at n = 100: 50343 evaluations.
    let problem = make_quadratic(100, 1.0, 1000.0, 0).unwrap();
    let trace = run_gradient(&problem, &SolverConfig::default(), 0).unwrap();
    assert_eq!(trace.status, TerminalStatus::Converged);
    let f = trace.f_evals() as f64;
    assert!((50343.0 / 2.0..=50343.0 * 2.0).contains(&f), "{f}");
}

#[test]
fn hyperboloid_frechet_mean_for_every_method() {
    let m = Manifold::hyperboloid(2).unwrap();
    let anchors = [lift(&[1.5, 0.3]), lift(&[-0.4, -1.2])];
    let problem = make_frechet_mean(m, &anchors, &[0.5, 0.5]).unwrap();
    let mid = problem.p_star().unwrap().clone();
    let cfg = SolverConfig {
        start: Some(lift(&[2.0, -2.0])),
        ..Default::default()
    };
    let traces = [
        run_rbppm(&problem, &RadiusStrategy::adaptive(0.5), &cfg, 0).unwrap(),
        run_rbppm(&problem, &RadiusStrategy::fixed(0.3), &cfg, 0).unwrap(),
        run_proximal(&problem, 0.1, &cfg, 0).unwrap(),
        run_gradient(&problem, &cfg, 0).unwrap(),
    ];
    for trace in &traces {
        assert_eq!(trace.status, TerminalStatus::Converged, "{}", trace.method.label());
        let last = trace.last().unwrap();
        assert!(m.distance(&last.point, &mid).unwrap() < 1e-6, "{}", trace.method.label());
        let report = evaluate(trace, &problem, DiagMode::Inexact).unwrap();
        assert!(report.passed(), "{}", report.render_table());
    }
}

#[test]
fn exact_mode_needs_a_quadratic() {
    let m = Manifold::euclidean(2).unwrap();
    let problem = make_frechet_mean(m, &[Point::new(vec![1.0, 0.0])], &[1.0]).unwrap();
    assert!(run_rbppm(&problem, &RadiusStrategy::fixed(1.0), &SolverConfig::exact(), 0).is_err());
}

#[test]
fn invalid_solver_settings_are_rejected() {
    let problem = make_quadratic(2, 1.0, 10.0, 0).unwrap();
    let cfg = SolverConfig::default();
    assert!(run_rbppm(&problem, &RadiusStrategy::fixed(-1.0), &cfg, 0).is_err());
    assert!(run_proximal(&problem, 0.0, &cfg, 0).is_err());
    let bad = SolverConfig {
        eps_opt: 0.0,
        ..Default::default()
    };
    assert!(run_gradient(&problem, &bad, 0).is_err());
    assert!(SolverSpec::new("newton", None).validate().is_err());
    assert!(SolverSpec::new("broximal-f", None).validate().is_err());
}

#[test]
fn single_cell_plan_writes_consistent_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let mut plan = BenchPlan::standard(dir.path().join("out"));
    plan.dims = vec![8];
    plan.solvers = vec![SolverSpec::new("broximal-p", Some(1.0))];
    let rows = run_plan(&plan).unwrap();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].converged());
    assert_eq!(rows[0].theory_status, "pass");
    assert_eq!(read_rows(&plan.output_dir).unwrap()[0].f_evals, rows[0].f_evals);
}

#[test]
fn plan_into_a_file_path_fails_without_running() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("occupied");
    std::fs::write(&file, "").unwrap();
    let plan = BenchPlan::standard(file.join("out"));
    let started = std::time::Instant::now();
    assert!(run_plan(&plan).is_err());
    assert!(started.elapsed().as_secs_f64() < 1.0);
}
