use rbppm_web::{ball_step_json, frechet_path_json, trajectory_json};
use serde_json::Value;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn gradient_zigzags_and_broximal_converges() {
    let g = parse(&trajectory_json(1.0, 100.0, 3.0, 3.0, "gradient", None, 20_000).unwrap());
    assert_eq!(g["status"], "Converged");
    let outer = g["outer"].as_array().unwrap();
    let signs: Vec<bool> = outer[1..5].iter().map(|p| p[1].as_f64().unwrap() > 0.0).collect();
    assert!(signs.windows(2).all(|w| w[0] != w[1]), "{signs:?}");

    let b = parse(&trajectory_json(1.0, 100.0, 3.0, 3.0, "broximal-a", Some(1e-2), 20_000).unwrap());
    assert_eq!(b["status"], "Converged");
    assert!(!b["inner"].as_array().unwrap().is_empty());
}

#[test]
fn trajectory_rejects_bad_input() {
    assert!(trajectory_json(1.0, 100.0, 3.0, 3.0, "newton", Some(1.0), 10).is_err());
    assert!(trajectory_json(-1.0, 100.0, 3.0, 3.0, "gradient", None, 10).is_err());
}

#[test]
fn ball_step_solutions_agree() {
    let r = parse(&ball_step_json(1.0, 100.0, 1.0, 1.0, 0.5).unwrap());
    assert!(r["gap"].as_f64().unwrap() < 1e-5);
    assert_eq!(r["exact"]["active"], true);
    assert!(r["pg_path"].as_array().unwrap().len() >= 2);
}

#[test]
fn frechet_path_reaches_midpoint() {
    let r = parse(&frechet_path_json(-0.6, 0.2, 0.5, 0.4, 0.0, -0.7, 0.5).unwrap());
    assert_eq!(r["status"], "Converged");
    assert!(r["error"].as_f64().unwrap() < 1e-6);
    let mid = &r["midpoint"];
    let last = r["path"].as_array().unwrap().last().unwrap().clone();
    assert!((last[0].as_f64().unwrap() - mid[0].as_f64().unwrap()).abs() < 1e-6);
    assert!(frechet_path_json(0.9, 0.9, 0.0, 0.0, 0.0, 0.0, 0.5).is_err());
}
