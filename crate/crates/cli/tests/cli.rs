use std::process::{Command, Output};

use serde_json::Value;

fn lebrun(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lebrun")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = lebrun(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn f(v: &Value) -> f64 {
    v.as_f64().expect("number")
}

fn validate(v: &Value) {
    let schema: Value = serde_json::from_str(include_str!("../schema/lebrun-output.schema.json")).unwrap();
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    let errors: Vec<String> = validator.iter_errors(v).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}");
}

#[test]
fn curvature_norm_at_origin() {
    let v = json(&["curvature", "--m", "1", "--point", "0,0"]);
    assert!((f(&v["normR2"]) - 96.0).abs() < 1e-10);
    assert!((f(&v["lapR2"]) + 2304.0).abs() < 1e-5);
    assert!(f(&v["ricci_max_abs"]) < 1e-10);
    validate(&v);
}

#[test]
fn flat_metric_is_identity() {
    let v = json(&["metric", "--m", "0", "--point", "1,2"]);
    assert_eq!(f(&v["det"]), 1.0);
    for i in 0..2 {
        for j in 0..2 {
            let want = if i == j { 1.0 } else { 0.0 };
            assert_eq!(f(&v["g"][i][j][0]), want);
            assert_eq!(f(&v["g"][i][j][1]), 0.0);
        }
    }
    validate(&v);
}

#[test]
fn flat_epsilon_is_alpha_squared() {
    let v = json(&["epsilon", "--m", "0", "--alpha", "2", "--point", "0,0"]);
    assert!((f(&v["pi2_epsilon"]) - 4.0).abs() < 1e-12);
    validate(&v);
    let g = json(&["epsilon", "--m", "0", "--alpha", "3", "--grid", "3"]);
    assert!(f(&g["max_rel_dev"]) < 1e-12);
    assert_eq!(g["samples"].as_array().unwrap().len(), 9);
    validate(&g);
}

#[test]
fn balanced_scan_signs() {
    let v = json(&["balanced-scan", "--alpha", "4", "--m-min", "0.2", "--m-max", "2", "--steps", "4", "--include-zero"]);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    assert_eq!(f(&rows[0]["m"]), 0.0);
    assert_eq!(f(&rows[0]["h"]), 0.0);
    assert_eq!(f(&rows[0]["norm_ratio"]), 1.0);
    for r in &rows[1..] {
        assert!(f(&r["h"]) > 0.0);
        assert!(f(&r["norm_ratio"]) < 1.0);
    }
    assert!(f(&v["min_abs_h"]) > 0.0);
    validate(&v);
}

#[test]
fn balanced_scan_rejects_large_m() {
    let out = lebrun(&["balanced-scan", "--alpha", "2", "--m-min", "0.5", "--m-max", "2", "--steps", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fit_recovers_curvature_term() {
    let v = json(&["englis-fit", "--m", "0.1", "--alphas", "20,40,80,160,320"]);
    assert!((f(&v["c2_fit"]) - 0.04).abs() < 1e-5);
    assert!((f(&v["c2_curvature"]) - 0.04).abs() < 1e-12);
    assert!((f(&v["c3_watson"]) + 0.048).abs() < 1e-12);
    validate(&v);
}

#[test]
fn series_is_exact() {
    let v = json(&["series", "--m", "1/10", "--alpha", "3", "--max-degree", "2"]);
    let c = v["coefficients"].as_array().unwrap();
    let x1x2 = c.iter().find(|t| t["i"] == 1 && t["j"] == 1).unwrap();
    assert_eq!(x1x2["value"], "51/5");
    assert!(v["first_negative"].is_null());
    validate(&v);
}

#[test]
fn completeness_grid() {
    let v = json(&["check-completeness", "--m", "1", "--grid", "5"]);
    assert!(f(&v["min_eig"]) >= 0.0);
    assert!(f(&v["min_quadform"]) >= 0.0);
    assert_eq!(v["points"], 25);
    assert_eq!(f(&v["form_at_u0_max_abs"]), 0.0);
    validate(&v);
}

#[test]
fn coords_roundtrip_from_complex_point() {
    let v = json(&["coords", "--m", "1", "--zpoint", "0.3,0.1,-0.2,0.5"]);
    assert!((f(&v["x1"]) - 0.1).abs() < 1e-14);
    assert!((f(&v["x2"]) - 0.29).abs() < 1e-14);
    assert!(f(&v["roundtrip_err"]) < 1e-13);
    validate(&v);
}

#[test]
fn verify_single_criterion_and_mutation() {
    let out = lebrun(&["verify", "--criterion", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["overall"], "pass");
    assert!(v["checks"][0].get("elapsed_s").is_none());
    validate(&v);
    let out = lebrun(&["verify", "--criterion", "1", "--mutate", "metric"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn full_verify_matches_schema() {
    let out = lebrun(&["verify", "--timings"]);
    assert!(matches!(out.status.code(), Some(0 | 1)));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    validate(&v);
    let checks = v["checks"].as_array().unwrap();
    let ids: Vec<u64> = checks.iter().filter(|c| c["status"] != "informational").map(|c| c["id"].as_u64().unwrap()).collect();
    assert_eq!(ids, (1..=14).collect::<Vec<_>>());
    assert!(checks.iter().all(|c| c.get("elapsed_s").is_some()));
    assert_eq!(out.status.code() == Some(0), v["overall"] == "pass");
}

#[test]
fn output_independent_of_threads() {
    for args in [
        &["epsilon", "--m", "0.5", "--alpha", "6", "--grid", "4"][..],
        &["balanced-scan", "--alpha", "4", "--m-min", "0.1", "--m-max", "1", "--steps", "3", "--grid", "3"][..],
    ] {
        let run = |t: &str, fmt: &str| {
            let mut a = vec!["--threads", t, "--format", fmt];
            a.extend_from_slice(args);
            lebrun(&a).stdout
        };
        for fmt in ["json", "csv"] {
            assert_eq!(run("1", fmt), run("4", fmt), "{args:?} {fmt}");
        }
    }
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["metric", "--m", "1"][..],
        &["metric", "--m", "-1", "--point", "0,0"][..],
        &["epsilon", "--m", "1", "--alpha", "1", "--point", "0,0", "--tol", "0"][..],
        &["coords", "--m", "1", "--point", "1"][..],
        &["verify", "--criterion", "15"][..],
        &["frobnicate"][..],
    ] {
        assert_eq!(lebrun(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn csv_and_out_file() {
    let dir = std::env::temp_dir().join(format!("lebrun-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("c.csv");
    let out = lebrun(&["--format", "csv", "--out", path.to_str().unwrap(), "curvature", "--m", "1", "--point", "0,0"]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("m,U,V,normR2,lapR2"));
    assert!(lines.next().unwrap().contains("9.6000000000000000e1"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn schema_command_prints_schema() {
    let v = json(&["schema"]);
    assert_eq!(v["title"], "lebrun JSON output");
}
