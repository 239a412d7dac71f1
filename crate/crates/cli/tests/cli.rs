use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn symop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symop"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json_file(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn lie_check_row_passes_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = symop(&[
        "lie-check", "--table", "2", "--row", "2.8", "--dim", "3", "--samples", "100", "--seed", "42", "--tol", "1e-9",
        "--output", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json_file(&out);
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["summary"]["pass"], true);
    assert_eq!(r["results"]["row"], "2.8");
    assert_eq!(r["config"]["options"]["seed"], 42);
    assert!(r["timing"]["wall_seconds"].is_number());
    for key in ["momentum", "symmetrization", "equation_form"] {
        assert!(r["conventions"][key].is_string());
    }
    let labels: Vec<&str> = r["results"]["fields"].as_array().unwrap().iter().map(|f| f["label"].as_str().unwrap()).collect();
    assert!(labels.contains(&"Pi"));
    assert!(labels.contains(&"G3"));
}

#[test]
fn printed_field_fails_with_exit_one() {
    let o = symop(&["lie-check", "--row", "2.4", "--dim", "2", "--printed", "--no-timing"]);
    assert_eq!(code(&o), 1);
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["summary"]["pass"], false);
}

#[test]
fn table_mismatch_is_usage_error() {
    let o = symop(&["lie-check", "--table", "1", "--row", "2.8"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("table 2"));
}

#[test]
fn unknown_flag_and_missing_subcommand_are_usage_errors() {
    assert_eq!(code(&symop(&["freesolve", "--order", "1", "--frobnicate"])), 2);
    assert_eq!(code(&symop(&[])), 2);
    assert_eq!(code(&symop(&["lie-check"])), 2);
}

#[test]
fn freesolve_first_order_line() {
    let o = symop(&["freesolve", "--order", "1", "--dim", "1", "--no-timing"]);
    assert_eq!(code(&o), 0);
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["results"]["dimension"], 3);
    assert_eq!(r["results"]["verified"], true);
    assert!(r.get("timing").is_none());
}

#[test]
fn freesolve_counts_in_space() {
    let o = symop(&["freesolve", "--order", "1", "--dim", "3", "--counts", "--no-operators", "--no-timing"]);
    assert_eq!(code(&o), 0);
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = r["results"]["counts"]["rows"].as_array().unwrap();
    assert_eq!(rows[1]["computed"], 10);
    assert_eq!(rows[1]["computed_new"], 9);
    assert!(r["results"].get("operators").is_none());
}

#[test]
fn detgen_latex_has_symmetrization_brackets() {
    let o = symop(&["detgen", "--order", "3", "--dim", "1", "--format", "latex"]);
    assert_eq!(code(&o), 0);
    let tex = String::from_utf8(o.stdout).unwrap();
    assert!(tex.contains("\\begin{align*}"));
    assert!(tex.contains("\\partial^{(1} K_{2}^{1 1)}"), "{tex}");
    assert!(tex.contains("\\partial_t"));
    let st = symop(&["detgen", "--order", "3", "--dim", "1", "--format", "latex", "--stationary"]);
    assert!(!String::from_utf8(st.stdout).unwrap().contains("\\partial_t"));
}

#[test]
fn detgen_json_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sys.json");
    let o = symop(&["detgen", "--order", "2", "--dim", "2", "-o", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&out).unwrap();
    let sys = symop_core::report::parse_detsystem_json(&text).unwrap();
    assert_eq!(sys, symop_core::det_eqs::generate_det_system(2, 2, false));
}

#[test]
fn detgen_check_against_commutator() {
    let o = symop(&["detgen", "--order", "2", "--dim", "1", "--check", "--potential", "x^3 - 2*x", "--no-timing"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["results"]["oracle"]["pass"], true);
}

#[test]
fn bad_potential_reports_position() {
    let o = symop(&["detgen", "--order", "1", "--check", "--potential", "x^(1/2)"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("position 2"));
}

#[test]
fn third_order_exact() {
    let o = symop(&["third-order", "--family", "W213", "--omega", "0", "--potential", "2/x^2", "--no-timing"]);
    assert_eq!(code(&o), 0);
    let o = symop(&["third-order", "--family", "W213", "--omega", "0", "--potential", "x^2", "--no-timing"]);
    assert_eq!(code(&o), 1);
    let o = symop(&["third-order", "--family", "E216", "--omega=-2,0", "--potential", "x", "--no-timing"]);
    assert_eq!(code(&o), 2, "irrational frequency is rejected");
}

#[test]
fn third_order_ode_csv_export() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("u.csv");
    let o = symop(&[
        "third-order", "--family", "P214", "--omega", "1", "--initial", "0,0", "--interval", "0,1", "--csv",
        csv.to_str().unwrap(), "--no-timing",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,U,dU"));
    let last: Vec<f64> = text.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((last[0] - 1.0).abs() < 1e-12);
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["results"]["ode"]["nodes"].as_u64().unwrap() as usize, text.lines().count() - 1);
}

#[test]
fn third_order_needs_a_source() {
    assert_eq!(code(&symop(&["third-order", "--family", "W213", "--omega", "0"])), 2);
    assert_eq!(code(&symop(&["third-order", "--family", "Q999", "--omega", "0", "--potential", "x"])), 2);
}

#[test]
fn reports_are_deterministic_without_timing() {
    let args = ["lie-check", "--all", "--table", "1", "--dim", "2", "--samples", "20", "--seed", "7", "--no-timing"];
    let a = symop(&args);
    let b = symop(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn sweep_and_list() {
    let o = symop(&["lie-check", "--sweep", "--samples", "40", "--no-timing"]);
    assert_eq!(code(&o), 0);
    let o = symop(&["lie-check", "--list", "--table", "1", "--no-timing"]);
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["results"].as_array().unwrap().len(), 6);
}

#[test]
fn verify_quick_passes() {
    let o = symop(&["verify", "--quick", "--samples", "30", "--no-timing"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
}
