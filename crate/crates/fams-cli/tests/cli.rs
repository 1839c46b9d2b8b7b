//! End-to-end checks of the command-line driver: exit codes, report files,
//! and reproducibility, using small configurations so the whole file stays
//! fast in debug builds.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_fams")
}

fn tmp(name: &str) -> PathBuf {
    Path::new(env!("CARGO_TARGET_TMPDIR")).join(name)
}

fn write_config(name: &str, body: &str) -> PathBuf {
    let path = tmp(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

fn small_config(p: f64, q: f64, extra: &str, out: &str) -> String {
    format!(
        r#"{{
  "dimension": 1,
  "domain": [[0.0, 1.0]],
  "cells_per_axis": [8],
  "directions": [ {{ "family": {{ "kind": "constant_power", "p": {p} }}, "order": 0.5 }} ],
  "exponent": {{ "kind": "constant", "value": {q} }},
  "quadrature": {{ "gauss_order": 2, "near_levels": 2, "tail_factor": 4.0, "summation": "compensated" }},
  {extra}
  "seed": 5,
  "output": {{ "dir": "{out}" }}
}}"#
    )
}

#[test]
fn missing_config_exits_2() {
    let out = run(&["check", "--config", "/definitely/not/here.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_exponent_names_key_and_bound() {
    let cfg = write_config("bad_p.json", &small_config(1.0, 2.0, "", "unused"));
    let out = run(&["check", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("directions[0].family"), "{err}");
    assert!(err.contains("exceed 1"), "{err}");
}

#[test]
fn check_writes_report_and_passes() {
    let outdir = tmp("check_out");
    let cfg = write_config(
        "check_small.json",
        &small_config(
            2.0,
            3.0,
            r#""suites": { "cases": 4, "scaling_cases": 200 },"#,
            outdir.to_str().unwrap(),
        ),
    );
    let out = run(&["check", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(outdir.join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["suites"].as_array().unwrap().len(), 9);
}

#[test]
fn solve_superlinear_writes_solution_and_trace() {
    let outdir = tmp("solve_out");
    let cfg = write_config(
        "solve_small.json",
        &small_config(
            2.0,
            4.0,
            r#""solver": { "lambda": 1.0, "tol": 1e-4, "max_iters": 2000 },"#,
            outdir.to_str().unwrap(),
        ),
    );
    let out = run(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(outdir.join("report.json")).unwrap())
            .unwrap();
    let sol = &report["solutions"][0];
    assert_eq!(sol["converged"], true);
    assert!(sol["energy"].as_f64().unwrap() > 0.0);
    assert_eq!(sol["verification"]["pass"], true);
    let trace = std::fs::read_to_string(outdir.join("solve_0.csv")).unwrap();
    assert!(trace.starts_with("iteration,energy,residual\n"));
    assert!(trace.lines().count() > 2);
}

#[test]
fn indeterminate_exits_3_until_overridden() {
    let outdir = tmp("ind_out");
    let cfg = write_config(
        "ind_small.json",
        &small_config(
            2.0,
            2.0,
            r#""solver": { "lambda": 1.0, "tol": 1e-5, "max_iters": 4000 },"#,
            outdir.to_str().unwrap(),
        ),
    );
    let out = run(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    // both gate inequalities are spelled out
    assert!(err.contains("source floor"), "{err}");
    assert!(err.contains("lower growth index"), "{err}");

    let out = run(&["solve", "--config", cfg.to_str().unwrap(), "--override-regime"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn norms_zero_function_reports_zeros() {
    let cfg = write_config(
        "norms_zero.json",
        &small_config(2.0, 2.0, "", tmp("norms_out").to_str().unwrap()),
    );
    let out = run(&["norms", "--config", cfg.to_str().unwrap(), "--function", "zero"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("joint = 0.000000000000e0"), "{text}");
    assert!(text.contains("modular = 0.000000000000e0"), "{text}");
}

#[test]
fn norms_random_is_reproducible() {
    let cfg = write_config(
        "norms_rand.json",
        &small_config(2.0, 2.0, "", tmp("norms_rand_out").to_str().unwrap()),
    );
    let a = run(&["norms", "--config", cfg.to_str().unwrap(), "--function", "random", "--seed", "9"]);
    let b = run(&["norms", "--config", cfg.to_str().unwrap(), "--function", "random", "--seed", "9"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}
