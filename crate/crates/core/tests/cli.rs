use std::path::{Path, PathBuf};

use mlap::cli::{main_with_args, EXIT_CHECK_FAILED, EXIT_OK, EXIT_SOLVER, EXIT_USAGE};
use serde_json::Value;

fn run(args: &[&str]) -> i32 {
    let argv: Vec<String> = std::iter::once("mlap")
        .chain(args.iter().copied())
        .map(String::from)
        .collect();
    main_with_args(argv)
}

fn path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn solve_then_certify_cosine() {
    let dir = tempfile::tempdir().unwrap();
    let result = path(dir.path(), "result.json");
    let report = path(dir.path(), "report.json");
    let profile = path(dir.path(), "profile.csv");
    let code = run(&[
        "solve",
        "--preset",
        "qp",
        "--p",
        "4",
        "--N",
        "1",
        "--out",
        result.to_str().unwrap(),
        "--profile",
        profile.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let v = read_json(&result);
    assert!((v["alpha_star"].as_f64().unwrap() - 2.0).abs() < 1e-8);
    assert!((v["R_star"].as_f64().unwrap() - std::f64::consts::PI).abs() < 1e-8);
    assert_eq!(v["config"]["preset"], "qp");
    assert!(v["classification_trace"].as_array().unwrap().len() > 10);
    assert!(std::fs::read_to_string(&profile)
        .unwrap()
        .starts_with("r,u,du,v\n"));

    let code = run(&[
        "certify",
        "--in",
        result.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let r = read_json(&report);
    assert_eq!(r["all_pass"], true);
    let names: Vec<&str> = r["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["check"].as_str().unwrap())
        .collect();
    for required in [
        "rho_constant",
        "n1_f_alpha",
        "n1_quadrature",
        "n1_b_constant",
        "reproduced_alpha",
    ] {
        assert!(
            names.contains(&required),
            "{required} missing from {names:?}"
        );
    }
}

#[test]
fn decaying_ground_state_writes_inf_radius_and_certifies() {
    let dir = tempfile::tempdir().unwrap();
    let result = path(dir.path(), "result.json");
    let report = path(dir.path(), "report.json");
    let code = run(&[
        "solve",
        "--N",
        "2",
        "--m",
        "2",
        "--family",
        "cubic-minus-linear",
        "--out",
        result.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(read_json(&result)["R_star"], "inf");
    let code = run(&[
        "certify",
        "--in",
        result.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(
        code,
        EXIT_OK,
        "{}",
        std::fs::read_to_string(&report).unwrap()
    );
}

#[test]
fn sweep_reports_one_transition() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "sweep.json");
    let table = path(dir.path(), "table.csv");
    let code = run(&[
        "sweep",
        "--N",
        "2",
        "--m",
        "3",
        "--family",
        "cubic-minus-linear",
        "--alpha-grid",
        "1.001:1000:64:log",
        "--workers",
        "3",
        "--out",
        out.to_str().unwrap(),
        "--table",
        table.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let v = read_json(&out);
    assert_eq!(v["stall_to_crossing"], 1);
    assert_eq!(v["crossing_to_stall"], 0);
    let csv = std::fs::read_to_string(&table).unwrap();
    assert_eq!(csv.lines().count(), 65);
    assert!(csv.starts_with("alpha,tag,event_radius\n"));
}

#[test]
fn gn_preset_and_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "gn.json");
    let code = run(&[
        "gn",
        "--preset",
        "qp",
        "--p",
        "4",
        "--N",
        "1",
        "--samples",
        "50",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let v = read_json(&out);
    let exact = 3f64.sqrt() * std::f64::consts::PI.powf(-1.0 / 3.0) * 2f64.powf(-2.0 / 3.0);
    assert!((v["k_opt"].as_f64().unwrap() / exact - 1.0).abs() < 1e-8);
    assert_eq!(v["violations"], 0);
    assert_eq!(v["sampler_seed"], 0x5EED);
}

#[test]
fn oracle_n1_agrees() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "oracle.json");
    let code = run(&[
        "oracle-n1",
        "--m",
        "1.5",
        "--family",
        "cubic-minus-linear",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let v = read_json(&out);
    assert!(v["alpha_rel_diff"].as_f64().unwrap() < 1e-8);
    assert!(v["profile_max_rel_diff"].as_f64().unwrap() < 1e-6);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = path(dir.path(), "run.cfg");
    let out = path(dir.path(), "result.json");
    std::fs::write(
        &cfg,
        "# cubic in the plane\nN = 2\nm = 3\nfamily = cubic-minus-linear\n",
    )
    .unwrap();
    let code = run(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--N",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let v = read_json(&out);
    assert_eq!(v["config"]["N"], "1.0");
    assert_eq!(v["config"]["m"], "3.0");
    assert!((v["alpha_star"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-8);
}

#[test]
fn usage_and_solver_errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "bad.json");
    let o = out.to_str().unwrap();
    assert_eq!(run(&["solve", "--family", "nope", "--out", o]), EXIT_USAGE);
    assert_eq!(run(&["solve", "--m", "1", "--out", o]), EXIT_USAGE);
    assert_eq!(run(&["frobnicate"]), EXIT_USAGE);
    assert_eq!(run(&["oracle-n1", "--N", "2", "--out", o]), EXIT_USAGE);
    assert_eq!(
        run(&[
            "certify",
            "--in",
            dir.path().join("missing.json").to_str().unwrap()
        ]),
        EXIT_USAGE
    );

    assert_eq!(run(&["solve", "--r-max", "0.5", "--out", o]), EXIT_SOLVER);
    let v = read_json(&out);
    assert_eq!(v["error"], "BracketLost");
    assert_eq!(v["config"]["r-max"], "0.5");
}

#[test]
fn failing_sweep_exits_with_check_status() {
    // a grid entirely above the ground state has no transition
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "sweep.json");
    let table = path(dir.path(), "table.csv");
    let code = run(&[
        "sweep",
        "--alpha-grid",
        "3:10:8:lin",
        "--out",
        out.to_str().unwrap(),
        "--table",
        table.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_CHECK_FAILED);
}

#[test]
fn repeated_solves_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "result.json");
    let args = [
        "solve",
        "--N",
        "3",
        "--m",
        "4",
        "--family",
        "cubic-minus-linear",
        "--out",
        out.to_str().unwrap(),
    ];
    assert_eq!(run(&args), EXIT_OK);
    let first = std::fs::read(&out).unwrap();
    assert_eq!(run(&args), EXIT_OK);
    assert_eq!(first, std::fs::read(&out).unwrap());
}
