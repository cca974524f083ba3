use std::path::PathBuf;
use std::process::{Command, Output};

use pqc_core::runner::{cmd_all_with, gate_table, verify_gates_with, RunConfig};
use serde_json::Value;

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn pqc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pqc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

#[test]
fn verify_gates_reports_ten_passing_rows() {
    let out = pqc(&["verify-gates"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema"], 1);
    let gates = v["gates"].as_array().unwrap();
    assert_eq!(gates.len(), 10);
    for g in gates {
        assert_eq!(g["pass"], true);
        for key in ["gate", "eta", "residual", "pass"] {
            assert!(g.get(key).is_some(), "missing {key}");
        }
    }
    let h = gates.iter().find(|g| g["gate"] == "H").unwrap();
    assert!((h["eta"].as_f64().unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
}

#[test]
fn tiny_tolerance_fails_verify_gates() {
    let out = pqc(&["verify-gates", "--tolerance", "1e-20"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["pass"], false);
}

#[test]
fn verify_gates_csv() {
    let out = pqc(&["verify-gates", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("gate,eta,residual,pass"));
    assert_eq!(lines.count(), 10);
}

#[test]
fn corrupted_gate_table_fails_aggregate() {
    let mut table = gate_table();
    table[0].target = table[1].target.clone();
    let rows = verify_gates_with(&table, 1e-12);
    assert!(!rows[0].pass);
    assert!(rows[1..].iter().all(|r| r.pass));

    let report = cmd_all_with(&RunConfig::default(), &table);
    assert!(!report.pass);
    assert_eq!(report.exit_code(), 1);
    let failed: Vec<u32> = report.suites.iter().filter(|s| !s.pass).map(|s| s.criterion).collect();
    assert_eq!(failed, vec![2]);
}

#[test]
fn amplitude_twenty_gate_circuit() {
    let out = pqc(&["amplitude", "--circuit", &data("twenty.circ"), "--alpha", "000000"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["k"], 2);
    assert!((v["amplification"].as_f64().unwrap() - 4.0).abs() < 1e-12);
    assert!(v["error"].as_f64().unwrap() < 1e-9);
}

#[test]
fn amplitude_hadamard_layer_has_unit_amplification() {
    let out = pqc(&["amplitude", "--circuit", &data("hadamards4.circ"), "--alpha", "0110"]);
    let v = json(&out);
    assert_eq!(v["k"], 4);
    assert!((v["amplification"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(v["pass"], true);
}

#[test]
fn amplitude_empty_circuit() {
    let out = pqc(&["amplitude", "--circuit", &data("empty3.circ")]);
    let v = json(&out);
    let want = 2f64.powf(-1.5);
    assert!((v["c_alpha_oracle_re"].as_f64().unwrap() - want).abs() < 1e-15);
    assert!((v["c_alpha_pqc_re"].as_f64().unwrap() - want).abs() < 1e-9);
}

#[test]
fn bad_input_exits_two() {
    assert_eq!(
        pqc(&["amplitude", "--circuit", &data("bad.circ")]).status.code(),
        Some(2)
    );
    assert_eq!(
        pqc(&["amplitude", "--circuit", &data("missing.circ")]).status.code(),
        Some(2)
    );
    assert_eq!(
        pqc(&["amplitude", "--circuit", &data("empty3.circ"), "--alpha", "01"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(pqc(&["search", "--target", "10x"]).status.code(), Some(2));
    assert_eq!(pqc(&["search"]).status.code(), Some(2));
    assert_eq!(pqc(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn lindblad_bell_is_steady() {
    let traj = std::env::temp_dir().join(format!("pqc-bell-{}.csv", std::process::id()));
    let out = pqc(&[
        "lindblad",
        "--hamiltonian",
        &data("bell.ham"),
        "--trajectory",
        traj.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["block_residual_vs_ite"].as_f64().unwrap() < 1e-6);
    assert!(v["steadiness_max_derivative"].as_f64().unwrap() < 1e-6);
    let csv = std::fs::read_to_string(&traj).unwrap();
    std::fs::remove_file(&traj).ok();
    assert!(csv.starts_with("t,trace,block_norm,coherence\n"));
    assert!(csv.lines().count() > 300);
}

#[test]
fn lindblad_frustrated_decay_rate() {
    let out = pqc(&["lindblad", "--hamiltonian", &data("frustrated.ham")]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let exact = 2.0 - std::f64::consts::SQRT_2;
    assert!((v["decay_rate_exact"].as_f64().unwrap() - exact).abs() < 1e-12);
    let fit = v["decay_rate_fit"].as_f64().unwrap();
    assert!(((fit - exact) / exact).abs() < 0.05);
}

#[test]
fn lindblad_step_halving_ratio() {
    let out = pqc(&[
        "lindblad",
        "--hamiltonian",
        &data("frustrated.ham"),
        "--convergence-dt",
        "0.1",
    ]);
    let r = json(&out)["rk4_error_ratio"].as_f64().unwrap();
    assert!((12.0..20.0).contains(&r), "ratio {r}");
}

#[test]
fn search_planted_target() {
    let out = pqc(&["search", "--target", "101100", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["found"], "101100");
    for key in [
        "n",
        "target",
        "found",
        "oracle_queries",
        "acceptance_rate",
        "independence_rate",
        "seed",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    let a = v["acceptance_rate"].as_f64().unwrap();
    assert!((0.45..=0.55).contains(&a));
    assert!(v["independence_rate"].as_f64().unwrap() >= 0.25);
}

#[test]
fn search_output_is_deterministic() {
    let a = pqc(&["search", "--n", "5", "--seed", "11"]);
    let b = pqc(&["search", "--n", "5", "--seed", "11"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.status.code(), Some(0));
}

#[test]
fn all_csv_one_row_per_criterion_and_deterministic_json() {
    let csv = pqc(&["all", "--format", "csv"]);
    assert_eq!(csv.status.code(), Some(0));
    let text = String::from_utf8(csv.stdout).unwrap();
    assert_eq!(text.lines().count(), 11);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",true")));

    let a = pqc(&["all", "--seed", "5"]);
    let b = pqc(&["all", "--seed", "5"]);
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["seed"], 5);
    assert!(v["seed_rule"].as_str().unwrap().contains("splitmix64"));
}
