use std::process::{Command, Output};

use serde_json::Value;

fn ustlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ustlab"))
        .args(args)
        .env_remove("USTLAB_THREADS")
        .output()
        .expect("spawn ustlab")
}

fn json(args: &[&str]) -> Value {
    let out = ustlab(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("json output")
}

fn f(v: &Value) -> f64 {
    v.as_f64().expect("number")
}

#[test]
fn hex_constant_two_vanishes() {
    let v = json(&["constant", "--lattice", "hex", "--k", "2"]);
    assert!(f(&v["value"]).abs() < 1e-6);
    assert_eq!(v["table_value"], 0.0);
    assert_eq!(v["pass"], true);
}

#[test]
fn k3_degree_law_csv() {
    let out = ustlab(&["degree-pmf", "--complete", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "k,probability,closed_form,poisson,poisson_gap");
    let probs: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(probs.len(), 2);
    assert!((probs[0] - 2.0 / 3.0).abs() < 1e-12);
    assert!((probs[1] - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn edge_prob_on_k4() {
    // 16 trees; {01} in and {12, 23} out leaves 2
    let v = json(&["edge-prob", "--complete", "4", "--in", "0-1", "--absent", "1-2,2-3"]);
    assert!((f(&v["probability"]) - 0.125).abs() < 1e-12);
    assert_eq!(v["method"], "det");
    assert!((f(&v["crosscheck_value"]) - 0.125).abs() < 1e-12);
}

#[test]
fn explicit_graph_file_and_output_path() {
    let dir = std::env::temp_dir().join(format!("ustlab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let g = dir.join("c4.json");
    std::fs::write(
        &g,
        r#"{"vertices":[10,20,30,40],"edges":[[10,20],[20,30],[30,40],[40,10]]}"#,
    )
    .unwrap();
    let out = dir.join("p.json");
    let st = ustlab(&[
        "edge-prob",
        "--graph",
        g.to_str().unwrap(),
        "--in",
        "10-20",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(st.status.success());
    assert!(st.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!((f(&v["probability"]) - 0.75).abs() < 1e-12);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn green_kernel_nearest_neighbour() {
    for lat in ["Z2", "tri"] {
        let v = json(&["green", "--lattice", lat, "--kernel", "1", "0"]);
        assert!((f(&v["value"]) - 1.0).abs() < 1e-8, "{lat}");
    }
    let v = json(&["green", "--lattice", "Z2", "--kernel", "0", "0"]);
    assert_eq!(f(&v["value"]), 0.0);
}

#[test]
fn green_matrix_grounded() {
    let v = json(&["green", "--complete", "3", "--ground", "2"]);
    let m = v["matrix"].as_array().unwrap();
    assert!((f(&m[0][0]) - 2.0 / 3.0).abs() < 1e-14);
    assert_eq!(f(&m[2][2]), 0.0);
}

#[test]
fn cumulant_matches_oracle() {
    let v = json(&[
        "cumulant",
        "--lattice",
        "Z2",
        "--width",
        "5",
        "--height",
        "5",
        "--points",
        "6:2,18:2",
        "--oracle",
    ]);
    assert!(f(&v["abs_gap"]) < 1e-10);
}

#[test]
fn wick_and_audit_pass() {
    let v = json(&["wick-check", "--m", "4", "--trials", "50", "--seed", "3"]);
    assert_eq!(v["pass"], true);
    let v = json(&["perm-audit", "--stars", "2x3", "--check", "surgery"]);
    assert_eq!(v[0]["failures"], 0);
    assert!(v[0]["cases"].as_u64().unwrap() > 0);
}

#[test]
fn sample_is_seeded() {
    let args = [
        "sample",
        "--complete",
        "5",
        "--samples",
        "2000",
        "--seed",
        "9",
        "--degree",
        "0:1",
    ];
    let a = json(&args);
    let b = json(&args);
    assert_eq!(a["hits"], b["hits"]);
    assert!((f(&a["exact"]) - 0.512).abs() < 1e-12);
}

#[test]
fn exit_codes() {
    assert_eq!(ustlab(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(
        ustlab(&["edge-prob", "--complete", "4", "--in", "0-9"]).status.code(),
        Some(2)
    );
    assert_eq!(ustlab(&["edge-prob", "--in", "0-1"]).status.code(), Some(2));
    let guard = ustlab(&["degree-pmf", "--complete", "30", "--vertex", "0", "--max-enum", "10"]);
    assert_eq!(guard.status.code(), Some(3));
    assert_eq!(
        ustlab(&["wick-check", "--m", "3", "--trials", "5", "--tol", "1e-300"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(ustlab(&["--help"]).status.code(), Some(0));
}

#[test]
fn reproduce_table_rows() {
    let out = ustlab(&["reproduce-table"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 13);
    for r in rows.iter().filter(|r| r["lattice"] != "Z2") {
        assert_eq!(r["pass"], true, "{r}");
    }
    let all = rows.iter().all(|r| r["pass"] == true);
    assert_eq!(out.status.code(), Some(if all { 0 } else { 1 }));
}
