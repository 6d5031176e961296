use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn netiss(cmd: &str, config: &str, dir: &Path, seed: &str) -> Output {
    let cfg = dir.join(format!("{cmd}.json"));
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_netiss"))
        .args([cmd, "--config", cfg.to_str().unwrap(), "--seed", seed, "--out", dir.join("out").to_str().unwrap()])
        .output()
        .unwrap()
}

fn run(cmd: &str, config: &str) -> (i32, tempfile::TempDir, Output) {
    let dir = tempfile::tempdir().unwrap();
    let out = netiss(cmd, config, dir.path(), "11");
    (out.status.code().unwrap(), dir, out)
}

fn read_json(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("out").join(name)).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const TWO_ID_CYCLE: &str = r#"{
    "time_domain": {"kind": "discrete"},
    "index_set": {"kind": "finite", "n": 2},
    "subsystems": {"kind": "list", "subsystems": [
        {"i": 0, "kind": "linear", "a": 0.0, "b": [2.0], "c": 1.0, "neighbors": [1]},
        {"i": 1, "kind": "linear", "a": 0.0, "b": [2.0], "c": 1.0, "neighbors": [0]}
    ]},
    "gain_graph": {
        "index_set": {"kind": "finite", "n": 2},
        "edges": [
            {"i": 0, "j": 1, "gain": {"kind": "linear", "params": {"a": 2.0}}},
            {"i": 1, "j": 0, "gain": {"kind": "linear", "params": {"a": 2.0}}}
        ],
        "external": [
            {"i": 0, "gain": {"kind": "linear", "params": {"a": 1.0}}},
            {"i": 1, "gain": {"kind": "linear", "params": {"a": 1.0}}}
        ]
    },
    "defaults": {"horizon": 10}
}"#;

fn single(kind: &str, time_domain: &str, body: &str) -> String {
    format!(
        r#"{{"time_domain": {time_domain}, "index_set": {{"kind": "finite", "n": 1}},
            "subsystems": {{"kind": "list", "subsystems": [{{"i": 0, "kind": "{kind}", {body}}}]}},
            "defaults": {{"horizon": 8}}}}"#
    )
}

#[test]
fn gains_check_two_cycle_passes() {
    let (code, dir, out) = run("gains-check", r#"{"network": "catalog:uniform-2-cycle?a=0.5&c=0.25"}"#);
    assert_eq!(code, 0, "{}", stderr(&out));
    let r = read_json(dir.path(), "gains_check.json");
    assert_eq!(r["passed"], true);
    let eta: netiss_core::ScalarCurve = serde_json::from_value(r["sgc"]["eta_hat"].clone()).unwrap();
    assert!((eta.at(1.0) - 0.5).abs() <= 0.025);
}

#[test]
fn gains_check_two_id_cycle_fails_with_cycle() {
    let cfg = format!(r#"{{"network": {TWO_ID_CYCLE}, "gains_check": {{"xi": {{"kind": "linear", "params": {{"a": 2.0}}}}}}}}"#);
    let (code, dir, _) = run("gains-check", &cfg);
    assert_eq!(code, 1);
    let r = read_json(dir.path(), "gains_check.json");
    assert_eq!(r["passed"], false);
    assert_eq!(r["cycle"]["offending"]["nodes"].as_array().unwrap().len(), 2);
}

#[test]
fn gains_check_empty_graph_has_identity_deficit() {
    let (code, dir, out) = run("gains-check", r#"{"network": "catalog:counterexample-chain", "window": 8}"#);
    assert_eq!(code, 0, "{}", stderr(&out));
    let r = read_json(dir.path(), "gains_check.json");
    let eta: netiss_core::ScalarCurve = serde_json::from_value(r["sgc"]["eta_hat"].clone()).unwrap();
    for s in [0.25, 1.0, 4.0] {
        assert_eq!(eta.at(s), s);
    }
}

#[test]
fn gains_check_without_graph_is_usage_error() {
    let net = single("linear", r#"{"kind": "discrete"}"#, r#""a": 0.5"#);
    let (code, _, out) = run("gains-check", &format!(r#"{{"network": {net}}}"#));
    assert_eq!(code, 2);
    assert!(stderr(&out).contains("gain graph"));
}

#[test]
fn malformed_config_exits_two() {
    let (code, _, out) = run("certify", r#"{"network": "catalog:counterexample-chain", "bogus": 1}"#);
    assert_eq!(code, 2);
    assert!(stderr(&out).contains("malformed config"));
    let (code, _, _) = run("simulate", r#"{"network": "missing-file.json"}"#);
    assert_eq!(code, 2);
    let (code, _, _) = run("simulate", r#"{"network": "catalog:no-such-family"}"#);
    assert_eq!(code, 2);
}

#[test]
fn seed_is_required() {
    let out = Command::new(env!("CARGO_BIN_EXE_netiss")).args(["simulate", "--config", "x.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_counterexample_sup_norm() {
    let cfg = r#"{"network": "catalog:counterexample-chain", "window": 100,
                  "simulate": {"horizon": 5, "x0": 1.0, "record_every": 1000}}"#;
    let (code, dir, out) = run("simulate", cfg);
    assert_eq!(code, 0, "{}", stderr(&out));
    let s = read_json(dir.path(), "summary.json");
    let v = s["final_sup_norm"].as_f64().unwrap();
    assert!((v - 0.9512).abs() <= 1e-4, "{v}");
    assert_eq!(s["final_time"].as_f64().unwrap(), 5.0);
}

#[test]
fn simulate_zero_state_writes_zero_csv() {
    let cfg = r#"{"network": "catalog:linear-diffusive-chain", "window": 4, "simulate": {"horizon": 0.1, "x0": 0.0}}"#;
    let (code, dir, _) = run("simulate", cfg);
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(dir.path().join("out/trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,i,value"));
    for l in lines {
        let v: f64 = l.rsplit(',').next().unwrap().parse().unwrap();
        assert_eq!(v, 0.0);
    }
}

#[test]
fn simulate_horizon_zero_returns_initial_state() {
    let cfg = r#"{"network": "catalog:counterexample-chain", "window": 3, "simulate": {"horizon": 0, "x0": [1.0, -2.0, 0.5]}}"#;
    let (code, dir, _) = run("simulate", cfg);
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(dir.path().join("out/trajectory.csv")).unwrap();
    let rows: Vec<(f64, usize, f64)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap())
        })
        .collect();
    assert_eq!(rows, vec![(0.0, 1, 1.0), (0.0, 2, -2.0), (0.0, 3, 0.5)]);
}

#[test]
fn simulate_blow_up_exits_one() {
    let net = single("expr", r#"{"kind": "continuous", "dt": 0.01}"#, r#""expr": "x*x""#);
    let (code, dir, out) = run("simulate", &format!(r#"{{"network": {net}, "simulate": {{"x0": 1.0, "horizon": 3}}}}"#));
    assert_eq!(code, 1);
    assert!(stderr(&out).contains("BIC"));
    assert!(read_json(dir.path(), "summary.json")["blow_up"].is_object());
}

#[test]
fn simulate_sweep_reports_drift() {
    let cfg = r#"{"network": "catalog:counterexample-chain?dt=0.01", "window": 10,
                  "simulate": {"horizon": 1, "x0": 1.0, "sweep": [5, 10, 20]}}"#;
    let (code, dir, _) = run("simulate", cfg);
    assert_eq!(code, 0);
    let s = read_json(dir.path(), "summary.json");
    assert_eq!(s["sweep"]["max_drift"].as_array().unwrap().len(), 2);
}

#[test]
fn certify_zero_network_succeeds() {
    let net = single("linear", r#"{"kind": "discrete"}"#, r#""a": 0.0"#);
    let (code, dir, out) = run("certify", &format!(r#"{{"network": {net}}}"#));
    assert_eq!(code, 0, "{}", stderr(&out));
    assert_eq!(read_json(dir.path(), "certify.json")["passed"], true);
}

#[test]
fn certify_static_network_names_the_gap() {
    let net = single("linear", r#"{"kind": "continuous", "dt": 0.1}"#, r#""a": 0.0"#);
    let (code, _, out) = run("certify", &format!(r#"{{"network": {net}, "certify": {{"depth": 3}}}}"#));
    assert_eq!(code, 1);
    let msg = stderr(&out);
    assert!(msg.contains("level n = 1 not attained"), "{msg}");
}

#[test]
fn certify_counterexample_window() {
    let cfg = r#"{"network": "catalog:counterexample-chain?dt=0.05", "window": 6,
                  "certify": {"horizon": 60, "depth": 4, "radii": [0.5, 1.0]}}"#;
    let (code, dir, out) = run("certify", cfg);
    assert_eq!(code, 0, "{}", stderr(&out));
    let r = read_json(dir.path(), "certify.json");
    let sigma: netiss_core::ScalarCurve = serde_json::from_value(r["certificate"]["sigma_tilde"].clone()).unwrap();
    assert!((sigma.at(1.0) - 2.0).abs() < 1e-6);
}

#[test]
fn trace_chain_passes_and_cycle_fails() {
    let cfg = r#"{"network": "catalog:nonuniform-discrete-chain?theta=0.5", "window": 16,
                  "trace": {"horizon": 400, "bands": [1, 2, 3]}}"#;
    let (code, dir, out) = run("trace-theorem1", cfg);
    assert_eq!(code, 0, "{}", stderr(&out));
    let r = read_json(dir.path(), "trace.json");
    assert_eq!(r["xi_source"], "catalog");
    assert_eq!(r["tails_nonincreasing"], true);
    let csv = std::fs::read_to_string(dir.path().join("out/trace.csv")).unwrap();
    assert!(csv.starts_with("r,k,i,tail_start,y_hat\n"));

    let cfg = format!(
        r#"{{"network": {TWO_ID_CYCLE}, "trace": {{"bands": [1, 2], "xi": {{"kind": "linear", "params": {{"a": 2.0}}}}}}}}"#
    );
    let (code, dir, _) = run("trace-theorem1", &cfg);
    assert_eq!(code, 1);
    assert_eq!(read_json(dir.path(), "trace.json")["passed"], false);
}

#[test]
fn trace_small_input_only_decays_to_zero() {
    let cfg = r#"{"network": "catalog:nonuniform-discrete-chain?theta=0.5", "window": 8,
                  "trace": {"horizon": 400, "bands": [], "small_inputs": [0.0]}}"#;
    let (code, dir, _) = run("trace-theorem1", cfg);
    assert_eq!(code, 0);
    let r = read_json(dir.path(), "trace.json");
    for e in r["trace"]["entries"].as_array().unwrap() {
        let y = e["y"].as_array().unwrap().last().unwrap().as_array().unwrap();
        assert!(y.iter().all(|v| v.as_f64().unwrap() < 1e-6));
    }
}

#[test]
fn subnetwork_of_chain_emits_uniform_certificate() {
    let cfg = r#"{"network": "catalog:nonuniform-discrete-chain?theta=0.5", "subnetwork": {"indices": [3, 4, 5, 6, 7]},
                  "certify": {"horizon": 300, "depth": 6}}"#;
    let (code, dir, out) = run("subnetwork", cfg);
    assert_eq!(code, 0, "{}", stderr(&out));
    let r = read_json(dir.path(), "subnetwork.json");
    assert_eq!(r["gains_check"]["passed"], true);
    assert!(r["uniform"]["holdout"]["max_residual"].as_f64().unwrap() < 1e-3);
}

#[test]
fn subnetwork_singleton() {
    let cfg = r#"{"network": "catalog:nonuniform-discrete-chain", "subnetwork": {"indices": [2]},
                  "certify": {"horizon": 200, "depth": 5}}"#;
    let (code, dir, out) = run("subnetwork", cfg);
    assert_eq!(code, 0, "{}", stderr(&out));
    assert_eq!(read_json(dir.path(), "subnetwork.json")["certify"]["window"], serde_json::json!([2]));
}

#[test]
fn subnetwork_blow_up_is_bic_failure() {
    let net = single("expr", r#"{"kind": "continuous", "dt": 0.01}"#, r#""expr": "x*x""#);
    let (code, _, out) = run("subnetwork", &format!(r#"{{"network": {net}, "subnetwork": {{"indices": [0]}}}}"#));
    assert_eq!(code, 1);
    let msg = stderr(&out);
    assert!(msg.contains("BIC") && msg.contains("seed"), "{msg}");
}

#[test]
fn reports_are_reproducible() {
    let cfg = r#"{"network": "catalog:uniform-2-cycle", "gains_check": {"mbi": {"budget": 2000}}}"#;
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(netiss("gains-check", cfg, a.path(), "5").status.code(), Some(0));
    assert_eq!(netiss("gains-check", cfg, b.path(), "5").status.code(), Some(0));
    let ra = std::fs::read(a.path().join("out/gains_check.json")).unwrap();
    let rb = std::fs::read(b.path().join("out/gains_check.json")).unwrap();
    assert_eq!(ra, rb);
}

#[test]
fn network_file_resolves_relative_to_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("net.json"), single("linear", r#"{"kind": "discrete"}"#, r#""a": 0.5"#)).unwrap();
    let out = netiss("simulate", r#"{"network": "net.json", "simulate": {"x0": 1.0, "horizon": 3}}"#, dir.path(), "0");
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(read_json(dir.path(), "summary.json")["final_sup_norm"].as_f64(), Some(0.125));
}
