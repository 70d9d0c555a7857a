use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn kpos(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kpos"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(args: &[&str]) -> Value {
    let out = kpos(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

fn failure(args: &[&str], code: i32, kind: &str) {
    let out = kpos(args);
    assert_eq!(out.status.code(), Some(code), "{args:?}");
    let err: Value = serde_json::from_slice(&out.stderr).expect("diagnostic is JSON");
    assert_eq!(err["error"]["kind"], kind, "{args:?}");
    assert!(out.stdout.is_empty());
}

fn file_ref(p: &Path) -> String {
    format!("file:{}", p.display())
}

#[test]
fn transposition_is_refuted_at_k2() {
    let r = report(&["test", "--map", "seeds:transposition", "--d", "3", "--k", "2"]);
    assert_eq!(r["schema"], "kpos-report/1");
    assert_eq!(r["command"]["name"], "test");
    let v = &r["results"]["verdict"];
    assert_eq!(v["status"], "refuted");
    assert_eq!(v["k"], 2);
    assert!(v["witness"]["value"].as_f64().unwrap() < 0.0);
    assert_eq!(r["inputs"]["map"]["map"]["dim_in"], 3);
}

#[test]
fn identity_is_certified() {
    let r = report(&["test", "--map", "seeds:identity", "--d", "2", "--k", "2"]);
    assert_eq!(r["results"]["verdict"]["status"], "certified_positive");
}

#[test]
fn results_are_deterministic() {
    let args = ["--seed", "17", "--samples", "500", "--restarts", "4", "test", "--map", "seeds:choi_map", "--k", "2"];
    let a = report(&args);
    let b = report(&args);
    assert_eq!(a["results"], b["results"]);
    assert_eq!(a["config"], b["config"]);
    assert_eq!(a["config"]["masterSeed"], 17);
    assert_eq!(a["config"]["budget"]["samples"], 500);
    let c = report(&["--threads", "1", "--seed", "17", "--samples", "500", "--restarts", "4", "test", "--map", "seeds:choi_map", "--k", "2"]);
    assert_eq!(a["results"], c["results"]);
}

#[test]
fn seeds_get_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("choi.json");
    let out = kpos(&["seeds", "get", "choi_map", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["repr"], "choi");
    assert_eq!(doc["knownProperties"]["ccp"], "true");
    let r = report(&["ccp", "--map", &file_ref(&path)]);
    assert_eq!(r["results"]["ccp"]["is_ccp"], true);
    let d = report(&["decomp", "--map", &file_ref(&path)]);
    assert_eq!(d["results"]["decomposition"]["is_decomposable"], false);
}

#[test]
fn seeds_list_has_properties() {
    let r = report(&["seeds", "list"]);
    let seeds = r["results"]["seeds"].as_array().unwrap();
    assert!(seeds.iter().any(|s| s["name"] == "lambda_prime" && s["knownProperties"]["decomposable"] == "false"));
}

#[test]
fn workflow_layers_chain_by_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("layer1.json");
    let status = kpos(&[
        "workflow", "--seed", "seeds:lambda_prime:1.0", "--nk", "0", "--tmax", "1", "--grid", "20",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let row = &r["results"]["rows"][0];
    let t_nd = row["t_nd"].as_f64().unwrap();
    assert!((0.40..=0.50).contains(&t_nd), "t_nd = {t_nd}");
    assert_eq!(row["validSeed"], true);
    let map_file = dir.path().join(row["mapFile"].as_str().unwrap());
    assert!(map_file.exists());
    // the generated map feeds the next layer's checks
    let d = report(&["decomp", "--map", &file_ref(&map_file)]);
    assert_eq!(d["results"]["decomposition"]["is_decomposable"], false);
}

#[test]
fn workflow_rejects_decomposable_seed() {
    failure(&["workflow", "--map", "seeds:reduction", "--tmax", "1"], 1, "input");
    failure(&["workflow", "--tmax", "1"], 1, "usage");
}

#[test]
fn ppt2_both_modes() {
    let r = report(&["ppt2", "--psi", "seeds:lambda_tilde", "--mode", "both", "--samples", "5"]);
    let joint = &r["results"]["joint"];
    assert!(joint["value"].as_f64().unwrap() <= 1e-6);
    assert_eq!(joint["normalization"], 3.0);
    assert_eq!(r["results"]["scan"]["samples"].as_array().unwrap().len(), 5);
    let only = report(&["ppt2", "--psi", "seeds:lambda_tilde", "--mode", "joint"]);
    assert!(only["results"].get("scan").is_none());
}

#[test]
fn kyfan_matches_direct() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b.json");
    std::fs::write(&path, "[[[3,0],[1,0]],[[1,0],[2,0]]]").unwrap();
    let r = report(&["kyfan", "--matrix", &file_ref(&path), "--k", "1"]);
    assert!(r["results"]["absDiff"].as_f64().unwrap() < 1e-6);
    let expected = 2.5 + 1.25f64.sqrt();
    assert!((r["results"]["direct"].as_f64().unwrap() - expected).abs() < 1e-12);
    failure(&["kyfan", "--map", "seeds:transposition", "--k", "1"], 1, "input");
}

#[test]
fn minor_suite_command_passes() {
    let r = report(&["verify-appendix-d", "--alpha", "0.5", "--samples", "2000"]);
    assert_eq!(r["results"]["pass"], true);
    failure(&["verify-appendix-d", "--alpha", "2"], 1, "input");
}

#[test]
fn bench_reports_timings_in_header() {
    let r = report(&["bench", "--map", "seeds:choi_map", "--restarts", "4"]);
    assert_eq!(r["results"]["methods"].as_array().unwrap().len(), 3);
    assert!(r["header"]["timings"]["thm31"].is_number());
    assert!(r["header"]["fastest"].is_string());
}

#[test]
fn input_and_usage_errors() {
    failure(&["test", "--map", "seeds:nope"], 1, "input");
    failure(&["test", "--map", "transposition"], 1, "input");
    failure(&["test", "--map", "file:/does/not/exist.json"], 1, "input");
    failure(&["test", "--map", "seeds:transposition", "--k", "7"], 1, "input");
    failure(&["frobnicate"], 1, "usage");
    failure(&["--seed", "abc", "seeds", "list"], 1, "usage");
    failure(&["--samples", "0", "seeds", "list"], 1, "usage");
    failure(&["test", "--map", "seeds:phi_d4", "--d", "3"], 1, "input");
}

#[test]
fn non_hermitian_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{"dim_in":1,"dim_out":1,"repr":"choi","data":[[[0,1]]]}"#,
    )
    .unwrap();
    failure(&["decomp", "--map", &file_ref(&path)], 1, "input");
}

#[test]
fn solver_failure_exit_code() {
    failure(&["decomp", "--map", "seeds:choi_map", "--tol", "1e-30"], 2, "solver");
}
