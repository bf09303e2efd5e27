use std::process::Command;

use serde_json::Value;

fn stokes() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stokes"))
}

fn run_json(args: &[&str]) -> (i32, Value) {
    let out = stokes().args(args).output().unwrap();
    let code = out.status.code().unwrap();
    let v = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (code, v)
}

#[test]
fn certify_exit_codes() {
    let (code, v) = run_json(&["certify", "--kappa", "6.24", "--gamma", "0.5", "--rho1", "38", "--rho2", "1.9"]);
    assert_eq!(code, 0);
    assert_eq!(v["verdict"], "Certified");
    assert!(v["result"]["L"]["hi"].as_f64().unwrap() <= 0.93);

    let (code, v) = run_json(&["certify", "--kappa", "6", "--gamma", "0.5", "--rho1", "40", "--rho2", "2"]);
    assert_eq!(code, 1);
    assert!(v["verdict"].as_str().unwrap().starts_with("Failed"));
    let g1 = v["result"]["g1"]["hi"].as_f64().unwrap();
    assert!((g1 + 0.0626).abs() < 2e-3, "g1 = {g1}");

    let (code, _) = run_json(&["certify", "--kappa", "2"]);
    assert_eq!(code, 2);
    let (code, _) = run_json(&["certify", "--rho2", "3.5"]);
    assert_eq!(code, 2);
}

#[test]
fn manifest_written_and_consolidated() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let csv = dir.path().join("t.csv");
    assert!(stokes().args(["constant-a", "--out"]).arg(&a).status().unwrap().success());
    assert!(stokes()
        .args(["crossing", "--mode", "fast", "--csv"])
        .arg(&csv)
        .arg("--out")
        .arg(&b)
        .status()
        .unwrap()
        .success());
    let m: Value = serde_json::from_str(&std::fs::read_to_string(&b).unwrap()).unwrap();
    let re_y = &m["result"]["re_y"];
    assert!(re_y["hi"].as_f64().unwrap() < 0.0);
    assert_eq!(m["outputs"][0], csv.display().to_string());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("t,re_U,im_U,re_W,im_W,re_X,im_X,re_Y,im_Y,re_A,im_A,re_B,im_B\n"));
    assert!(text.lines().count() > 100);

    let out = stokes().arg("report").arg(&a).arg(&b).output().unwrap();
    assert!(out.status.success());
    let r1: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r1["runs"], 2);
    assert!(r1["sections"]["constant-a"].is_array());
    // rerunning gives the same consolidated document
    assert!(stokes().args(["constant-a", "--out"]).arg(&a).status().unwrap().success());
    let out = stokes().arg("report").arg(&a).arg(&b).output().unwrap();
    let r2: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r1, r2);
}

#[test]
fn report_rejects_missing_run() {
    let out = stokes().args(["report", "/nonexistent/run.json"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn initial_set_outside_tail_domain() {
    let out = stokes().args(["initial-set", "--re-u0", "-500"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("not certified"));
}

#[test]
fn initial_set_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("set.json");
    let ok = stokes()
        .args(["initial-set", "--rho0", "7.2", "--out"])
        .arg(&p)
        .status()
        .unwrap()
        .success();
    assert!(ok);
    let (code, v) = run_json(&["crossing", "--initial", p.to_str().unwrap()]);
    assert_eq!(code, 0);
    let (_, w) = run_json(&["crossing"]);
    assert_eq!(v["result"], w["result"]);
}

#[test]
fn thread_count_does_not_change_results() {
    let one = stokes().env("STOKES_THREADS", "1").args(["stokes", "--rho", "7.2,9", "--re-u0", "-3000"]).output().unwrap();
    let many = stokes().env("STOKES_THREADS", "4").args(["stokes", "--rho", "7.2,9", "--re-u0", "-3000"]).output().unwrap();
    let a: Value = serde_json::from_slice(&one.stdout).unwrap();
    let b: Value = serde_json::from_slice(&many.stdout).unwrap();
    assert_eq!(a["result"], b["result"]);
    assert_eq!(a["config_hash"], b["config_hash"]);
}
