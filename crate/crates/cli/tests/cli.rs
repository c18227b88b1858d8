use std::process::{Command, Output};

fn ewalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ewalk")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn unknown_key_is_config_error() {
    let o = ewalk(&["lyapunov", "--set", "nope=1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown key `nope`"));
}

#[test]
fn non_unitary_coin_rejected() {
    let o = ewalk(&["lyapunov", "--set", "coin=su2", "--set", "abs_a=0.6", "--set", "abs_b=0.7"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not unitary"));
}

#[test]
fn su2_keys_need_su2_coin() {
    let o = ewalk(&["lyapunov", "--set", "abs_a=0.6"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_and_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    std::fs::write(&path, "# small run\nn_list = 50\nsamples = 8\ncoin = identity\n").unwrap();
    let o = ewalk(&["lyapunov", "--config", path.to_str().unwrap(), "--set", "n_list=60"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("gamma_n,60,"));
    assert!(!out.contains("gamma_n,50,"));
}

#[test]
fn identity_coin_has_zero_exponent() {
    let o = ewalk(&["lyapunov", "--set", "coin=identity", "--set", "n_list=40,80", "--set", "samples=8"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("kind,n,value,stderr,reference"));
    for l in lines {
        let cols: Vec<&str> = l.split(',').collect();
        assert!(cols[2].parse::<f64>().unwrap().abs() < 1e-12, "{l}");
        assert_eq!(cols[4].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn phase_table_single_rational_field() {
    let o = ewalk(&["phase-table", "--set", "fields=1/3", "--set", "steps=300"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("1/3,rational,ballistic,"));
}

#[test]
fn verify_json_schema() {
    let o = ewalk(&["verify", "--set", "trials=1", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["command"], "verify");
    assert_eq!(v["seed"], 3);
    assert_eq!(v["pass"], true);
    let rows = v["rows"].as_array().unwrap();
    assert!(rows.len() >= 10);
    for r in rows {
        let (res, tol) = (r["residual"].as_f64().unwrap(), r["tolerance"].as_f64().unwrap());
        assert!(res < tol, "{r}");
        assert!(r["name"].is_string());
    }
}

#[test]
fn eigenmodes_window_too_large() {
    let o = ewalk(&["eigenmodes", "--set", "cells=5000"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("dense eigensolver limit"));
}

#[test]
fn evolve_memory_cap_suggests_truncation() {
    let o = ewalk(&["evolve", "--set", "steps=100000", "--set", "index_cap=1000"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("truncate to at most"));
}

#[test]
fn cf_golden_is_fibonacci() {
    let o = ewalk(&["cf", "--set", "field=golden", "--set", "depth=10"]);
    assert_eq!(o.status.code(), Some(0));
    let qs: Vec<String> = stdout(&o).lines().skip(1).map(|l| l.split(',').nth(3).unwrap().to_string()).collect();
    assert_eq!(&qs[..8], ["1", "1", "2", "3", "5", "8", "13", "21"]);
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let args = ["cf", "--set", "field=1/5", "--format", "json"];
    let direct = ewalk(&args);
    let o = ewalk(&[&args[..], &["--out", path.to_str().unwrap()]].concat());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read(&path).unwrap(), direct.stdout);
}

#[test]
fn repeated_runs_identical() {
    let args = ["evolve", "--set", "steps=300", "--set", "field=golden", "--seed", "11"];
    assert_eq!(ewalk(&args).stdout, ewalk(&args).stdout);
}
