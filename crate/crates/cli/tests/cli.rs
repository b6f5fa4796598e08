use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn xorgame(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xorgame"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = xorgame(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn game_then_solve_reaches_the_chsh_value() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["game", "--chsh-n", "4", "-o", "g.json"]);
    ok(dir.path(), &["solve", "g.json", "--seed", "3", "-o", "v.json"]);
    let v = read_json(&dir.path().join("v.json"));
    let obj = v["objective"].as_f64().unwrap();
    assert!((obj - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-4);
    for key in ["tool-version", "seed", "command", "inputs-hash"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["command"], "solve");
    assert_eq!(v["seed"], 3);
}

#[test]
fn slofstra_report_has_no_residuals() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["slofstra", "--n", "2", "-o", "s.json"]);
    ok(dir.path(), &["report", "s.json", "--n", "2", "-o", "r.json", "--emit-csv", "heat"]);
    let r = read_json(&dir.path().join("r.json"));
    for key in ["aliceAnticomm", "bobAnticomm", "crossConsistency"] {
        for row in r[key].as_array().unwrap() {
            for v in row.as_array().unwrap() {
                assert!(v.as_f64().unwrap() <= 1e-8);
            }
        }
    }
    assert!(dir.path().join("heat-aliceAnticomm.csv").exists());
}

#[test]
fn round_csv_mean_clears_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["slofstra", "--n", "2", "-o", "s.json"]);
    ok(
        dir.path(),
        &["round", "s.json", "--d", "8", "--trials", "2000", "--seed", "7", "-o", "out.csv", "--lift-out", "best.json"],
    );
    let mut rdr = csv::Reader::from_path(dir.path().join("out.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(headers.iter().collect::<Vec<_>>(), ["trial", "alpha", "objective", "resamples"]);
    let objs: Vec<f64> = rdr.records().map(|r| r.unwrap()[2].parse().unwrap()).collect();
    assert_eq!(objs.len(), 2000);
    let mean = objs.iter().sum::<f64>() / objs.len() as f64;
    assert!(mean >= 0.61, "{mean}");
    let best = read_json(&dir.path().join("best.json"));
    assert_eq!(best["dimA"], 256);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["game", "--chsh-n", "3", "-o", "g.json"]);
    ok(dir.path(), &["solve", "g.json", "--seed", "11", "-o", "a.json"]);
    ok(dir.path(), &["solve", "g.json", "--seed", "11", "-o", "b.json"]);
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    let b = std::fs::read(dir.path().join("b.json")).unwrap();
    assert_eq!(a, b);

    ok(dir.path(), &["slofstra", "--n", "2", "-o", "s.json"]);
    ok(dir.path(), &["round", "s.json", "--d", "2", "--trials", "50", "--seed", "5", "-o", "x.csv"]);
    ok(dir.path(), &["round", "s.json", "--d", "2", "--trials", "50", "--seed", "5", "-o", "y.csv"]);
    assert_eq!(
        std::fs::read(dir.path().join("x.csv")).unwrap(),
        std::fs::read(dir.path().join("y.csv")).unwrap()
    );
}

#[test]
fn files_flow_between_commands() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["game", "--chsh-n", "2", "-o", "g.json"]);
    ok(dir.path(), &["solve", "g.json", "--seed", "1", "-o", "v.json"]);
    ok(dir.path(), &["lift", "v.json", "-o", "q.json"]);
    let out = ok(dir.path(), &["simulate", "q.json", "--game", "g.json", "--rounds", "20000", "--seed", "2"]);
    let sim: Value = serde_json::from_slice(&out.stdout).unwrap();
    let p = sim["predictedSuccess"].as_f64().unwrap();
    assert!((p - 0.8535533906).abs() < 1e-6);
    let emp = sim["empiricalSuccess"].as_f64().unwrap();
    let se = sim["stderr"].as_f64().unwrap();
    assert!((emp - p).abs() <= 4.0 * se);
    ok(dir.path(), &["entropy", "q.json"]);
}

#[test]
fn unseeded_runs_record_their_seed() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["game", "--chsh-n", "2", "-o", "g.json"]);
    ok(dir.path(), &["solve", "g.json", "-o", "v.json"]);
    let v = read_json(&dir.path().join("v.json"));
    assert!(v["seed"].is_u64());
}

#[test]
fn game_from_csv_is_normalized() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("m.csv"), "1, 1\n1, -1\n").unwrap();
    ok(dir.path(), &["game", "--from-csv", "m.csv", "-o", "g.json"]);
    let g = read_json(&dir.path().join("g.json"));
    assert_eq!(g["matrix"][1][1].as_f64().unwrap(), -0.25);
}

#[test]
fn certify_and_entropy_on_optimal_strategy() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["slofstra", "--n", "6", "-o", "s.json"]);
    ok(dir.path(), &["certify", "s.json", "--n", "6", "-o", "c.json"]);
    let c = read_json(&dir.path().join("c.json"));
    assert!((c["entropyBits"].as_f64().unwrap() - 3.0).abs() < 1e-9);
    assert!(c["eta"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn exit_codes_follow_the_error_kind() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), r#"{"dimA": 2}"#).unwrap();
    assert_eq!(xorgame(dir.path(), &["lift", "bad.json"]).status.code(), Some(2));

    let state = r#"{"dimA":1,"dimB":1,"amplitudes":[[0.5,0.0]]}"#;
    std::fs::write(dir.path().join("unnorm.json"), state).unwrap();
    let out = xorgame(dir.path(), &["entropy", "unnorm.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("norm"));

    ok(dir.path(), &["slofstra", "--n", "2", "-o", "s.json"]);
    assert_eq!(xorgame(dir.path(), &["report", "s.json", "--n", "3"]).status.code(), Some(3));
    assert_eq!(
        xorgame(dir.path(), &["round", "s.json", "--d", "13", "--seed", "1"]).status.code(),
        Some(4)
    );
    assert_eq!(xorgame(dir.path(), &["lift", "missing.json"]).status.code(), Some(1));
}
