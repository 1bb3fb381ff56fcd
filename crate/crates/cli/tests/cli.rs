// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arrtime"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn arrtime")
}

fn run_ok(args: &[&str], config: &str) -> (TempDir, Value, String) {
    let dir = TempDir::new().unwrap();
    let out = run(args, &scenario(config), dir.path());
    assert!(out.status.success(), "{config}: {}", String::from_utf8_lossy(&out.stderr));
    let json = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.extension().is_some_and(|e| e == "json"))
        .expect("json summary");
    let v: Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    (dir, v, String::from_utf8(out.stdout).unwrap())
}

fn csv_columns(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(|f| f.parse().unwrap()).collect()).collect();
    (header, rows)
}

#[test]
fn flow_verdicts() {
    for (file, class) in [
        ("flow_x2.json", "PluggableIncomplete"),
        ("flow_x.json", "Complete"),
        ("flow_arrival.json", "HalfLineIncomplete"),
        ("flow_const.json", "Complete"),
        ("flow_x3.json", "Incurable"),
        ("flow_oriented_straightened.json", "Complete"),
        ("flow_expression.json", "PluggableIncomplete"),
    ] {
        let (_dir, v, _) = run_ok(&["flow-classify"], file);
        assert_eq!(v["class"], class, "{file}");
    }
}

#[test]
fn right_mover_arrival() {
    let (dir, v, _) = run_ok(&["arrival", "--oracle"], "arrival_right_mover.json");
    let mean = v["mean_T_plus"].as_f64().unwrap();
    assert!((mean - 25.0).abs() <= 0.02 * 25.0, "mean {mean}");
    assert!(v["oracle_l_inf"].as_f64().unwrap() <= 1e-4);
    assert!(v["w_minus"].as_f64().unwrap() < 1e-12);
    assert!(v["mean_T_minus"].is_null());
    let (header, rows) = csv_columns(&dir.path().join("arrival.csv"));
    assert_eq!(header, ["T", "total", "plus", "minus", "interference"]);
    assert_eq!(rows.len(), v["t_count"].as_u64().unwrap() as usize);
}

#[test]
fn oracle_field_only_on_request() {
    let (_dir, v, _) = run_ok(&["arrival"], "arrival_right_mover.json");
    assert!(v.get("oracle_l_inf").is_none());
}

#[test]
fn mixed_beam_interferes() {
    let (dir, v, _) = run_ok(&["arrival"], "arrival_mixed_beam.json");
    let (_, rows) = csv_columns(&dir.path().join("arrival.csv"));
    let peak = rows.iter().map(|r| r[1]).fold(0.0, f64::max);
    let swing = rows.iter().map(|r| r[4].abs()).fold(0.0, f64::max);
    assert!(swing > 0.01 * peak, "swing {swing} peak {peak}");
    for r in &rows {
        assert!((r[1] - r[2] - r[3] - r[4]).abs() < 1e-12);
    }
    let w = v["w_plus"].as_f64().unwrap() + v["w_minus"].as_f64().unwrap();
    assert!((w - 1.0).abs() < 1e-9);
    assert_eq!(v["mean_arrival_minus"].as_f64().unwrap(), -v["mean_T_minus"].as_f64().unwrap());
}

#[test]
fn classical_ladder_converges() {
    let (dir, v, _) = run_ok(&["classical-limit"], "classical_ladder.json");
    for key in ["ensemble", "quantum"] {
        let errs: Vec<f64> = v[key].as_array().unwrap().iter().map(|e| e["l1_error"].as_f64().unwrap()).collect();
        assert_eq!(errs.len(), 4);
        assert!(errs.windows(2).all(|w| w[1] <= w[0]), "{key}: {errs:?}");
        assert!(errs[3] <= 0.02, "{key}: {errs:?}");
    }
    let (header, rows) = csv_columns(&dir.path().join("ensemble_t200.csv"));
    assert_eq!(header, ["p", "mu_exact", "mu_limit", "abs_err"]);
    assert_eq!(rows.len(), 120);
}

#[test]
fn point_ensemble_fills_one_bin() {
    let (dir, v, _) = run_ok(&["classical-limit"], "classical_point.json");
    assert!(v.get("quantum").is_none());
    for t in ["10", "100"] {
        let (_, rows) = csv_columns(&dir.path().join(format!("ensemble_t{t}.csv")));
        let occupied: Vec<_> = rows.iter().filter(|r| r[1] > 0.0).collect();
        assert_eq!(occupied.len(), 1);
        assert!(rows.iter().all(|r| r[3] == 0.0));
    }
}

#[test]
fn backflow_default_and_control() {
    let (dir, v, _) = run_ok(&["backflow"], "backflow_default.json");
    assert!(v["min_current"].as_f64().unwrap() < 0.0);
    assert!(v["negative_momentum_mass"].as_f64().unwrap() <= 1e-10);
    let (header, rows) = csv_columns(&dir.path().join("backflow.csv"));
    assert_eq!(header, ["t", "x", "j"]);
    assert_eq!(rows.len() % 41, 0);
    let (_dir, v, _) = run_ok(&["backflow"], "backflow_control.json");
    assert!(v["min_current"].as_f64().unwrap() >= -1e-12);
}

#[test]
fn negative_momentum_exits_two() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("leak.json");
    std::fs::write(
        &cfg,
        r#"{"name": "leak", "x_grid": {"lo": -400, "hi": 400, "count": 8192},
            "backflow": {"p1": 0.45, "sigma": 0.1, "x_lo": -5, "x_hi": 5, "times": {"lo": 0, "hi": 1, "count": 2}}}"#,
    )
    .unwrap();
    let out = run(&["backflow"], &cfg, &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn unknown_key_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"name": "bad", "field": {"kind": "x"}, "colour": "red"}"#).unwrap();
    let out = run(&["flow-classify"], &cfg, &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn missing_section_is_a_config_error() {
    let out_dir = TempDir::new().unwrap();
    let out = run(&["arrival"], &scenario("flow_x.json"), out_dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn reruns_are_byte_identical() {
    for (args, file) in [
        (&["classical-limit"][..], "classical_ladder.json"),
        (&["arrival"][..], "arrival_mixed_beam.json"),
        (&["flow-classify"][..], "flow_x2.json"),
    ] {
        let (a, _, _) = run_ok(args, file);
        let (b, _, _) = run_ok(args, file);
        let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        for n in names {
            let x = std::fs::read(a.path().join(&n)).unwrap();
            let y = std::fs::read(b.path().join(&n)).unwrap();
            assert!(x == y, "{file}: {n:?} differs");
        }
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let cfg = scenario("arrival_mixed_beam.json");
    assert!(run(&["arrival", "--threads", "1"], &cfg, a.path()).status.success());
    assert!(run(&["arrival", "--threads", "3"], &cfg, b.path()).status.success());
    for n in ["arrival.csv", "arrival.json"] {
        assert!(std::fs::read(a.path().join(n)).unwrap() == std::fs::read(b.path().join(n)).unwrap(), "{n}");
    }
}

#[test]
fn seed_flag_overrides_scenario() {
    let dir = TempDir::new().unwrap();
    let out = run(&["classical-limit", "--seed", "7"], &scenario("classical_ladder.json"), dir.path());
    assert!(out.status.success());
    let v: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("classical_limit.json")).unwrap()).unwrap();
    assert_eq!(v["seed"], 7);
}

#[test]
fn out_dir_from_environment() {
    let dir = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_arrtime"))
        .args(["flow-classify", "--config"])
        .arg(scenario("flow_x.json"))
        .env("ARRTIME_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("flow_classify.json").exists());
}
