//! End-to-end CLI tests: output schema, determinism, the recomputation check
//! on emitted intervals, and exit codes.

use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ipub"))
}

fn run_ok(args: &[&str]) -> String {
    let out = bin().args(args).output().expect("spawn ipub");
    assert!(
        out.status.success(),
        "ipub {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn synth_csvs(dir: &Path) -> (String, String) {
    let train = dir.join("train.csv").to_string_lossy().into_owned();
    let test = dir.join("test.csv").to_string_lossy().into_owned();
    run_ok(&["synth", "--n", "120", "--d", "4", "--seed", "3", "--out", &train]);
    run_ok(&["synth", "--n", "20", "--d", "4", "--seed", "4", "--out", &test]);
    (train, test)
}

#[test]
fn bound_emits_schema_stable_deterministic_json() {
    let dir = tempfile::tempdir().unwrap();
    let (train, test) = synth_csvs(dir.path());
    let out1 = dir.path().join("r1.json");
    let out2 = dir.path().join("r2.json");
    let man1 = dir.path().join("m1.json");
    let man2 = dir.path().join("m2.json");
    let common = [
        "bound", &train, &test, "--loss", "logistic", "--lambda", "1.0", "--b", "0.02",
        "--alpha", "0.5", "--seed", "9",
    ];
    run_ok(&[&common[..], &["--out", out1.to_str().unwrap(), "--manifest", man1.to_str().unwrap()]].concat());
    run_ok(&[&common[..], &["--out", out2.to_str().unwrap(), "--manifest", man2.to_str().unwrap()]].concat());

    let b1 = std::fs::read(&out1).unwrap();
    let b2 = std::fs::read(&out2).unwrap();
    assert_eq!(b1, b2, "same seed and config must give byte-identical results");
    assert_eq!(std::fs::read(&man1).unwrap(), std::fs::read(&man2).unwrap());

    let v: Value = serde_json::from_slice(&b1).unwrap();
    for field in ["spec", "solver_tol", "ball", "intervals"] {
        assert!(v.get(field).is_some(), "missing field {field}");
    }
    let ball = &v["ball"];
    for field in ["center", "radius", "delta_total", "loss_term", "penalty_term", "residual_gap"] {
        assert!(ball.get(field).is_some(), "missing ball field {field}");
    }
    let intervals = v["intervals"].as_array().unwrap();
    assert_eq!(intervals.len(), 20);
    for p in intervals {
        for field in ["id", "point_prediction", "linear_lo", "linear_hi", "value_lo", "value_hi"] {
            assert!(p.get(field).is_some(), "missing interval field {field}");
        }
    }
}

#[test]
fn emitted_intervals_recompute_exactly_from_ball_and_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let (train, test) = synth_csvs(dir.path());
    let out = dir.path().join("r.json");
    let man = dir.path().join("m.json");
    run_ok(&[
        "bound", &train, &test, "--loss", "logistic", "--lambda", "0.7", "--b", "0.03",
        "--alpha", "0.5", "--seed", "5", "--out", out.to_str().unwrap(), "--manifest",
        man.to_str().unwrap(),
    ]);
    let report: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    let manifest: Value = serde_json::from_slice(&std::fs::read(&man).unwrap()).unwrap();

    let center: Vec<f64> = report["ball"]["center"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let radius = report["ball"]["radius"].as_f64().unwrap();
    let maps: Vec<(f64, f64)> = manifest["affine_maps"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| (m["min"].as_f64().unwrap(), m["scale"].as_f64().unwrap()))
        .collect();
    let clips: Vec<Option<(f64, f64)>> = manifest["clip_bounds"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| {
            c.as_array().map(|pair| (pair[0].as_f64().unwrap(), pair[1].as_f64().unwrap()))
        })
        .collect();

    // reapply clip + affine to the raw test rows, then recompute the linear
    // interval from the emitted ball; endpoints must match the file exactly
    let raw = std::fs::read_to_string(&test).unwrap();
    for (row, p) in raw.lines().zip(report["intervals"].as_array().unwrap()) {
        let cells: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        let x: Vec<f64> = cells[..cells.len() - 1]
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                let v = match clips[j] {
                    Some((lo, hi)) => v.clamp(lo, hi),
                    None => v,
                };
                (v - maps[j].0) * maps[j].1
            })
            .collect();
        let score: f64 = x.iter().zip(&center).map(|(a, b)| a * b).sum();
        let norm: f64 = x.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert_eq!(p["linear_lo"].as_f64().unwrap(), score - norm * radius);
        assert_eq!(p["linear_hi"].as_f64().unwrap(), score + norm * radius);
        let point = p["point_prediction"].as_f64().unwrap();
        assert!(p["value_lo"].as_f64().unwrap() <= point);
        assert!(point <= p["value_hi"].as_f64().unwrap());
    }
}

#[test]
fn zero_injection_rate_gives_near_point_intervals() {
    let dir = tempfile::tempdir().unwrap();
    let (train, test) = synth_csvs(dir.path());
    let out = dir.path().join("r.json");
    run_ok(&[
        "bound", &train, &test, "--loss", "logistic", "--lambda", "1.0", "--b", "0", "--tol",
        "1e-8", "--out", out.to_str().unwrap(), "--manifest",
        dir.path().join("m.json").to_str().unwrap(),
    ]);
    let report: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    let radius = report["ball"]["radius"].as_f64().unwrap();
    // residual-gap-only radius: sqrt(2 * tol / lambda) at most
    assert!(radius <= (2.0 * 1e-6_f64).sqrt(), "radius {radius}");
    for p in report["intervals"].as_array().unwrap() {
        let width = p["value_hi"].as_f64().unwrap() - p["value_lo"].as_f64().unwrap();
        assert!(width <= 1e-2, "width {width}");
    }
}

#[test]
fn validation_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    // label 0.5 is outside the logistic domain
    std::fs::write(&bad, "0.5,0.25,0.5\n0.1,0.2,1\n0.3,0.4,-1\n").unwrap();
    let good = dir.path().join("good.csv");
    std::fs::write(&good, "0.5,0.25,1\n0.1,0.2,-1\n").unwrap();
    let out = bin()
        .args([
            "bound",
            bad.to_str().unwrap(),
            good.to_str().unwrap(),
            "--loss",
            "logistic",
            "--b",
            "0",
        ])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("label domain"), "stderr: {stderr}");
}

#[test]
fn oracle_check_detects_corrupted_radius() {
    let ok = bin()
        .args(["oracle-check", "--instances", "4", "--seed", "77"])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));

    let bad = bin()
        .args(["oracle-check", "--instances", "8", "--seed", "77", "--radius-factor", "0.01"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn experiment_writes_histogram_csv_with_pinned_columns() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    run_ok(&["synth", "--n", "150", "--d", "3", "--seed", "8", "--out", data.to_str().unwrap()]);
    let out = dir.path().join("exp.json");
    run_ok(&[
        "experiment",
        data.to_str().unwrap(),
        "--b-grid",
        "0.02",
        "--alpha-grid",
        "0.5",
        "--lambda-grid",
        "1.0",
        "--seed",
        "2",
        "--inewton-iters",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    let report: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(report["cells"].as_array().unwrap().len(), 1);
    let hist_path = dir.path().join("exp_hist_b0.02_a0.5_l1.csv");
    let hist = std::fs::read_to_string(&hist_path).unwrap();
    let mut lines = hist.lines();
    assert_eq!(lines.next(), Some("method,bin_lo,bin_hi,mass"));
    let mut ipub_mass = 0.0;
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells.len(), 4);
        if cells[0] == "ipub" {
            ipub_mass += cells[3].parse::<f64>().unwrap();
        }
    }
    assert!((ipub_mass - 1.0).abs() < 1e-9);
}
