use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

use minmax_tori::periodic::PGrid;
use num_complex::Complex64;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_minmax-tori")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn scenarios_are_listed() {
    let text = stdout(&cli(&["scenarios"]));
    for name in ["constant", "bump", "clifford", "shear-clifford", "degenerate"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{text}");
    }
}

#[test]
fn uniformize_a_constant_metric() {
    let tmp = tempdir().unwrap();
    let n = 16;
    let data = (0..n * n).flat_map(|_| [4.0, 0.0, 1.0]).collect();
    let metric = tmp.path().join("g.pgrid");
    PGrid::new(n, n, 3, Complex64::new(0.0, 1.0), data).unwrap().write(&metric).unwrap();
    let report = tmp.path().join("report.json");
    let out = cli(&["--out", report.to_str().unwrap(), "uniformize", "--metric", metric.to_str().unwrap(), "--tol", "1e-12"]);
    stdout(&out);
    let r = json(&report);
    assert!((r["tau_re"].as_f64().unwrap()).abs() < 1e-8, "{r}");
    assert!((r["tau_im"].as_f64().unwrap() - 0.5).abs() < 1e-8, "{r}");
}

#[test]
fn replace_lowers_the_energy() {
    let tmp = tempdir().unwrap();
    let n = 32;
    let mut data = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let (x, y) = (j as f64 / n as f64 - 0.5, i as f64 / n as f64 - 0.5);
            let k = 0.8 * (-(x * x + y * y) / 0.01).exp();
            let p = [k * x, k * y, 1.0];
            let r = (p[0] * p[0] + p[1] * p[1] + 1.0).sqrt();
            data.extend(p.iter().map(|v| v / r));
        }
    }
    let map = tmp.path().join("u.pgrid");
    PGrid::new(n, n, 3, Complex64::new(0.0, 1.0), data).unwrap().write(&map).unwrap();
    let replaced = tmp.path().join("v.pgrid");
    let text = stdout(&cli(&[
        "replace",
        "--map",
        map.to_str().unwrap(),
        "--target",
        "s2",
        "--balls",
        r#"[{"center": [0.5, 0.5], "radius": 0.3}]"#,
        "--output-map",
        replaced.to_str().unwrap(),
    ]));
    let r: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(r["gap"].as_f64().unwrap() > 0.0, "{r}");
    assert!(r["defect"].as_f64().unwrap() >= -1e-9, "{r}");
    assert!(replaced.exists());
}

#[test]
fn run_then_analyze_and_tighten() {
    let tmp = tempdir().unwrap();
    let config = tmp.path().join("c.toml");
    fs::write(&config, "grid = 16\nsamples = 8\nrounds = 1\nfamily_stride = 4\ntime_stride = 2\n").unwrap();
    let run_dir = tmp.path().join("run");
    let text = stdout(&cli(&[
        "--config",
        config.to_str().unwrap(),
        "--out",
        run_dir.to_str().unwrap(),
        "run",
        "--scenario",
        "bump",
    ]));
    assert!(text.starts_with("round,maxE,maxArea,gap,worst_property_star\n"), "{text}");
    assert!(text.contains("verdict: "), "{text}");
    let sweepout = run_dir.join("sweepout");
    let report = tmp.path().join("bubbles.json");
    stdout(&cli(&["--out", report.to_str().unwrap(), "analyze-bubbles", "--slices", sweepout.to_str().unwrap()]));
    assert!(json(&report)["verdict"].is_string());
    let again = tmp.path().join("again");
    let csv = stdout(&cli(&[
        "--config",
        config.to_str().unwrap(),
        "--out",
        again.to_str().unwrap(),
        "tighten",
        "--sweepout",
        sweepout.to_str().unwrap(),
    ]));
    assert_eq!(csv, fs::read_to_string(again.join("history.csv")).unwrap());
    assert!(again.join("sweepout/manifest.toml").exists());
}

#[test]
fn errors_exit_nonzero() {
    let out = cli(&["run", "--scenario", "torus"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error: ") && err.contains("clifford"), "{err}");
    let tmp = tempdir().unwrap();
    let config = tmp.path().join("c.toml");
    fs::write(&config, "colour = 1\n").unwrap();
    let out = cli(&["--config", config.to_str().unwrap(), "scenarios"]);
    assert!(!out.status.success());
}
