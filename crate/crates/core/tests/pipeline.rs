use std::f64::consts::PI;
use std::fs;
use std::path::PathBuf;

use tempfile::tempdir;

use minmax_tori::bubbling::reduce_to_fundamental_domain;
use minmax_tori::harmonic::energy;
use minmax_tori::pipeline::*;
use minmax_tori::sweepout::Sweepout;
use minmax_tori::Error;

fn small(scenario: &str, out: PathBuf) -> Config {
    Config { scenario: scenario.into(), grid: 32, samples: 12, rounds: 2, family_stride: 4, time_stride: 2, out, ..Config::default() }
}

#[test]
fn config_rejects_unknown_keys() {
    let err = Config::from_toml("grid = 32\ncolour = \"red\"\n").unwrap_err();
    assert!(matches!(err, Error::Config(_)));
    assert!(err.to_string().contains("colour"), "{err}");
    let config = Config::from_toml("scenario = \"bump\"\ngrid = 32\neps1 = 0.4\n").unwrap();
    assert_eq!(config.grid, 32);
    assert_eq!(config.eps0(), 0.4 / 12.0);
    assert_eq!(config.samples, Config::default().samples);
}

#[test]
fn config_validation() {
    let bad = |c: Config| c.validate().unwrap_err().to_string();
    assert!(bad(Config { eps1: 1.5, ..Config::default() }).contains("epsilon_su"));
    assert!(bad(Config { replace_tol: 0.0, ..Config::default() }).contains("replace_tol"));
    assert!(bad(Config { eps0: Some(-1.0), ..Config::default() }).contains("eps0"));
    assert!(bad(Config { grid: 30, ..Config::default() }).contains("grid"));
    assert!(Config { eps0: Some(0.1), ..Config::default() }.validate().is_ok());
    let err = Config { scenario: "torus".into(), ..Config::default() }.validate().unwrap_err();
    assert!(matches!(err, Error::UnknownScenario { .. }));
}

#[test]
fn unknown_scenario_lists_the_library() {
    let err = scenario("nope").unwrap_err().to_string();
    for spec in scenario_library() {
        assert!(err.contains(spec.name), "{err}");
    }
    let names: Vec<_> = scenario_library().iter().map(|s| s.name).collect();
    assert_eq!(names, ["constant", "bump", "clifford", "shear-clifford", "degenerate"]);
}

#[test]
fn scenarios_satisfy_the_sweepout_invariants() {
    for spec in scenario_library() {
        let s = spec.build(16, 8).unwrap();
        s.validate(&spec.target()).unwrap();
        assert_eq!(s.len(), 9);
    }
}

#[test]
fn constant_scenario_has_no_energy() {
    let s = scenario("constant").unwrap().build(16, 8).unwrap();
    assert!(s.slices.iter().all(|u| energy(u) == 0.0));
}

#[test]
fn clifford_middle_slice() {
    let s = scenario("clifford").unwrap().build(128, 8).unwrap();
    let e = energy(&s.slices[4]);
    assert!((e - 2.0 * PI * PI).abs() < 1e-3, "{e}");
    let (argmax, max) = s.max_energy();
    assert_eq!((argmax, max), (4, e));
}

#[test]
fn degenerate_marks_increase() {
    let spec = scenario("degenerate").unwrap();
    let s = spec.build(32, 8).unwrap();
    let target = spec.target();
    let config = Config { grid: 32, analysis_window: 7, ..Config::default() };
    let reparam = minmax_tori::sweepout::ReparamOptions { delta: config.analysis_delta, tol: config.uniformize_tol };
    let (sequence, failed) = analysis_sequence(&s, &target, config.analysis_window, &reparam);
    assert_eq!(failed, 0);
    // pullback of (cos θ e^{4πix}, sin θ e^{2πiy}) is diag(16π² cos²θ, 4π² sin²θ);
    // after adding δ the flat mark is i·b/a with a² = g₁₁ + δ, b² = g₂₂ + δ,
    // reduced to i·max(b/a, a/b)
    let ims: Vec<f64> = sequence
        .iter()
        .map(|u| reduce_to_fundamental_domain(u.mark).unwrap().tau.tau().im)
        .collect();
    assert!(ims.windows(2).all(|w| w[1] > w[0]), "{ims:?}");
    let theta = degenerate_angle(s.times[7]);
    let a = (16.0 * PI * PI * theta.cos().powi(2) + config.analysis_delta).sqrt();
    let b = (4.0 * PI * PI * theta.sin().powi(2) + config.analysis_delta).sqrt();
    let expected = (b / a).max(a / b);
    assert!((ims.last().unwrap() - expected).abs() < 1e-8 * expected, "{} vs {expected}", ims.last().unwrap());
}

#[test]
fn manifest_round_trip_is_bit_identical() {
    let tmp = tempdir().unwrap();
    let dir = tmp.path();
    let spec = scenario("shear-clifford").unwrap();
    let s = spec.build(16, 6).unwrap();
    save_sweepout(&s, &spec.target(), dir).unwrap();
    let (back, target): (Sweepout, _) = load_sweepout(dir).unwrap();
    assert_eq!(back, s);
    assert_eq!(target, spec.target());
    let text = fs::read_to_string(dir.join(MANIFEST_FILE)).unwrap();
    fs::write(dir.join(MANIFEST_FILE), text.replace("minmax-tori sweepout 1", "other 9")).unwrap();
    assert!(matches!(load_sweepout(dir), Err(Error::Format { .. })));
}

#[test]
fn history_csv_layout() {
    let csv = history_csv(&[]);
    assert_eq!(csv, "round,maxE,maxArea,gap,worst_property_star\n");
}

#[test]
fn constant_run() {
    let tmp = tempdir().unwrap();
    let dir = tmp.path();
    let summary = run_pipeline(&small("constant", dir.into())).unwrap();
    assert_eq!(summary.initial_max_energy, 0.0);
    assert!(summary.history.rounds.iter().all(|r| r.max_energy == 0.0 && r.gap == 0.0));
    let csv = fs::read_to_string(dir.join("history.csv")).unwrap();
    assert!(csv.starts_with(HISTORY_HEADER));
    for name in ["rounds.json", "bubbles.json", "bubbles_initial.json", "sweepout/manifest.toml"] {
        assert!(dir.join(name).exists(), "{name}");
    }
}

#[test]
fn bump_run_lowers_the_maximum_reproducibly() {
    let tmp = tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let first = run_pipeline(&small("bump", a.clone())).unwrap();
    let last = first.history.rounds.last().unwrap().max_energy;
    assert!(last < first.initial_max_energy, "{last} vs {}", first.initial_max_energy);
    run_pipeline(&small("bump", b.clone())).unwrap();
    for name in ["history.csv", "rounds.json", "bubbles.json", "bubbles_initial.json", "sweepout/manifest.toml"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let (s, _) = load_sweepout(&a.join("sweepout")).unwrap();
    assert_eq!(s, first.history.last);
}

#[test]
fn target_override_must_match_dimension() {
    let spec = scenario("clifford").unwrap();
    let config = Config { target: Some("s2".into()), ..Config::default() };
    assert!(matches!(config.target_for(&spec), Err(Error::Config(_))));
    let config = Config { target: Some("s3".into()), ..Config::default() };
    assert_eq!(config.target_for(&spec).unwrap(), spec.target());
}
