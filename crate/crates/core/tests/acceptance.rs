//! The twelve acceptance criteria, one test each. Every test writes a
//! `PASS`/`FAIL` line to stderr (visible without `--nocapture`) and then
//! asserts. The tests hold a shared lock so the timing budgets are
//! measured without competing work in the same binary.

mod common;

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Mutex;
use std::time::Instant;

use minmax_tori::beltrami::{metric_to_beltrami, solve_periodic_beltrami, uniformize, BeltramiField, MetricField};
use minmax_tori::bubbling::{
    extract_bubbles, modular_resample, moduli_distance, reduce_to_fundamental_domain, BubbleOptions, Unimodular,
    Verdict,
};
use minmax_tori::harmonic::*;
use minmax_tori::periodic::{parameter_gradient, Lattice, Mark, PeriodicField};
use minmax_tori::pipeline::{run_pipeline, scenario, scenario_library, sheared_mark, Config};
use minmax_tori::sweepout::*;
use num_complex::Complex64;
use rand::Rng;

static SERIAL: Mutex<()> = Mutex::new(());

fn report(number: usize, name: &str, pass: bool, detail: String) {
    let line = format!("{} criterion {number:>2} ({name}): {detail}\n", if pass { "PASS" } else { "FAIL" });
    std::io::stderr().write_all(line.as_bytes()).unwrap();
    assert!(pass, "criterion {number} failed: {detail}");
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn criterion_01_constant_mu_uniformization() {
    let _lock = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let g = MetricField::from_fn(64, 64, |_, _| (4.0, 0.0, 1.0)).unwrap();
    let r = uniformize(&g, 0.0, 1e-12).unwrap();
    let secs = start.elapsed().as_secs_f64();
    // μ = (4 − 1)/(4 + 1 + 2·2) = 1/3, τ = i(1 − μ)/(1 + μ), λ = (√4 + √1)²/4
    let tau_err = (r.tau() - c(0.0, 0.5)).norm();
    let lambda_err = r.beltrami.lambda.iter().map(|l| (l - 2.25).abs()).fold(0.0, f64::max);
    let pass = tau_err <= 1e-8 && lambda_err <= 1e-8 && secs < 1.0;
    report(1, "constant-mu uniformization", pass, format!("|tau - i/2| = {tau_err:.1e}, max |lambda - 9/4| = {lambda_err:.1e}, {secs:.3}s"));
}

/// `‖w_z̄ − μ w_z‖₂ / ‖w_z‖₂` from the parameter derivatives of the
/// periodic part, `w = z + B z̄ + s` on the square lattice.
fn beltrami_residual(mu: &PeriodicField, b: Complex64, s: &PeriodicField) -> f64 {
    let (sx, sy) = parameter_gradient(s);
    let i = c(0.0, 1.0);
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..mu.data().len() {
        let (x, y) = (sx.data()[k], sy.data()[k]);
        let wz = 1.0 + 0.5 * (x - i * y);
        let wzbar = b + 0.5 * (x + i * y);
        num += (wzbar - mu.data()[k] * wz).norm_sqr();
        den += wz.norm_sqr();
    }
    (num / den).sqrt()
}

#[test]
fn criterion_02_beltrami_residual() {
    let _lock = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut worst = (0.0f64, 0usize, 0.0f64, 0.0f64);
    let mut failures = Vec::new();
    for trial in 0..10u64 {
        let coarse = common::smooth_complex(&mut common::rng(100 + trial), 128, 128, 4);
        let scale = 0.5 / coarse.sup_norm();
        let mu128 = coarse.map(|z| z * scale);
        let mu256 = common::smooth_complex(&mut common::rng(100 + trial), 256, 256, 4).map(|z| z * scale);
        let start = Instant::now();
        let r = solve_periodic_beltrami(&BeltramiField::from_mu(mu128.clone()), 1e-12, 200).unwrap();
        let secs = start.elapsed().as_secs_f64();
        let residual = beltrami_residual(&mu128, r.g0_mean, &r.periodic_part);
        let fine = solve_periodic_beltrami(&BeltramiField::from_mu(mu256), 1e-12, 200).unwrap();
        let drift = (fine.tau() - r.tau()).norm();
        worst = (worst.0.max(residual), worst.1.max(r.iterations), worst.2.max(secs), worst.3.max(drift));
        if !(residual <= 1e-8 && r.iterations <= 200 && secs < 2.0 && drift <= 1e-6) {
            failures.push(trial);
        }
    }
    report(
        2,
        "Beltrami solver residual",
        failures.is_empty(),
        format!(
            "worst residual {:.1e}, iterations {}, solve {:.3}s, tau drift 128->256 {:.1e}; failing trials {failures:?}",
            worst.0, worst.1, worst.2, worst.3
        ),
    );
}

#[test]
fn criterion_03_reconstruction_round_trip() {
    let _lock = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut rng = common::rng(3);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (mut g11, mut g12, mut g22) = (Vec::new(), Vec::new(), Vec::new());
        for _ in 0..64 {
            let (p, q, s): (f64, f64, f64) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            g11.push(p * p + 0.01);
            g12.push(p * q);
            g22.push(q * q + s * s + 0.01);
        }
        let g = MetricField::new(8, 8, g11, g12, g22).unwrap();
        let back = metric_to_beltrami(&g).unwrap().reconstruct();
        for k in 0..64 {
            let scale = g.g11[k] + g.g22[k];
            for (a, b) in [(g.g11[k], back.g11[k]), (g.g12[k], back.g12[k]), (g.g22[k], back.g22[k])] {
                worst = worst.max((a - b).abs() / scale);
            }
        }
    }
    report(3, "reconstruction round trip", worst <= 1e-10, format!("worst nodewise relative error {worst:.1e} over 100 metrics"));
}

#[test]
fn criterion_04_energy_area_ordering() {
    let _lock = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut corpus: Vec<MapSlice> = Vec::new();
    let mut rng = common::rng(4);
    for k in 0..20 {
        let amp = rng.gen_range(0.05..2.0);
        let mut u = common::random_sphere_map(&mut rng, 32, 3 + k % 2, amp, 4);
        u.mark = Mark::new(c(rng.gen_range(-0.5..0.5), rng.gen_range(0.7..1.5))).unwrap();
        corpus.push(u);
    }
    for spec in scenario_library() {
        corpus.extend(spec.build(32, 8).unwrap().slices);
    }
    corpus.push(common::glued(64, |p| vec![common::bubble_part(p, (0.5, 0.5), 0.05, 0.2, 0.3), common::body_part(p)]));
    let worst = corpus.iter().map(|u| energy(u) - area(u)).fold(f64::INFINITY, f64::min);
    let (e, a) = energy_and_area(&common::clifford(128));
    let two_pi_sq = 2.0 * PI * PI;
    let pass = worst >= -1e-12 && (e - a).abs() <= 1e-6 && (e - two_pi_sq).abs() <= 1e-3 && (a - two_pi_sq).abs() <= 1e-3;
    report(
        4,
        "energy-area ordering",
        pass,
        format!("min E - Area over {} maps {worst:.1e}; Clifford E {e:.9}, Area {a:.9}, 2pi^2 {two_pi_sq:.9}", corpus.len()),
    );
}

#[test]
fn criterion_05_energy_gap() {
    let _lock = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let s2 = TargetManifold::sphere(3);
    let eps1 = 0.5;
    let ball = common::center_ball(0.4);
    let opts = ReplaceOptions { energy_threshold: Some(eps1), ..ReplaceOptions::default() };
    let mut rng = common::rng(5);
    let (mut worst, mut slowest) = (f64::INFINITY, 0.0f64);
    for _ in 0..50 {
        let e_ball = rng.gen_range(0.02..eps1);
        let u = common::sphere_map_with_energy(&mut rng, 64, &ball, e_ball);
        let start = Instant::now();
        let v = harmonic_replace(&u, &s2, &ball, &opts).unwrap();
        slowest = slowest.max(start.elapsed().as_secs_f64());
        // ∫|∇u|² − ∫|∇v|² − ½∫|∇u − ∇v|², relative to ∫|∇u|²
        let defect = 2.0 * (energy(&u) - energy(&v.slice)) - 0.5 * gradient_distance_sq(&u, &v.slice);
        worst = worst.min(defect / (2.0 * energy(&u)));
    }
    report(5, "energy gap", worst >= -1e-6 && slowest < 5.0, format!("worst relative defect {worst:.2e}, slowest replacement {slowest:.2}s"));
}

/// Up to three disjoint random balls inside the unit square torus.
fn random_balls(rng: &mut impl Rng) -> BallCollection {
    let mut balls: Vec<Ball> = Vec::new();
    let count = rng.gen_range(1..=3);
    while balls.len() < count {
        let b = Ball::new((rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)), rng.gen_range(0.1..0.22));
        let tau = Mark::square().tau();
        if balls.iter().all(|o| torus_displacement(tau, o.center, b.center).norm() > o.radius + b.radius + 0.05) {
            balls.push(b);
        }
    }
    BallCollection::new(balls)
}

#[test]
fn criterion_06_replacement_monotone_and_local() {
    let _lock = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let s2 = TargetManifold::sphere(3);
    let opts = ReplaceOptions::default();
    let mut rng = common::rng(6);
    let (mut violations, mut moved_outside) = (0, 0);
    let mut worst: f64 = f64::NEG_INFINITY;
    for _ in 0..100 {
        let balls = random_balls(&mut rng);
        let e_balls = rng.gen_range(0.05..0.4);
        let u = common::sphere_map_with_energy(&mut rng, 32, &balls, e_balls);
        let full = harmonic_replace(&u, &s2, &balls, &opts).unwrap();
        let half = harmonic_replace(&u, &s2, &balls.scaled(0.5), &opts).unwrap();
        let (e_full, e_half, e_u) = (energy(&full.slice), energy(&half.slice), energy(&u));
        worst = worst.max(e_full - e_half).max(e_half - e_u);
        if e_full > e_half + 1e-10 || e_half > e_u + 1e-10 {
            violations += 1;
        }
        let mask = balls.mask(u.tau(), u.rows(), u.cols());
        let half_mask = balls.scaled(0.5).mask(u.tau(), u.rows(), u.cols());
        for k in 0..u.nodes() {
            if (!mask[k] && u.node(k) != full.slice.node(k)) || (!half_mask[k] && u.node(k) != half.slice.node(k)) {
                moved_outside += 1;
            }
        }
    }
    report(
        6,
        "replacement monotonicity and locality",
        violations == 0 && moved_outside == 0,
        format!("100 trials: {violations} ordering violations (largest excess {worst:.1e}), {moved_outside} nodes moved outside the balls"),
    );
}

#[test]
fn criterion_07_covering_validity() {
    let _lock = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut details = Vec::new();
    let mut pass = true;
    for (name, rounds) in [("bump", 3), ("clifford", 2)] {
        let config = Config { scenario: name.into(), grid: 64, samples: 32, rounds, ..Config::default() };
        let spec = scenario(name).unwrap();
        let initial = spec.build(config.grid, config.samples).unwrap();
        let history = minmax_drive(&initial, &spec.target(), &config.drive_options()).unwrap();
        let mut previous = history.initial_max_energy;
        let mut max_rise = f64::NEG_INFINITY;
        for r in &history.rounds {
            max_rise = max_rise.max(r.max_energy - previous);
            previous = r.max_energy;
        }
        let max_active = history.rounds.iter().map(|r| r.max_active).max().unwrap_or(0);
        let tents: Vec<usize> = history.rounds.iter().map(|r| r.tents).collect();
        let increase = history.rounds.iter().map(|r| r.tighten_increase).fold(f64::NEG_INFINITY, f64::max);
        pass &= max_active <= 2 && increase <= 0.0 && max_rise <= 1e-8;
        details.push(format!(
            "{name}: tents per round {tents:?}, max active {max_active}, largest per-slice change {increase:.1e}, largest max-energy rise {max_rise:.1e}"
        ));
    }
    report(7, "covering validity", pass, details.join("; "));
}

#[test]
fn criterion_08_property_star_envelope() {
    let _lock = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let spec = scenario("bump").unwrap();
    let target = spec.target();
    let s = spec.build(128, 32).unwrap();
    let eps1 = 0.5;
    let mut opts = CoveringOptions::new(eps1);
    opts.family.stride = 16;
    let schedule = build_covering(&s, &target, &opts).unwrap();
    let (out, tightening) = tighten(&s, &target, &schedule, &TightenOptions::default()).unwrap();
    let max_before = tightening.energy_before.iter().copied().fold(0.0, f64::max);
    let near_max: Vec<usize> = s.interior().filter(|&i| tightening.energy_before[i] >= 0.5 * max_before).collect();
    let replace = ReplaceOptions { tol: 1e-10, ..ReplaceOptions::default() };
    let ratios: Vec<f64> = near_max
        .iter()
        .map(|&i| {
            let star = verify_property_star(&out.slices[i], &target, eps1 / 12.0, 64, i as u64, &replace).unwrap();
            let drop = tightening.energy_before[i] - tightening.energy_after[i];
            if star.worst == 0.0 { 0.0 } else { star.worst / drop.max(0.0).sqrt() }
        })
        .collect();
    let calibration = ratios.iter().step_by(2).copied().fold(0.0, f64::max);
    let held_out: Vec<f64> = ratios.iter().skip(1).step_by(2).copied().collect();
    let worst_held = held_out.iter().copied().fold(0.0, f64::max);
    let violations = held_out.iter().filter(|&&q| q > 1.1 * calibration).count();
    report(
        8,
        "property (*) envelope",
        !near_max.is_empty() && violations == 0 && calibration.is_finite(),
        format!(
            "{} near-maximal slices, {} tents; C calibrated {calibration:.3e}, held-out max {worst_held:.3e}, {violations} held-out violations beyond 10%",
            near_max.len(),
            schedule.tents.len()
        ),
    );
}

/// Membership in `{−½ < Re τ ≤ ½, |τ| ≥ 1}` with `Re τ ≥ 0` on the arc.
fn in_m1(t: Complex64) -> bool {
    t.im > 0.0 && t.re > -0.5 && t.re <= 0.5 && t.norm() >= 1.0 && (t.norm() > 1.0 || t.re >= 0.0)
}

#[test]
fn criterion_09_modular_reduction() {
    let _lock = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut rng = common::rng(9);
    let (mut outside, mut worst_action, mut bad_det) = (0, 0.0f64, 0);
    for _ in 0..1000 {
        let tau = c(rng.gen_range(-20.0..20.0), 10f64.powf(rng.gen_range(-2.0..1.0)));
        let p = reduce_to_fundamental_domain(Mark::new(tau).unwrap()).unwrap();
        let t = p.tau.tau();
        if !in_m1(t) {
            outside += 1;
        }
        if p.matrix.determinant() != 1 {
            bad_det += 1;
        }
        // (aτ + b)/(cτ + d) by hand
        let m = p.matrix;
        let image = (tau * m.a as f64 + m.b as f64) / (tau * m.c as f64 + m.d as f64);
        worst_action = worst_action.max((image - t).norm());
    }
    let mut worst_energy: f64 = 0.0;
    for k in 0..6 {
        let base = common::random_sphere_map(&mut rng, 64, 3, 0.6, 3);
        let u = MapSlice::new(Mark::new(c(rng.gen_range(-1.0..1.0), rng.gen_range(0.5..1.5))).unwrap(), 64, 64, 3, base.values).unwrap();
        let matrix = [
            Unimodular::new(1, 1, 0, 1).unwrap(),
            Unimodular::new(0, -1, 1, 0).unwrap(),
            Unimodular::new(2, 1, 1, 1).unwrap(),
        ][k % 3];
        let reduced = reduce_to_fundamental_domain(u.mark).unwrap().matrix;
        let (e0, a0) = energy_and_area(&u);
        for m in [matrix, reduced] {
            let v = modular_resample(&u, &m).unwrap();
            let (e1, a1) = energy_and_area(&v);
            worst_energy = worst_energy.max((e1 - e0).abs() / e0).max((a1 - a0).abs() / a0);
        }
    }
    report(
        9,
        "modular reduction",
        outside == 0 && bad_det == 0 && worst_action <= 1e-10 && worst_energy <= 1e-8,
        format!("1000 marks: {outside} outside M1, {bad_det} bad determinants, worst action error {worst_action:.1e}; worst relative energy/area change {worst_energy:.1e}"),
    );
}

#[test]
fn criterion_10_bubble_accounting() {
    let _lock = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let n = 256;
    let center = (0.5, 0.5);
    let scales = [0.08, 0.04, 0.02, 0.01];
    let sequence: Vec<MapSlice> = scales
        .iter()
        .map(|&l| common::glued(n, |p| vec![common::bubble_part(p, center, l, 0.1, 0.2), common::body_part(p)]))
        .collect();
    let lambda = scales[scales.len() - 1];
    let bubble_alone = energy(&common::glued(n, |p| vec![common::bubble_part(p, center, lambda, 0.1, 0.2)]));
    let body_alone = energy(&common::glued(n, |p| vec![common::body_part(p)]));
    let tree = extract_bubbles(&sequence, &BubbleOptions::new(2.0)).unwrap();
    let found = tree.bubbles.len();
    let (offset, bubble_err) = tree.bubbles.first().map_or((f64::INFINITY, f64::INFINITY), |b| {
        (common::square_offset(b.center, center).norm(), (b.energy - bubble_alone).abs() / bubble_alone)
    });
    let body_err = (tree.body_energy - body_alone).abs() / body_alone;
    let pass = found == 1 && offset <= 2.0 / n as f64 && bubble_err <= 0.05 && body_err <= 0.05 && tree.identity_residual <= 1e-6;
    report(
        10,
        "bubble accounting",
        pass,
        format!("{found} bubble(s), center offset {offset:.1e}, bubble energy error {:.2}%, body energy error {:.2}%, partition residual {:.1e}", 100.0 * bubble_err, 100.0 * body_err, tree.identity_residual),
    );
}

#[test]
fn criterion_11_degeneration_classification() {
    let _lock = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let config = Config { scenario: name.into(), grid: 64, samples: 64, rounds: 2, out: dir.path().join(name), ..Config::default() };
        run_pipeline(&config).unwrap()
    };
    let degenerate = run("degenerate");
    let shear = run("shear-clifford");
    let expected = reduce_to_fundamental_domain(Mark::new(sheared_mark(0.5)).unwrap()).unwrap().tau.tau();
    let limit_err = match &shear.bubbles.verdict {
        Verdict::Converged { tau } => moduli_distance(tau.tau(), expected),
        _ => f64::INFINITY,
    };
    let pass = degenerate.initial_bubbles.verdict == Verdict::Degenerate && limit_err <= 1e-3;
    report(
        11,
        "degeneration classification",
        pass,
        format!(
            "degenerate as constructed: {:?} (after driving: {:?}); shear-clifford: {:?}, distance to i*sqrt(3) {limit_err:.1e}",
            degenerate.initial_bubbles.verdict, degenerate.bubbles.verdict, shear.bubbles.verdict
        ),
    );
}

#[test]
fn criterion_12_clifford_stationarity() {
    let _lock = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let target = TargetManifold::sphere(4);
    let u = common::clifford(128);
    let pole = MapSlice::constant(Mark::square(), 128, 128, &[1.0, 0.0, 0.0, 0.0]).unwrap();
    let s = Sweepout::new(vec![pole.clone(), u, pole], [EndpointKind::Constant; 2]).unwrap();
    let mut opts = CoveringOptions::new(0.5);
    opts.family.stride = 16;
    opts.noise_floor = 0.0;
    opts.strict = false;
    let schedule = build_covering(&s, &target, &opts).unwrap();
    let (_, tightening) = tighten(&s, &target, &schedule, &TightenOptions::default()).unwrap();
    let e = tightening.energy_before[1];
    let mut change = (tightening.energy_after[1] - e).abs();
    // the covering finds nothing to tighten, so replace on small balls directly
    let clifford = &s.slices[1];
    for (center, radius) in [((0.5, 0.5), 0.1), ((0.13, 0.71), 0.08), ((0.9, 0.2), 0.12)] {
        let balls = BallCollection::new(vec![Ball::new(center, radius)]);
        let v = harmonic_replace(clifford, &target, &balls, &ReplaceOptions::default()).unwrap();
        change = change.max((energy(&v.slice) - e).abs());
    }

    let start = Instant::now();
    let config = Config { scenario: "clifford".into(), grid: 64, samples: 64, rounds: 5, ..Config::default() };
    let spec = scenario("clifford").unwrap();
    let history = minmax_drive(&spec.build(64, 64).unwrap(), &spec.target(), &config.drive_options()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let mut previous = history.initial_max_energy;
    let mut monotone = true;
    for r in &history.rounds {
        monotone &= r.max_energy <= previous + 1e-8;
        previous = r.max_energy;
    }
    let gaps: Vec<f64> = history.rounds.iter().map(|r| r.gap_at_max).collect();
    let closed = gaps.iter().any(|&g| g < 1e-2);
    let pass = change <= 1e-3 * e && monotone && closed && secs < 600.0;
    report(
        12,
        "Clifford stationarity",
        pass,
        format!(
            "tighten on the Clifford slice: {} tent(s), max |dE| under tightening and direct replacement {change:.1e} (E = {e:.6}); drive: {} rounds in {secs:.1}s, max energies {:?}, gaps at the max {:?}",
            schedule.tents.len(),
            history.rounds.len(),
            history.rounds.iter().map(|r| r.max_energy).collect::<Vec<_>>(),
            gaps.iter().map(|g| format!("{g:.1e}")).collect::<Vec<_>>()
        ),
    );
}

#[test]
fn lattice_points_are_consistent() {
    // the residual oracle above assumes the square lattice
    assert_eq!(Lattice::square().omega2(), c(0.0, 1.0));
}
