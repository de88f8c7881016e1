//! Initial sweepouts for the driver.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::harmonic::{MapSlice, TargetManifold};
use crate::periodic::Mark;
use crate::sweepout::{EndpointKind, Sweepout};

/// What a scenario is expected to do under the driver.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// Zero energy throughout, a fixed point.
    Trivial,
    /// The bump is tightened away.
    BumpRemoved,
    /// Max energy sits at a conformal harmonic torus.
    ConformalCritical,
    /// Marks near the maximal slice converge in moduli space.
    MarksConverge,
    /// Marks near the maximal slice leave every compact set.
    MarksDegenerate,
}

#[derive(Clone, Copy, Debug)]
pub struct ScenarioSpec {
    pub name: &'static str,
    pub description: &'static str,
    pub target: &'static str,
    pub expected: Outcome,
    build: fn(usize, usize) -> Result<Sweepout>,
}

impl ScenarioSpec {
    /// The sweepout on an `n × n` grid with `samples` time steps.
    pub fn build(&self, n: usize, samples: usize) -> Result<Sweepout> {
        (self.build)(n, samples)
    }

    pub fn target(&self) -> TargetManifold {
        TargetManifold::by_name(self.target).expect("scenario targets are known names")
    }
}

pub fn scenario_library() -> Vec<ScenarioSpec> {
    vec![
        ScenarioSpec {
            name: "constant",
            description: "constant maps into S^2",
            target: "s2",
            expected: Outcome::Trivial,
            build: constant,
        },
        ScenarioSpec {
            name: "bump",
            description: "constant family into S^2 with one bump localized in time and space",
            target: "s2",
            expected: Outcome::BumpRemoved,
            build: bump,
        },
        ScenarioSpec {
            name: "clifford",
            description: "constant to the Clifford torus in S^3 and on to the antipodal constant",
            target: "s3",
            expected: Outcome::ConformalCritical,
            build: clifford,
        },
        ScenarioSpec {
            name: "shear-clifford",
            description: "rectangular tori in S^3 precomposed with the shear (x + y, y), side ratio varying in time",
            target: "s3",
            expected: Outcome::MarksConverge,
            build: shear_clifford,
        },
        ScenarioSpec {
            name: "degenerate",
            description: "tori in S^3 collapsing onto a circle, pullback marks running to the cusp",
            target: "s3",
            expected: Outcome::MarksDegenerate,
            build: degenerate,
        },
    ]
}

pub fn scenario(name: &str) -> Result<ScenarioSpec> {
    let library = scenario_library();
    library.iter().find(|s| s.name == name).copied().ok_or_else(|| Error::UnknownScenario {
        name: name.to_string(),
        available: library.iter().map(|s| s.name).collect::<Vec<_>>().join(", "),
    })
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

/// The Clifford torus `(e^{2πix}, e^{2πiy}) / √2`.
pub fn clifford_point(x: f64, y: f64) -> [f64; 4] {
    let (a, b) = (2.0 * PI * x, 2.0 * PI * y);
    [FRAC_1_SQRT_2 * a.cos(), FRAC_1_SQRT_2 * a.sin(), FRAC_1_SQRT_2 * b.cos(), FRAC_1_SQRT_2 * b.sin()]
}

/// The rectangular torus `(a e^{2πiX}, b e^{2πiY})` with `a² + b² = 1`, at
/// `(X, Y) = (x + y, y)`.
pub fn sheared_point(a: f64, x: f64, y: f64) -> [f64; 4] {
    let b = (1.0 - a * a).sqrt();
    let (p, q) = (2.0 * PI * (x + y), 2.0 * PI * y);
    [a * p.cos(), a * p.sin(), b * q.cos(), b * q.sin()]
}

/// Mark of the flat metric pulled back by [`sheared_point`].
pub fn sheared_mark(a: f64) -> Complex64 {
    Complex64::new(1.0, (1.0 - a * a).sqrt() / a)
}

fn constant(n: usize, samples: usize) -> Result<Sweepout> {
    let p = [0.0, 0.0, 1.0];
    Sweepout::from_fn(samples, [EndpointKind::Constant; 2], |_| MapSlice::constant(Mark::square(), n, n, &p))
}

pub const BUMP_CENTER: (f64, f64) = (0.5, 0.5);
pub const BUMP_RADIUS: f64 = 0.2;
pub const BUMP_AMPLITUDE: f64 = 0.3;

/// `sin πt`, exactly zero at the endpoints.
fn sin_pi(t: f64) -> f64 {
    if t.fract() == 0.0 {
        0.0
    } else {
        (PI * t).sin()
    }
}

/// Time profile of the bump amplitude, `sin⁶ πt`.
pub fn bump_profile(t: f64) -> f64 {
    sin_pi(t).powi(6)
}

fn bump(n: usize, samples: usize) -> Result<Sweepout> {
    Sweepout::from_fn(samples, [EndpointKind::Constant; 2], |t| {
        let a = BUMP_AMPLITUDE * bump_profile(t);
        MapSlice::from_fn(Mark::square(), n, n, 3, |x, y| {
            let (dx, dy) = (x - BUMP_CENTER.0, y - BUMP_CENTER.1);
            let s2 = (dx * dx + dy * dy) / (BUMP_RADIUS * BUMP_RADIUS);
            let psi = if s2 < 1.0 { (1.0 - 1.0 / (1.0 - s2)).exp() } else { 0.0 };
            let k = a * psi / BUMP_RADIUS;
            normalized(&[k * dx, k * dy, 1.0])
        })
    })
}

fn clifford(n: usize, samples: usize) -> Result<Sweepout> {
    let p = [1.0, 0.0, 0.0, 0.0];
    Sweepout::from_fn(samples, [EndpointKind::Constant; 2], |t| {
        // From p to the Clifford torus, then from it to −p.
        let (w, end) = if t <= 0.5 { (2.0 * t, 1.0) } else { (2.0 * (1.0 - t), -1.0) };
        if w == 0.0 {
            return MapSlice::constant(Mark::square(), n, n, &[end, 0.0, 0.0, 0.0]);
        }
        MapSlice::from_fn(Mark::square(), n, n, 4, |x, y| {
            let c = clifford_point(x, y);
            normalized(&[(1.0 - w) * end * p[0] + w * c[0], w * c[1], w * c[2], w * c[3]])
        })
    })
}

/// Side parameter of the sheared torus, largest at `t = ½`.
pub fn shear_side(t: f64) -> f64 {
    0.5 - 0.5 * (t - 0.5) * (t - 0.5)
}

fn shear_clifford(n: usize, samples: usize) -> Result<Sweepout> {
    let p = [1.0, 0.0, 0.0, 0.0];
    Sweepout::from_fn(samples, [EndpointKind::Constant; 2], |t| {
        let w = (2.0 * sin_pi(t)).min(1.0);
        if w <= 0.0 {
            return MapSlice::constant(Mark::square(), n, n, &p);
        }
        let a = shear_side(t);
        MapSlice::from_fn(Mark::square(), n, n, 4, |x, y| {
            let c = sheared_point(a, x, y);
            normalized(&[(1.0 - w) * p[0] + w * c[0], w * c[1], w * c[2], w * c[3]])
        })
    })
}

/// `θ(t) = (π/2)(1 − t)²`; the slice at `t` is
/// `(cos θ e^{4πix}, sin θ e^{2πiy})`.
pub fn degenerate_angle(t: f64) -> f64 {
    FRAC_PI_2 * (1.0 - t) * (1.0 - t)
}

fn degenerate(n: usize, samples: usize) -> Result<Sweepout> {
    Sweepout::from_fn(samples, [EndpointKind::Circle; 2], |t| {
        let theta = degenerate_angle(t);
        let (c, s) = (theta.cos(), theta.sin());
        MapSlice::from_fn(Mark::square(), n, n, 4, |x, y| {
            let (p, q) = (4.0 * PI * x, 2.0 * PI * y);
            vec![c * p.cos(), c * p.sin(), s * q.cos(), s * q.sin()]
        })
    })
}
