#![allow(dead_code)]

use std::f64::consts::PI;

use minmax_tori::periodic::{Lattice, PeriodicField};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random trigonometric polynomial with modes |m|,|n| <= band and
/// amplitudes decaying like 1/(1+m²+n²).
pub fn smooth_complex(rng: &mut impl Rng, rows: usize, cols: usize, band: i64) -> PeriodicField {
    let mut modes = Vec::new();
    for m in -band..=band {
        for n in -band..=band {
            let amp = 1.0 / (1.0 + (m * m + n * n) as f64);
            let coef = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * amp;
            modes.push((m as f64, n as f64, coef));
        }
    }
    PeriodicField::from_fn(Lattice::square(), rows, cols, |x, y| {
        modes
            .iter()
            .map(|&(m, n, a)| a * Complex64::from_polar(1.0, 2.0 * PI * (m * x + n * y)))
            .sum()
    })
    .unwrap()
}

/// Same construction as a real field.
pub fn smooth_real(rng: &mut impl Rng, rows: usize, cols: usize, band: i64) -> PeriodicField {
    smooth_complex(rng, rows, cols, band).map(|z| Complex64::new(z.re, 0.0))
}

/// Scales a field so that its sup norm equals `k`.
pub fn with_sup(f: &PeriodicField, k: f64) -> PeriodicField {
    let s = k / f.sup_norm();
    f.map(|z| z * s)
}

/// Resamples a trigonometric polynomial given as a closure on a finer grid.
pub fn sampled(rows: usize, f: impl Fn(f64, f64) -> Complex64) -> PeriodicField {
    PeriodicField::from_fn(Lattice::square(), rows, rows, f).unwrap()
}

use minmax_tori::harmonic::{energy_in, Ball, BallCollection, MapSlice, TargetManifold};
use minmax_tori::periodic::Mark;

pub fn clifford(n: usize) -> MapSlice {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    MapSlice::from_fn(Mark::square(), n, n, 4, |x, y| {
        let (a, b) = (2.0 * PI * x, 2.0 * PI * y);
        vec![s * a.cos(), s * a.sin(), s * b.cos(), s * b.sin()]
    })
    .unwrap()
}

/// Random smooth map into the unit sphere of `R^dim`: the projection of a
/// fixed point plus a random band-limited perturbation of size `amp`.
pub fn random_sphere_map(rng: &mut impl Rng, n: usize, dim: usize, amp: f64, band: i64) -> MapSlice {
    let mut modes = Vec::new();
    for _ in 0..dim {
        let mut comp = Vec::new();
        for m in -band..=band {
            for k in -band..=band {
                let w = 1.0 / (1.0 + (m * m + k * k) as f64);
                comp.push((m as f64, k as f64, rng.gen_range(-1.0..1.0) * w, rng.gen_range(0.0..2.0 * PI)));
            }
        }
        modes.push(comp);
    }
    let mut base = vec![0.0; dim];
    base[dim - 1] = 1.0;
    let target = TargetManifold::sphere(dim);
    MapSlice::from_fn(Mark::square(), n, n, dim, |x, y| {
        let mut p = base.clone();
        for (d, comp) in modes.iter().enumerate() {
            p[d] += amp * comp.iter().map(|&(m, k, a, ph)| a * (2.0 * PI * (m * x + k * y) + ph).cos()).sum::<f64>();
        }
        target.project(&p)
    })
    .unwrap()
}

/// Scales the perturbation of a random sphere map so that its energy on
/// the ball is close to `energy`.
pub fn sphere_map_with_energy(rng: &mut impl Rng, n: usize, ball: &BallCollection, energy: f64) -> MapSlice {
    let seed: u64 = rng.gen();
    let make = |amp: f64| random_sphere_map(&mut self::rng(seed), n, 3, amp, 3);
    let (mut lo, mut hi) = (0.0, 1.0);
    while energy_in(&make(hi), ball).value < energy && hi < 64.0 {
        hi *= 2.0;
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if energy_in(&make(mid), ball).value < energy {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    make(lo)
}

pub fn center_ball(radius: f64) -> BallCollection {
    BallCollection::single(Ball::new((0.5, 0.5), radius))
}

pub const NORTH: [f64; 3] = [0.0, 0.0, 1.0];

/// Inverse stereographic projection from the north pole.
pub fn stereo(w: Complex64) -> Vec<f64> {
    let s = w.norm_sqr();
    vec![2.0 * w.re / (1.0 + s), 2.0 * w.im / (1.0 + s), (s - 1.0) / (1.0 + s)]
}

/// Smooth step: 1 below `a`, 0 above `b`.
pub fn cutoff(rho: f64, a: f64, b: f64) -> f64 {
    let g = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    let s = ((rho - a) / (b - a)).clamp(0.0, 1.0);
    g(1.0 - s) / (g(1.0 - s) + g(s))
}

/// Plane displacement on the square torus to the nearest image.
pub fn square_offset(p: (f64, f64), q: (f64, f64)) -> Complex64 {
    let w = |d: f64| d - d.round();
    Complex64::new(w(p.0 - q.0), w(p.1 - q.1))
}

/// Degree-one bubble of scale `lambda` at `center`, glued to the north pole
/// between radii `a` and `b`.
pub fn bubble_part(p: (f64, f64), center: (f64, f64), lambda: f64, a: f64, b: f64) -> Vec<f64> {
    let z = square_offset(p, center);
    let phi = cutoff(z.norm(), a, b);
    let s = stereo(z / lambda);
    (0..3).map(|d| phi * s[d] + (1.0 - phi) * NORTH[d]).collect()
}

/// Rotation of the north pole by an angle supported near the corner.
pub fn body_part(p: (f64, f64)) -> Vec<f64> {
    let theta = 2.0 * cutoff(square_offset(p, (0.0, 0.0)).norm(), 0.05, 0.25);
    vec![0.0, theta.sin(), theta.cos()]
}

pub fn glued(n: usize, parts: impl Fn((f64, f64)) -> Vec<Vec<f64>>) -> MapSlice {
    let s2 = TargetManifold::sphere(3);
    MapSlice::from_fn(Mark::square(), n, n, 3, |x, y| {
        let pieces = parts((x, y));
        let mut v = NORTH.to_vec();
        for piece in &pieces {
            for d in 0..3 {
                v[d] += piece[d] - NORTH[d];
            }
        }
        s2.project(&v)
    })
    .unwrap()
}
