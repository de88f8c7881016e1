//! Radius selection on balls and collar interpolation between boundary loops.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::energy::{energy_density, GridGeometry};
use super::slice::{shortest_period, torus_offset, MapSlice};
use super::target::TargetManifold;
use crate::error::{Error, Result};
use crate::interp;

const ANNULUS_RADII: usize = 16;
const INNER_RADII: usize = 48;
const ANGLES: usize = 128;

/// Radius picked in `[3R/4, R]` with the smallest circle integral of `|∇u|²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadiusChoice {
    pub radius: f64,
    /// `∮_{∂B_r} |∇u|²`
    pub boundary_energy: f64,
    /// `∫_{B_R} |∇u|²`
    pub ball_energy: f64,
}

/// Scans radii in `[3R/4, R]` by polar quadrature of the interpolated
/// energy density. The ball integral reuses the annulus samples, so the
/// returned radius satisfies `∮ ≤ (4/R) ∫_{B_R} ≤ (9/r) ∫_{B_R}`.
pub fn courant_lebesgue_radius(u: &MapSlice, center: (f64, f64), radius: f64) -> Result<RadiusChoice> {
    let tau = u.tau();
    let limit = 0.5 * shortest_period(tau);
    if !(radius > 0.0) || radius >= limit {
        return Err(Error::Geometry(format!("ball of radius {radius} does not fit in the torus (limit {limit})")));
    }
    let geom = GridGeometry::of(u);
    let density = energy_density(u);
    let shift = geom.cell_center(0);
    let sample = |p: (f64, f64)| {
        interp::sample(&density, u.rows(), u.cols(), p.0 - shift.0, p.1 - shift.1).max(0.0)
    };
    let circle = |rho: f64| {
        let mut sum = 0.0;
        for j in 0..ANGLES {
            let theta = 2.0 * PI * (j as f64 + 0.5) / ANGLES as f64;
            sum += sample(torus_offset(tau, center, Complex64::from_polar(rho, theta)));
        }
        sum * 2.0 * PI * rho / ANGLES as f64
    };
    let inner_edge = 0.75 * radius;
    let dr_in = inner_edge / INNER_RADII as f64;
    let inner: f64 = (0..INNER_RADII).map(|i| circle((i as f64 + 0.5) * dr_in) * dr_in).sum();
    let dr = (radius - inner_edge) / ANNULUS_RADII as f64;
    let mut best = (f64::INFINITY, 0.0);
    let mut annulus = 0.0;
    for i in 0..ANNULUS_RADII {
        let rho = inner_edge + (i as f64 + 0.5) * dr;
        let c = circle(rho);
        annulus += c * dr;
        if c < best.0 {
            best = (c, rho);
        }
    }
    Ok(RadiusChoice { radius: best.1, boundary_energy: best.0, ball_energy: inner + annulus })
}

/// Annulus map between an outer loop `f` and an inner loop `g`.
#[derive(Clone, Debug, PartialEq)]
pub struct Collar {
    pub rho: f64,
    /// `∫ |∇w|²` over the annulus `B_R \ B_{R−ρ}`.
    pub energy: f64,
    /// `(R∮|f'|²+|g'|²)^{1/2} (R∮|f'−g'|²)^{1/2}`
    pub bound_shape: f64,
    /// Values at `radial_levels` circles from `r = R` inwards, each
    /// holding the loop samples interleaved by dimension.
    pub values: Vec<f64>,
    pub radial_levels: usize,
}

/// Fourth-order periodic derivative of a sampled loop in `θ`.
fn loop_derivative(points: &[f64], dim: usize) -> Vec<f64> {
    let m = points.len() / dim;
    let h = 2.0 * PI / m as f64;
    let at = |j: i64, d: usize| points[j.rem_euclid(m as i64) as usize * dim + d];
    let mut out = Vec::with_capacity(points.len());
    for j in 0..m as i64 {
        for d in 0..dim {
            out.push((8.0 * (at(j + 1, d) - at(j - 1, d)) - (at(j + 2, d) - at(j - 2, d))) / (12.0 * h));
        }
    }
    out
}

fn loop_integral(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum::<f64>() * 2.0 * PI / values.len() as f64
}

/// Builds `w = Π((1 − s) f + s g)` on `r = R − ρ s`, `s ∈ [0, 1]`.
///
/// Both loops hold `M` samples at equally spaced angles, `dim` values each.
/// Without an explicit `rho` the width balancing the radial and angular
/// energy is used, `ρ = R (∮|f−g|² / ∮(|f'|²+|g'|²))^{1/2}` capped at `R/2`.
pub fn collar_interpolate(
    target: &TargetManifold,
    outer: &[f64],
    inner: &[f64],
    radius: f64,
    rho: Option<f64>,
    radial_levels: usize,
) -> Result<Collar> {
    let dim = target.ambient_dim();
    if outer.len() != inner.len() || outer.is_empty() || !outer.len().is_multiple_of(dim) {
        return Err(Error::Size("boundary loops must have the same number of samples".into()));
    }
    if radial_levels < 3 {
        return Err(Error::Argument("need at least three radial levels".into()));
    }
    let m = outer.len() / dim;
    let agree = (0..m).any(|j| {
        outer[j * dim..(j + 1) * dim].iter().zip(&inner[j * dim..(j + 1) * dim]).all(|(a, b)| (a - b).abs() <= 1e-12)
    });
    if !agree {
        return Err(Error::Precondition("boundary loops do not agree at any sample".into()));
    }
    let df = loop_derivative(outer, dim);
    let dg = loop_derivative(inner, dim);
    let diff: Vec<f64> = df.iter().zip(&dg).map(|(a, b)| a - b).collect();
    let tangential = loop_integral(&df) + loop_integral(&dg);
    let bound_shape = (tangential * loop_integral(&diff)).sqrt();
    let gap: Vec<f64> = outer.iter().zip(inner).map(|(a, b)| a - b).collect();
    let rho = match rho {
        Some(r) if r > 0.0 && r <= 0.5 * radius => r,
        Some(r) => return Err(Error::Argument(format!("collar width {r} must lie in (0, R/2]"))),
        None if tangential > 0.0 => (radius * (loop_integral(&gap) / tangential).sqrt()).min(0.5 * radius),
        None => 0.0,
    };

    let levels = radial_levels;
    let mut values = Vec::with_capacity(levels * outer.len());
    for i in 0..levels {
        let s = i as f64 / (levels - 1) as f64;
        for j in 0..m {
            let mut p: Vec<f64> =
                (0..dim).map(|d| (1.0 - s) * outer[j * dim + d] + s * inner[j * dim + d]).collect();
            let dist = target.distance(&p);
            if dist >= 0.9 * target.reach() {
                return Err(Error::Geometry(format!(
                    "blend leaves the tubular neighbourhood (distance {dist}) at level {i}, sample {j}"
                )));
            }
            target.project_in_place(&mut p);
            values.extend(p);
        }
    }
    if rho == 0.0 {
        return Ok(Collar { rho, energy: 0.0, bound_shape, values, radial_levels: levels });
    }

    // ½ ∫∫ (|w_r|² + |w_θ|² / r²) r dr dθ with r = R − ρ s.
    let ds = 1.0 / (levels - 1) as f64;
    let stride = m * dim;
    let mut energy = 0.0;
    for i in 0..levels {
        let s = i as f64 * ds;
        let r = radius - rho * s;
        let level = &values[i * stride..(i + 1) * stride];
        let w_theta = loop_derivative(level, dim);
        let w_s: Vec<f64> = (0..stride)
            .map(|k| {
                let v = |l: usize| values[l * stride + k];
                if i == 0 {
                    (-3.0 * v(0) + 4.0 * v(1) - v(2)) / (2.0 * ds)
                } else if i == levels - 1 {
                    (3.0 * v(i) - 4.0 * v(i - 1) + v(i - 2)) / (2.0 * ds)
                } else {
                    (v(i + 1) - v(i - 1)) / (2.0 * ds)
                }
            })
            .collect();
        let radial = loop_integral(&w_s) / (rho * rho);
        let angular = loop_integral(&w_theta) / (r * r);
        let weight = if i == 0 || i == levels - 1 { 0.5 } else { 1.0 };
        energy += weight * (radial + angular) * r * rho * ds;
    }
    Ok(Collar { rho, energy, bound_shape, values, radial_levels: levels })
}
