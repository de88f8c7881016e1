//! Spatial mollification of slices and the constant patch.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{is_constant, Sweepout};
use crate::error::{Error, Result};
use crate::harmonic::{energy, torus_displacement, Ball, MapSlice, TargetManifold};
use crate::periodic::{forward_transform, Lattice, PeriodicField};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SmoothOptions {
    /// Standard deviation of the Gaussian kernel in plane units.
    pub width: f64,
    /// Disk on which every interior slice is blended to a constant.
    pub patch: Option<Ball>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmoothingReport {
    pub energy_before: Vec<f64>,
    pub energy_after: Vec<f64>,
    /// `sup |u − ũ|` per slice.
    pub sup_change: Vec<f64>,
}

/// Heat-kernel mollification `e^{−w²|k|²/2}` on every component, without
/// projection. Plane frequencies of the mode `(m, n)` on the torus `{1, τ}`
/// are `2π (m, (n − m Re τ)/Im τ)`.
pub fn mollify(u: &MapSlice, width: f64) -> Vec<f64> {
    let (rows, cols, dim) = (u.rows(), u.cols(), u.dim());
    let tau = u.tau();
    let n = rows * cols;
    let mut out = vec![0.0; n * dim];
    for first in (0..dim).step_by(2) {
        let second = (first + 1 < dim).then_some(first + 1);
        let data: Vec<Complex64> = (0..n)
            .map(|k| Complex64::new(u.values[k * dim + first], second.map_or(0.0, |s| u.values[k * dim + s])))
            .collect();
        let field = PeriodicField::new(Lattice::new(u.mark), rows, cols, data).expect("slice shape is valid");
        let mut spectrum = forward_transform(&field);
        spectrum.apply(|m, nn, _, _| {
            let (kx, ky) = (m as f64, (nn as f64 - m as f64 * tau.re) / tau.im);
            let k2 = 4.0 * PI * PI * (kx * kx + ky * ky);
            Complex64::new((-0.5 * width * width * k2).exp(), 0.0)
        });
        let smooth = spectrum.inverse();
        for k in 0..n {
            out[k * dim + first] = smooth.data()[k].re;
            if let Some(s) = second {
                out[k * dim + s] = smooth.data()[k].im;
            }
        }
    }
    out
}

fn cutoff(s: f64) -> f64 {
    let g = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    let s = s.clamp(0.0, 1.0);
    g(1.0 - s) / (g(1.0 - s) + g(s))
}

/// Blends to the projected mean value on the patch: weight one on the
/// inner half of the disk, smoothly decaying to zero at its edge.
fn blend_patch(values: &mut [f64], u: &MapSlice, target: &TargetManifold, patch: &Ball) {
    let (rows, cols, dim) = (u.rows(), u.cols(), u.dim());
    let tau = u.tau();
    let mut weights = vec![0.0; rows * cols];
    let mut mean = vec![0.0; dim];
    let mut count = 0usize;
    for r in 0..rows {
        for c in 0..cols {
            let p = (c as f64 / cols as f64, r as f64 / rows as f64);
            let d = torus_displacement(tau, patch.center, p).norm() / patch.radius;
            let k = r * cols + c;
            if d < 1.0 {
                weights[k] = cutoff(2.0 * d - 1.0);
                for (m, v) in mean.iter_mut().zip(&values[k * dim..(k + 1) * dim]) {
                    *m += v;
                }
                count += 1;
            }
        }
    }
    if count == 0 {
        return;
    }
    let mean = target.project(&mean.iter().map(|m| m / count as f64).collect::<Vec<_>>());
    for (k, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            for (v, m) in values[k * dim..(k + 1) * dim].iter_mut().zip(&mean) {
                *v = (1.0 - w) * *v + w * m;
            }
        }
    }
}

/// Mollifies every non-constant interior slice, blends in the constant
/// patch and projects back to the target. Endpoints and constant slices are
/// left untouched.
pub fn smooth_sweepout(s: &Sweepout, target: &TargetManifold, opts: &SmoothOptions) -> Result<(Sweepout, SmoothingReport)> {
    if !(opts.width >= 0.0) {
        return Err(Error::Argument(format!("smoothing width must be nonnegative, got {}", opts.width)));
    }
    let interior = s.interior();
    let results: Vec<(MapSlice, f64, f64, f64)> = s
        .slices
        .par_iter()
        .enumerate()
        .map(|(i, u)| {
            let before = energy(u);
            if !interior.contains(&i) || is_constant(u) || (opts.width == 0.0 && opts.patch.is_none()) {
                return (u.clone(), before, before, 0.0);
            }
            let mut values = if opts.width > 0.0 { mollify(u, opts.width) } else { u.values.clone() };
            if let Some(patch) = &opts.patch {
                blend_patch(&mut values, u, target, patch);
            }
            let mut out = u.clone();
            out.values = values;
            out.project(target);
            let after = energy(&out);
            let change = out.sup_distance(u);
            (out, before, after, change)
        })
        .collect();
    let mut report = SmoothingReport { energy_before: vec![], energy_after: vec![], sup_change: vec![] };
    let mut slices = Vec::with_capacity(results.len());
    for (u, before, after, change) in results {
        slices.push(u);
        report.energy_before.push(before);
        report.energy_after.push(after);
        report.sup_change.push(change);
    }
    Ok((Sweepout { times: s.times.clone(), slices, endpoints: s.endpoints }, report))
}
