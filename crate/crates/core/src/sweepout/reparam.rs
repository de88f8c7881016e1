//! Almost-conformal reparametrization of every slice.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{is_constant, Sweepout};
use crate::beltrami::{uniformize, MetricField, UniformizationResult};
use crate::error::{Error, Result};
use crate::harmonic::{energy_and_area, MapSlice, TargetManifold};
use crate::interp;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReparamOptions {
    /// Multiple of the flat parameter metric added before uniformizing.
    pub delta: f64,
    /// Tolerance of the Beltrami iteration.
    pub tol: f64,
}

impl Default for ReparamOptions {
    fn default() -> Self {
        ReparamOptions { delta: 1e-2, tol: 1e-10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReparamReport {
    pub delta: f64,
    pub marks: Vec<Complex64>,
    /// `E − Area` per slice before and after.
    pub defects_before: Vec<f64>,
    pub defects: Vec<f64>,
    /// Continuum defect of the uniformizing map of the regularized metric.
    pub conformal_defects: Vec<f64>,
    pub max_defect: f64,
    /// `max_defect / √δ`, the constant in the `E ≤ Area + C√δ` envelope.
    pub envelope: f64,
}

/// `u ∘ h` on the grid of the `{1, τ}` torus, with `h` the inverse map of
/// the uniformization (values are points of the parameter square).
pub fn compose_with_inverse(u: &MapSlice, result: &UniformizationResult) -> Result<MapSlice> {
    let h = result
        .h_grid
        .as_ref()
        .ok_or_else(|| Error::Precondition("uniformization carries no inverse map".into()))?;
    if h.len() != u.nodes() || (result.rows(), result.cols()) != (u.rows(), u.cols()) {
        return Err(Error::Size("inverse map and slice live on different grids".into()));
    }
    let mut values = Vec::with_capacity(u.values.len());
    for p in h {
        values.extend(interp::sample_vector(&u.values, u.rows(), u.cols(), u.dim(), p.re, p.im));
    }
    let mut out = MapSlice::new(result.mark, u.rows(), u.cols(), u.dim(), values)?;
    out.frozen = u.frozen.clone();
    Ok(out)
}

/// Reparametrizes one slice over the uniformizing torus of its regularized
/// pullback metric; also returns the conformal defect of that uniformization.
pub fn conformal_slice(u: &MapSlice, target: &TargetManifold, opts: &ReparamOptions) -> Result<(MapSlice, f64)> {
    let (ux, uy) = u.parameter_gradients();
    let g = MetricField::pullback(u.rows(), u.cols(), u.dim(), &ux, &uy)?;
    let result = uniformize(&g, opts.delta, opts.tol)?;
    let mut out = compose_with_inverse(u, &result)?;
    out.project(target);
    Ok((out, result.conformal_defect.unwrap_or(0.0)))
}

/// Pulls back, regularizes and uniformizes every non-constant interior
/// slice, composes it with the inverse map onto the new marked grid and
/// projects the interpolated values back onto the target.
pub fn reparametrize_conformal(
    s: &Sweepout,
    target: &TargetManifold,
    opts: &ReparamOptions,
) -> Result<(Sweepout, ReparamReport)> {
    if !(opts.delta >= 0.0) || !(opts.tol > 0.0) {
        return Err(Error::Argument(format!("invalid reparametrization options {opts:?}")));
    }
    let interior = s.interior();
    let results: Vec<(MapSlice, f64, f64, f64)> = s
        .slices
        .par_iter()
        .enumerate()
        .map(|(i, u)| {
            let (e0, a0) = energy_and_area(u);
            if !interior.contains(&i) || is_constant(u) {
                return Ok((u.clone(), e0 - a0, e0 - a0, 0.0));
            }
            let (out, conformal) = conformal_slice(u, target, opts).map_err(|e| e.at_slice(i))?;
            let (e1, a1) = energy_and_area(&out);
            Ok((out, e0 - a0, e1 - a1, conformal))
        })
        .collect::<Result<_>>()?;
    let mut report = ReparamReport {
        delta: opts.delta,
        marks: Vec::new(),
        defects_before: Vec::new(),
        defects: Vec::new(),
        conformal_defects: Vec::new(),
        max_defect: 0.0,
        envelope: 0.0,
    };
    let mut slices = Vec::with_capacity(results.len());
    for (u, before, after, conformal) in results {
        report.marks.push(u.tau());
        report.defects_before.push(before);
        report.defects.push(after);
        report.conformal_defects.push(conformal);
        report.max_defect = report.max_defect.max(after);
        slices.push(u);
    }
    report.envelope = if opts.delta > 0.0 { report.max_defect / opts.delta.sqrt() } else { f64::INFINITY };
    Ok((Sweepout { times: s.times.clone(), slices, endpoints: s.endpoints }, report))
}
