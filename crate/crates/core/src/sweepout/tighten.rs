//! Harmonic-replacement tightening along a covering and the property-(*) probe.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::covering::CoveringSchedule;
use super::{is_constant, Continuity, Sweepout};
use crate::error::Result;
use crate::harmonic::{
    cell_energies, energy_and_area, gradient_distance_sq, harmonic_replace, masked_sum, shortest_period, Ball,
    BallCollection, MapSlice, ReplaceOptions, TargetManifold,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TightenOptions {
    pub replace: ReplaceOptions,
    /// Shrink factors sampled for the homotopy surrogate, from 1 down to 0.
    pub shrink_steps: usize,
}

impl Default for TightenOptions {
    fn default() -> Self {
        TightenOptions { replace: ReplaceOptions { tol: 1e-9, ..ReplaceOptions::default() }, shrink_steps: 4 }
    }
}

/// Deformation steps of `s ↦ H(σ(t), s·r_k(t)𝓑_k)` for `s` from 1 to 0 on
/// the slice with the largest drop.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HomotopySurrogate {
    pub slice: usize,
    pub factors: Vec<f64>,
    /// `sup |Δ| + ‖∇Δ‖` between consecutive members of the family.
    pub steps: Vec<f64>,
    pub max_step: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TighteningReport {
    pub energy_before: Vec<f64>,
    pub energy_after: Vec<f64>,
    pub area_after: Vec<f64>,
    /// Max-area estimate of the width.
    pub width_area: f64,
    /// Max-energy estimate of the width.
    pub width_energy: f64,
    pub max_drop: f64,
    pub drop_at: usize,
    pub continuity_before: Continuity,
    pub continuity_after: Continuity,
    pub homotopy: Option<HomotopySurrogate>,
    /// Tent applications skipped because the scaled balls did not fit.
    pub skipped: usize,
}

/// Applies every tent in order, `v ← H(v, r_k(t)𝓑_k)`, keeping `v` when a
/// replacement would raise the energy.
fn apply_tents(
    u: &MapSlice,
    t: f64,
    target: &TargetManifold,
    schedule: &CoveringSchedule,
    shrink: f64,
    opts: &ReplaceOptions,
) -> Result<(MapSlice, usize)> {
    let mut v = u.clone();
    let mut skipped = 0;
    let limit = 0.5 * shortest_period(u.tau());
    for (k, tent) in schedule.tents.iter().enumerate() {
        let r = shrink * tent.radius_factor(t);
        if r <= 0.0 {
            continue;
        }
        let balls = tent.balls.scaled(r);
        if balls.balls.iter().any(|b| b.radius >= limit) || balls.validate(u.tau()).is_err() {
            skipped += 1;
            continue;
        }
        let replaced = harmonic_replace(&v, target, &balls, &opts.unchecked()).map_err(|e| e.at_tent(k))?;
        if replaced.energy_after <= replaced.energy_before {
            v = replaced.slice;
        }
    }
    Ok((v, skipped))
}

fn step(a: &MapSlice, b: &MapSlice) -> f64 {
    a.sup_distance(b) + gradient_distance_sq(a, b).sqrt()
}

/// One tightening pass over the interior slices, independently per slice.
pub fn tighten(
    s: &Sweepout,
    target: &TargetManifold,
    schedule: &CoveringSchedule,
    opts: &TightenOptions,
) -> Result<(Sweepout, TighteningReport)> {
    let interior = s.interior();
    let results: Vec<(MapSlice, f64, f64, f64, usize)> = s
        .slices
        .par_iter()
        .enumerate()
        .map(|(i, u)| {
            let (e0, a0) = energy_and_area(u);
            if !interior.contains(&i) || schedule.tents.is_empty() {
                return Ok((u.clone(), e0, e0, a0, 0));
            }
            let (v, skipped) =
                apply_tents(u, s.times[i], target, schedule, 1.0, &opts.replace).map_err(|e| e.at_slice(i))?;
            let (e1, a1) = energy_and_area(&v);
            Ok((v, e0, e1, a1, skipped))
        })
        .collect::<Result<_>>()?;

    let mut slices = Vec::with_capacity(results.len());
    let mut report = TighteningReport {
        energy_before: vec![],
        energy_after: vec![],
        area_after: vec![],
        width_area: 0.0,
        width_energy: 0.0,
        max_drop: 0.0,
        drop_at: 0,
        continuity_before: s.continuity(),
        continuity_after: s.continuity(),
        homotopy: None,
        skipped: 0,
    };
    for (i, (v, e0, e1, a1, skipped)) in results.into_iter().enumerate() {
        report.energy_before.push(e0);
        report.energy_after.push(e1);
        report.area_after.push(a1);
        report.width_area = report.width_area.max(a1);
        report.width_energy = report.width_energy.max(e1);
        if e0 - e1 > report.max_drop {
            report.max_drop = e0 - e1;
            report.drop_at = i;
        }
        report.skipped += skipped;
        slices.push(v);
    }
    let out = Sweepout { times: s.times.clone(), slices, endpoints: s.endpoints };
    report.continuity_after = out.continuity();

    if report.max_drop > 0.0 && opts.shrink_steps > 0 {
        let i = report.drop_at;
        let factors: Vec<f64> = (0..=opts.shrink_steps).map(|j| 1.0 - j as f64 / opts.shrink_steps as f64).collect();
        let family: Vec<MapSlice> = factors
            .par_iter()
            .map(|&f| {
                if f == 1.0 {
                    Ok(out.slices[i].clone())
                } else {
                    apply_tents(&s.slices[i], s.times[i], target, schedule, f, &opts.replace).map(|(v, _)| v)
                }
            })
            .collect::<Result<_>>()
            .map_err(|e| e.at_slice(i))?;
        let steps: Vec<f64> = family.windows(2).map(|w| step(&w[0], &w[1])).collect();
        let max_step = steps.iter().copied().fold(0.0, f64::max);
        report.homotopy = Some(HomotopySurrogate { slice: i, factors, steps, max_step });
    }
    Ok((out, report))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyStar {
    /// Largest `∫|∇u − ∇v|²` with `v = H(u, ⅛𝓑)` over the samples.
    pub worst: f64,
    pub values: Vec<f64>,
    pub collections: Vec<BallCollection>,
    /// Centers where no admissible radius was found.
    pub rejected: usize,
}

/// Tests balls on a randomly shifted `k × k` lattice of centers, with
/// `k² ≥ samples`, and records `∫|∇u − ∇H(u, ⅛B)|²` for each.
///
/// Every center gets the largest radius `0.45 · 2^{−j/2}` times the shortest
/// period with `E(u, B) ≤ eps0`; a center is rejected once `⅛B` would be
/// narrower than 1.5 grid spacings. Collections of several far apart balls
/// add their values, so single balls bound the supremum from below.
pub fn verify_property_star(
    u: &MapSlice,
    target: &TargetManifold,
    eps0: f64,
    samples: usize,
    seed: u64,
    opts: &ReplaceOptions,
) -> Result<PropertyStar> {
    let mut result = PropertyStar { worst: 0.0, values: vec![], collections: vec![], rejected: 0 };
    if is_constant(u) || samples == 0 {
        return Ok(result);
    }
    let tau = u.tau();
    let period = shortest_period(tau);
    let spacing = (1.0 / u.cols() as f64).max((tau / u.rows() as f64).norm());
    let cells = cell_energies(u);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = (samples as f64).sqrt().ceil() as usize;
    let offset = (rng.gen::<f64>() / side as f64, rng.gen::<f64>() / side as f64);
    let centers: Vec<(f64, f64)> = (0..side * side)
        .map(|k| (offset.0 + (k % side) as f64 / side as f64, offset.1 + (k / side) as f64 / side as f64))
        .collect();
    let balls: Vec<Option<Ball>> = centers
        .par_iter()
        .map(|&center| {
            (0..)
                .map(|j| 0.45 * period * 0.5f64.powf(0.5 * j as f64))
                .take_while(|r| r / 8.0 >= 1.5 * spacing)
                .map(|r| Ball::new(center, r))
                .find(|&b| masked_sum(&cells, &BallCollection::single(b).mask(tau, u.rows(), u.cols())).value <= eps0)
        })
        .collect();
    let draws: Vec<BallCollection> = balls.iter().flatten().map(|&b| BallCollection::single(b)).collect();
    result.rejected = balls.len() - draws.len();
    let opts = opts.unchecked();
    let values: Vec<f64> = draws
        .par_iter()
        .map(|b| harmonic_replace(u, target, &b.scaled(0.125), &opts).map(|v| gradient_distance_sq(u, &v.slice)))
        .collect::<Result<_>>()?;
    result.worst = values.iter().copied().fold(0.0, f64::max);
    result.values = values;
    result.collections = draws;
    Ok(result)
}
