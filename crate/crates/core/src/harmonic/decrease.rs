//! Largest energy drop from replacing on half of a small-energy collection.

use rayon::prelude::*;
use serde::Serialize;

use super::energy::{cell_energies, masked_sum};
use super::replace::{harmonic_replace, ReplaceOptions};
use super::slice::{shortest_period, torus_displacement, Ball, BallCollection, MapSlice};
use super::target::TargetManifold;
use crate::error::Result;

/// Dyadic candidate balls: centers every `stride` nodes in both grid
/// directions, radii `base/2^j` for `j < levels`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CandidateFamily {
    pub stride: usize,
    pub levels: usize,
    /// Largest radius as a fraction of the shortest period.
    pub base_fraction: f64,
    /// Radii below this many grid spacings are skipped.
    pub min_cells: f64,
}

impl Default for CandidateFamily {
    fn default() -> Self {
        CandidateFamily { stride: 4, levels: 4, base_fraction: 0.25, min_cells: 2.5 }
    }
}

impl CandidateFamily {
    pub fn balls(&self, u: &MapSlice) -> Vec<Ball> {
        let tau = u.tau();
        let spacing = (1.0 / u.cols() as f64).max((tau / u.rows() as f64).norm());
        let base = self.base_fraction * shortest_period(tau);
        let mut out = Vec::new();
        for j in 0..self.levels {
            let radius = base / f64::powi(2.0, j as i32);
            if radius < self.min_cells * spacing {
                break;
            }
            for r in (0..u.rows()).step_by(self.stride.max(1)) {
                for c in (0..u.cols()).step_by(self.stride.max(1)) {
                    out.push(Ball::at_node(u.rows(), u.cols(), r, c, radius));
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyDecrease {
    /// Best `E(u) − E[H(u, ½𝓑)]` found.
    pub value: f64,
    pub collection: BallCollection,
    /// Number of admissible candidate balls.
    pub admissible: usize,
    /// Set when no candidate satisfied the energy bound.
    pub empty: bool,
}

/// Lower bound for the supremum over ball collections with `E(u, 𝓑) ≤ ε`
/// of the drop from replacing on `½𝓑`.
///
/// Every admissible single ball is tried; then the disjoint balls with the
/// largest individual drops are merged greedily while the energy bound
/// allows, and the merged collection is kept if it does better.
pub fn max_energy_decrease(
    u: &MapSlice,
    target: &TargetManifold,
    epsilon: f64,
    family: &CandidateFamily,
    opts: &ReplaceOptions,
) -> Result<EnergyDecrease> {
    let cells = cell_energies(u);
    let e_u: f64 = cells.iter().sum();
    let tau = u.tau();
    let admissible: Vec<(Ball, f64)> = family
        .balls(u)
        .into_iter()
        .filter_map(|b| {
            let e = masked_sum(&cells, &BallCollection::single(b).mask(tau, u.rows(), u.cols())).value;
            (e <= epsilon).then_some((b, e))
        })
        .collect();
    if admissible.is_empty() {
        return Ok(EnergyDecrease { value: 0.0, collection: BallCollection::default(), admissible: 0, empty: true });
    }
    let opts = opts.unchecked();
    let drops: Vec<f64> = admissible
        .par_iter()
        .map(|(b, _)| {
            harmonic_replace(u, target, &BallCollection::single(b.scaled(0.5)), &opts).map(|r| e_u - r.energy_after)
        })
        .collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..admissible.len()).collect();
    order.sort_by(|&a, &b| drops[b].total_cmp(&drops[a]).then(a.cmp(&b)));
    let best = order[0];
    let mut result = EnergyDecrease {
        value: drops[best].max(0.0),
        collection: BallCollection::single(admissible[best].0),
        admissible: admissible.len(),
        empty: false,
    };

    let mut chosen: Vec<Ball> = Vec::new();
    let mut budget = 0.0;
    for &i in &order {
        let (b, e) = admissible[i];
        if drops[i] <= 0.0 || budget + e > epsilon {
            continue;
        }
        if chosen.iter().all(|c| torus_displacement(tau, c.center, b.center).norm() >= c.radius + b.radius) {
            chosen.push(b);
            budget += e;
        }
    }
    if chosen.len() > 1 {
        let merged = BallCollection::new(chosen);
        let drop = e_u - harmonic_replace(u, target, &merged.scaled(0.5), &opts)?.energy_after;
        if drop > result.value {
            result.value = drop;
            result.collection = merged;
        }
    }
    Ok(result)
}
