//! Tent-shaped coverings of the high-energy times by small-energy balls.

use rayon::prelude::*;
use serde::Serialize;

use super::{is_constant, Sweepout};
use crate::error::{Error, Result};
use crate::harmonic::{
    cell_energies, energy, harmonic_replace, masked_sum, max_energy_decrease, shortest_period, BallCollection,
    CandidateFamily, MapSlice, ReplaceOptions, TargetManifold,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoveringOptions {
    pub eps1: f64,
    pub family: CandidateFamily,
    pub replace: ReplaceOptions,
    /// Decreases at or below this count as a discretely harmonic slice.
    pub noise_floor: f64,
    /// Every `time_stride`-th time of the high-energy set is sampled; the
    /// energy maximiser always is.
    pub time_stride: usize,
    /// Fail on a harmonic slice instead of recording it as stationary.
    pub strict: bool,
}

impl CoveringOptions {
    pub fn new(eps1: f64) -> Self {
        CoveringOptions {
            eps1,
            family: CandidateFamily::default(),
            replace: ReplaceOptions { tol: 1e-9, ..ReplaceOptions::default() },
            noise_floor: 1e-6,
            time_stride: 1,
            strict: true,
        }
    }
}

/// One covering element: a ball collection and the piecewise-linear radius
/// factor `r(t)`, equal to one on `core` and zero outside `support`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Tent {
    pub balls: BallCollection,
    pub core: (f64, f64),
    pub support: (f64, f64),
    /// Slice index the collection was chosen on.
    pub source: usize,
    /// Energy decrease found at the source slice.
    pub decrease: f64,
}

impl Tent {
    pub fn radius_factor(&self, t: f64) -> f64 {
        let (a, b) = self.core;
        let (sa, sb) = self.support;
        if t >= a && t <= b {
            1.0
        } else if t < a && t > sa {
            (t - sa) / (a - sa)
        } else if t > b && t < sb {
            (sb - t) / (sb - b)
        } else {
            0.0
        }
    }

    pub fn is_active(&self, t: f64) -> bool {
        self.radius_factor(t) > 0.0
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CoveringSchedule {
    pub tents: Vec<Tent>,
    /// `½` of the running max-energy estimate.
    pub threshold: f64,
    pub max_energy_estimate: f64,
    /// High-energy slices with no measurable decrease.
    pub stationary: Vec<usize>,
    /// High-energy slices covered by no tent core.
    pub uncovered: Vec<usize>,
}

impl CoveringSchedule {
    pub fn active_count(&self, t: f64) -> usize {
        self.tents.iter().filter(|tent| tent.is_active(t)).count()
    }

    pub fn max_active(&self, times: &[f64]) -> usize {
        times.iter().map(|&t| self.active_count(t)).max().unwrap_or(0)
    }

    /// Checks that at most two tents are active at every time and that the
    /// scaled collections carry energy at most `ε₁/3`.
    pub fn validate(&self, s: &Sweepout, eps1: f64) -> Result<()> {
        for (i, (&t, u)) in s.times.iter().zip(&s.slices).enumerate() {
            let active = self.active_count(t);
            if active > 2 {
                return Err(Error::Precondition(format!("{active} tents are active at t = {t}")).at_slice(i));
            }
            for (k, tent) in self.tents.iter().enumerate() {
                let r = tent.radius_factor(t);
                if r > 0.0 {
                    let e = collection_energy(u, &tent.balls.scaled(r));
                    if e > eps1 / 3.0 {
                        return Err(Error::Precondition(format!("energy {e} on the balls exceeds eps1/3"))
                            .at_tent(k)
                            .at_slice(i));
                    }
                }
            }
        }
        Ok(())
    }
}

fn collection_energy(u: &MapSlice, balls: &BallCollection) -> f64 {
    masked_sum(&cell_energies(u), &balls.mask(u.tau(), u.rows(), u.cols())).value
}

/// The collection fits in the slice's torus.
fn fits(u: &MapSlice, balls: &BallCollection) -> bool {
    let limit = 0.5 * shortest_period(u.tau());
    balls.balls.iter().all(|b| b.radius < limit)
}

/// Whether slice `u` still sits in the interval grown from a source with
/// collection `balls` and decrease `drop`: small energy on `balls` and at
/// least half the decrease from replacing on `½ balls`.
fn continues(u: &MapSlice, target: &TargetManifold, balls: &BallCollection, drop: f64, opts: &CoveringOptions) -> Result<bool> {
    if is_constant(u) || !fits(u, balls) || collection_energy(u, balls) > opts.eps1 / 3.0 {
        return Ok(false);
    }
    let replaced = harmonic_replace(u, target, &balls.scaled(0.5), &opts.replace.unchecked())?;
    Ok(energy(u) - replaced.energy_after >= 0.5 * drop)
}

/// Builds the covering of `I = {t : E(σ(t)) ≥ ½ max E}`.
///
/// Each sampled time gets the best collection of `max_energy_decrease` at
/// level `ε₁/4`; its core interval grows over neighbouring slices while the
/// collection keeps small energy and at least half of the decrease. Ramps
/// reach out to twice the core, stop before the first slice where the
/// scaled collection is no longer small, and are trimmed so that at most
/// two tents are active at any sampled time.
pub fn build_covering(s: &Sweepout, target: &TargetManifold, opts: &CoveringOptions) -> Result<CoveringSchedule> {
    if !(opts.eps1 > 0.0) || !(opts.noise_floor >= 0.0) {
        return Err(Error::Argument(format!("invalid covering options: eps1 {}, noise floor {}", opts.eps1, opts.noise_floor)));
    }
    let energies: Vec<f64> = s.slices.par_iter().map(energy).collect();
    let interior = s.interior();
    let (argmax, w) = interior
        .clone()
        .fold((usize::MAX, 0.0), |best, i| if energies[i] > best.1 { (i, energies[i]) } else { best });
    let mut schedule = CoveringSchedule { threshold: 0.5 * w, max_energy_estimate: w, ..Default::default() };
    if argmax == usize::MAX {
        return Ok(schedule);
    }
    let high: Vec<usize> = interior.clone().filter(|&i| energies[i] >= 0.5 * w).collect();
    let stride = opts.time_stride.max(1);
    let mut sampled: Vec<usize> = high.iter().copied().step_by(stride).collect();
    if !sampled.contains(&argmax) {
        sampled.push(argmax);
        sampled.sort_unstable();
    }

    let decreases: Vec<(usize, f64, BallCollection)> = sampled
        .par_iter()
        .map(|&i| {
            let d = max_energy_decrease(&s.slices[i], target, opts.eps1 / 4.0, &opts.family, &opts.replace)
                .map_err(|e| e.at_slice(i))?;
            Ok((i, d.value, d.collection))
        })
        .collect::<Result<_>>()?;

    let h = 1.0 / (s.len() - 1) as f64;
    let mut candidates = Vec::new();
    for (i, drop, balls) in decreases {
        if drop <= opts.noise_floor || balls.is_empty() {
            if opts.strict {
                return Err(Error::Precondition(format!(
                    "high-energy slice is discretely harmonic (decrease {drop:e} at or below the noise floor)"
                ))
                .at_slice(i));
            }
            schedule.stationary.push(i);
            continue;
        }
        let (mut lo, mut hi) = (i, i);
        while lo - 1 > 0 && continues(&s.slices[lo - 1], target, &balls, drop, opts).map_err(|e| e.at_slice(lo - 1))? {
            lo -= 1;
        }
        while hi + 1 < interior.end
            && continues(&s.slices[hi + 1], target, &balls, drop, opts).map_err(|e| e.at_slice(hi + 1))?
        {
            hi += 1;
        }
        let core = (s.times[lo], s.times[hi]);
        let reach = (core.1 - core.0) / 2.0 + h;
        let mut tent = Tent { balls, core, support: (core.0 - reach, core.1 + reach), source: i, decrease: drop };
        clip_ramps(s, &mut tent, lo, hi, opts.eps1);
        candidates.push(tent);
    }

    // Greedy interval cover of the high-energy times by tent cores.
    let mut chosen: Vec<Tent> = Vec::new();
    let mut covered_to = f64::NEG_INFINITY;
    for &i in &high {
        let t = s.times[i];
        if t <= covered_to {
            continue;
        }
        let best = candidates
            .iter()
            .filter(|c| c.core.0 <= t && t <= c.core.1)
            .max_by(|a, b| a.core.1.total_cmp(&b.core.1).then(b.core.0.total_cmp(&a.core.0)));
        match best {
            Some(tent) => {
                covered_to = tent.core.1;
                chosen.push(tent.clone());
            }
            None if !schedule.stationary.contains(&i) => schedule.uncovered.push(i),
            None => {}
        }
    }
    chosen.sort_by(|a, b| a.core.0.total_cmp(&b.core.0));
    schedule.tents = chosen;
    trim_overlaps(&mut schedule, &s.times);
    Ok(schedule)
}

/// Pulls each ramp back to the first slice where it would be inadmissible:
/// an endpoint, or `E(σ(t), r(t)𝓑) > ε₁/3`.
fn clip_ramps(s: &Sweepout, tent: &mut Tent, lo: usize, hi: usize, eps1: f64) {
    let admissible = |i: usize, tent: &Tent| {
        let r = tent.radius_factor(s.times[i]);
        let u = &s.slices[i];
        let balls = tent.balls.scaled(r);
        !s.interior().contains(&i) || r <= 0.0 || (fits(u, &balls) && collection_energy(u, &balls) <= eps1 / 3.0)
    };
    let last = s.len() - 1;
    let mut i = lo;
    while i > 0 && tent.is_active(s.times[i - 1]) {
        i -= 1;
        if i == 0 || !admissible(i, tent) {
            tent.support.0 = s.times[i];
            break;
        }
    }
    let mut i = hi;
    while i < last && tent.is_active(s.times[i + 1]) {
        i += 1;
        if i == last || !admissible(i, tent) {
            tent.support.1 = s.times[i];
            break;
        }
    }
}

/// At a time with three or more active tents, the ramps of tents whose core
/// does not contain it are cut back to that time, farthest core first.
fn trim_overlaps(schedule: &mut CoveringSchedule, times: &[f64]) {
    for &t in times {
        while schedule.active_count(t) > 2 {
            let far = schedule
                .tents
                .iter()
                .enumerate()
                .filter(|(_, tent)| tent.is_active(t) && !(tent.core.0 <= t && t <= tent.core.1))
                .max_by(|(_, a), (_, b)| core_distance(a, t).total_cmp(&core_distance(b, t)))
                .map(|(k, _)| k);
            let Some(k) = far else { break };
            let tent = &mut schedule.tents[k];
            if t < tent.core.0 {
                tent.support.0 = t;
            } else {
                tent.support.1 = t;
            }
        }
    }
}

fn core_distance(tent: &Tent, t: f64) -> f64 {
    (tent.core.0 - t).max(t - tent.core.1).max(0.0)
}
