//! The outer min-max loop: smooth, reparametrize, cover, tighten.

use rayon::prelude::*;
use serde::Serialize;

use super::covering::{build_covering, CoveringOptions};
use super::reparam::{conformal_slice, ReparamOptions};
use super::smooth::{smooth_sweepout, SmoothOptions};
use super::tighten::{tighten, verify_property_star, TightenOptions};
use super::{is_constant, Sweepout};
use crate::error::Result;
use crate::harmonic::{energy, CandidateFamily, MapSlice, TargetManifold};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriveOptions {
    pub rounds: usize,
    /// `δ_n = delta0 / 2ⁿ`.
    pub delta0: f64,
    pub uniformize_tol: f64,
    pub smooth: SmoothOptions,
    pub covering: CoveringOptions,
    pub tighten: TightenOptions,
    pub eps0: f64,
    pub property_samples: usize,
    pub seed: u64,
    /// Stop once a round lowers the max energy by less than this.
    pub stop_tol: f64,
}

impl DriveOptions {
    pub fn new(eps1: f64) -> Self {
        let covering = CoveringOptions {
            family: CandidateFamily { stride: 8, ..CandidateFamily::default() },
            time_stride: 4,
            strict: false,
            ..CoveringOptions::new(eps1)
        };
        DriveOptions {
            rounds: 5,
            delta0: 1e-2,
            uniformize_tol: 1e-10,
            smooth: SmoothOptions { width: 0.0, patch: None },
            covering,
            tighten: TightenOptions::default(),
            eps0: eps1 / 12.0,
            property_samples: 8,
            seed: 0,
            stop_tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundRecord {
    pub round: usize,
    pub delta: f64,
    pub max_energy: f64,
    pub max_area: f64,
    /// `max E − max Area`.
    pub gap: f64,
    /// `E − Area` on the energy-maximising slice.
    pub gap_at_max: f64,
    pub worst_property_star: f64,
    /// Drop of the max energy over the round.
    pub energy_drop: f64,
    pub argmax: usize,
    pub tents: usize,
    /// Most tents active at one time sample.
    pub max_active: usize,
    /// Largest per-slice energy increase across tightening; never positive
    /// when replacements are accepted correctly.
    pub tighten_increase: f64,
    pub stationary: usize,
    /// Slices where smoothing or reparametrization was rejected for
    /// raising the energy.
    pub rejected_smoothing: usize,
    pub rejected_reparam: usize,
    /// Slices whose uniformization failed; they keep their previous mark.
    pub failed_reparam: usize,
}

#[derive(Clone, Debug)]
pub struct DriveHistory {
    pub initial_max_energy: f64,
    pub rounds: Vec<RoundRecord>,
    pub last: Sweepout,
    /// The last round lowered the max energy by less than the stop tolerance.
    pub converged: bool,
}

/// Keeps each candidate slice only where it does not raise the energy.
fn accept_non_increasing(old: &Sweepout, new: Sweepout) -> (Sweepout, usize) {
    let mut rejected = 0;
    let slices = old
        .slices
        .iter()
        .zip(new.slices)
        .map(|(a, b): (&MapSlice, MapSlice)| {
            if energy(&b) <= energy(a) {
                b
            } else {
                rejected += 1;
                a.clone()
            }
        })
        .collect();
    (Sweepout { times: old.times.clone(), slices, endpoints: old.endpoints }, rejected)
}

/// Conformal reparametrization of every non-constant interior slice, kept
/// only where it succeeds and does not raise the energy. Returns the counts
/// of rejected and failed slices.
fn reparametrize_where_possible(s: &Sweepout, target: &TargetManifold, opts: &ReparamOptions) -> (Sweepout, usize, usize) {
    let interior = s.interior();
    let results: Vec<(MapSlice, bool, bool)> = s
        .slices
        .par_iter()
        .enumerate()
        .map(|(i, u)| {
            if !interior.contains(&i) || is_constant(u) {
                return (u.clone(), false, false);
            }
            match conformal_slice(u, target, opts) {
                Ok((v, _)) if energy(&v) <= energy(u) => (v, false, false),
                Ok(_) => (u.clone(), true, false),
                Err(_) => (u.clone(), false, true),
            }
        })
        .collect();
    let rejected = results.iter().filter(|r| r.1).count();
    let failed = results.iter().filter(|r| r.2).count();
    let slices = results.into_iter().map(|r| r.0).collect();
    (Sweepout { times: s.times.clone(), slices, endpoints: s.endpoints }, rejected, failed)
}

fn max_energy_and_area(s: &Sweepout) -> (usize, f64, f64, f64) {
    let ea = s.energies_and_areas();
    let (argmax, &(e, a)) = ea
        .iter()
        .enumerate()
        .fold((0, &ea[0]), |best, (i, p)| if p.0 > best.1 .0 { (i, p) } else { best });
    let max_area = ea.iter().map(|p| p.1).fold(0.0, f64::max);
    (argmax, e, a, max_area)
}

/// Runs up to `rounds` rounds of smooth → reparametrize(`δ_n`) → cover →
/// tighten. Smoothing and reparametrization are accepted per slice only
/// where they do not raise the energy, so the max energy never increases.
/// A slice whose uniformization fails keeps its mark for the round.
pub fn minmax_drive(initial: &Sweepout, target: &TargetManifold, opts: &DriveOptions) -> Result<DriveHistory> {
    let (_, initial_max, _, _) = max_energy_and_area(initial);
    let mut current = initial.clone();
    let mut previous = initial_max;
    let mut rounds = Vec::new();
    let mut converged = false;
    for n in 0..opts.rounds {
        let delta = opts.delta0 * 0.5f64.powi(n as i32);
        let (smoothed, _) = smooth_sweepout(&current, target, &opts.smooth).map_err(|e| e.in_stage("smooth"))?;
        let (smoothed, rejected_smoothing) = accept_non_increasing(&current, smoothed);
        let reparam = ReparamOptions { delta, tol: opts.uniformize_tol };
        let (conformal, rejected_reparam, failed_reparam) = reparametrize_where_possible(&smoothed, target, &reparam);
        let schedule = build_covering(&conformal, target, &opts.covering).map_err(|e| e.in_stage("covering"))?;
        let (tightened, report) =
            tighten(&conformal, target, &schedule, &opts.tighten).map_err(|e| e.in_stage("tighten"))?;
        let tighten_increase = report
            .energy_before
            .iter()
            .zip(&report.energy_after)
            .map(|(b, a)| a - b)
            .fold(f64::NEG_INFINITY, f64::max);

        let (argmax, e, a, max_area) = max_energy_and_area(&tightened);
        let star = verify_property_star(
            &tightened.slices[argmax],
            target,
            opts.eps0,
            opts.property_samples,
            opts.seed.wrapping_add(n as u64),
            &opts.tighten.replace,
        )
        .map_err(|e| e.in_stage("property star"))?;
        let drop = previous - e;
        rounds.push(RoundRecord {
            round: n,
            delta,
            max_energy: e,
            max_area,
            gap: e - max_area,
            gap_at_max: e - a,
            worst_property_star: star.worst,
            energy_drop: drop,
            argmax,
            tents: schedule.tents.len(),
            max_active: schedule.max_active(&conformal.times),
            tighten_increase,
            stationary: schedule.stationary.len(),
            rejected_smoothing,
            rejected_reparam,
            failed_reparam,
        });
        current = tightened;
        previous = e;
        if drop < opts.stop_tol {
            converged = true;
            break;
        }
    }
    Ok(DriveHistory { initial_max_energy: initial_max, rounds, last: current, converged })
}
