//! Energy concentration radii and bubble extraction.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::classify::{classify_sequence, ClassifyOptions, Verdict};
use crate::error::{Error, Result};
use crate::harmonic::{
    cell_energies, energy_density, shortest_period, torus_displacement, torus_offset, GridGeometry, MapSlice,
};
use crate::interp;

/// Largest torus distance from a node to node `0`.
pub fn torus_diameter(tau: Complex64, rows: usize, cols: usize) -> f64 {
    let mut best: f64 = 0.0;
    for r in 0..rows {
        for c in 0..cols {
            let p = (c as f64 / cols as f64, r as f64 / rows as f64);
            best = best.max(torus_displacement(tau, (0.0, 0.0), p).norm());
        }
    }
    best
}

/// Distances and energies of the cells whose base nodes lie within `reach`
/// of the center; every such cell is included exactly once.
fn cells_within(u: &MapSlice, cells: &[f64], center: (f64, f64), reach: f64) -> Vec<(f64, f64)> {
    let tau = u.tau();
    let (rows, cols) = (u.rows() as i64, u.cols() as i64);
    let span = |len: i64, extent: f64| {
        let s = (extent * len as f64).ceil() as i64 + 1;
        if 2 * s + 1 >= len {
            (0, len - 1)
        } else {
            (-s, s)
        }
    };
    let (r_lo, r_hi) = span(rows, reach / tau.im);
    let (c_lo, c_hi) = span(cols, reach * (1.0 + tau.re.abs() / tau.im));
    let whole = (r_lo, c_lo) == (0, 0) && (r_hi, c_hi) == (rows - 1, cols - 1);
    let (r0, c0) = if whole { (0, 0) } else { ((center.1 * rows as f64).round() as i64, (center.0 * cols as f64).round() as i64) };
    let mut out = Vec::new();
    for dr in r_lo..=r_hi {
        for dc in c_lo..=c_hi {
            let k = u.index(r0 + dr, c0 + dc);
            let p = ((k % u.cols()) as f64 / cols as f64, (k / u.cols()) as f64 / rows as f64);
            let d = torus_displacement(tau, center, p).norm();
            if d < reach {
                out.push((d, cells[k]));
            }
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// `sup {r : E(u, B(x, r)) ≤ ε₁}` for precomputed cell energies, capped.
///
/// Ball energy is a step function of `r`, so the supremum is the distance
/// of the first cell whose inclusion pushes the energy above `ε₁`. The
/// search radius doubles until that cell is inside it.
fn radius_from_cells(u: &MapSlice, cells: &[f64], center: (f64, f64), eps1: f64, cap: f64) -> f64 {
    let h = GridGeometry::of(u).cell_area.sqrt();
    let mut reach = 4.0 * h;
    loop {
        let mut sum = 0.0;
        for (d, e) in cells_within(u, cells, center, reach) {
            sum += e;
            if sum > eps1 {
                return d.min(cap);
            }
        }
        if reach > cap {
            return cap;
        }
        reach *= 2.0;
    }
}

/// Concentration radius `r(x)` at one center.
pub fn concentration_radius(u: &MapSlice, center: (f64, f64), eps1: f64) -> Result<f64> {
    check_eps(eps1)?;
    let cap = torus_diameter(u.tau(), u.rows(), u.cols());
    Ok(radius_from_cells(u, &cell_energies(u), center, eps1, cap))
}

fn check_eps(eps1: f64) -> Result<()> {
    if !(eps1 > 0.0) {
        return Err(Error::Argument(format!("energy threshold must be positive, got {eps1}")));
    }
    Ok(())
}

/// Concentration radii on the nodes `(stride·i, stride·j)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadiusField {
    pub rows: usize,
    pub cols: usize,
    pub stride: usize,
    pub cap: f64,
    /// Row-major over the sampled nodes.
    pub radii: Vec<f64>,
}

impl RadiusField {
    pub fn sampled_rows(&self) -> usize {
        self.rows.div_ceil(self.stride)
    }

    pub fn sampled_cols(&self) -> usize {
        self.cols.div_ceil(self.stride)
    }

    /// Parameter coordinates of sample `i`.
    pub fn center(&self, i: usize) -> (f64, f64) {
        let (r, c) = (i / self.sampled_cols() * self.stride, i % self.sampled_cols() * self.stride);
        (c as f64 / self.cols as f64, r as f64 / self.rows as f64)
    }

    pub fn min(&self) -> f64 {
        self.radii.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn concentration_radii(u: &MapSlice, eps1: f64, stride: usize) -> Result<RadiusField> {
    check_eps(eps1)?;
    if stride == 0 {
        return Err(Error::Argument("sampling stride must be positive".into()));
    }
    let cap = torus_diameter(u.tau(), u.rows(), u.cols());
    let cells = cell_energies(u);
    let mut field = RadiusField { rows: u.rows(), cols: u.cols(), stride, cap, radii: Vec::new() };
    let count = field.sampled_rows() * field.sampled_cols();
    field.radii = (0..count)
        .into_par_iter()
        .map(|i| radius_from_cells(u, &cells, field.center(i), eps1, cap))
        .collect();
    Ok(field)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BubbleOptions {
    pub eps1: f64,
    /// Sampling stride for candidate centers; `0` picks about 32 per side.
    pub stride: usize,
    /// Smallest region radius in units of the concentration radius.
    pub core_factor: f64,
    /// Relative half width of the neck annulus around the region radius.
    pub neck_width: f64,
    /// Samples per side of the extracted bubble map.
    pub map_resolution: usize,
    pub classify: ClassifyOptions,
}

impl BubbleOptions {
    pub fn new(eps1: f64) -> Self {
        BubbleOptions {
            eps1,
            stride: 0,
            core_factor: 2.0,
            neck_width: 0.15,
            map_resolution: 33,
            classify: ClassifyOptions::default(),
        }
    }
}

/// The last slice rescaled about a concentration point: samples of
/// `u(x_i + r·y)` for `y` on a square grid covering the disk `|y| < radius`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BubbleMap {
    pub scale: f64,
    pub radius: f64,
    pub resolution: usize,
    pub dim: usize,
    /// `resolution²` points, row-major from `y = (−radius, −radius)`.
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Bubble {
    pub center: (f64, f64),
    /// Concentration radius at the center along the sequence.
    pub scales: Vec<f64>,
    /// Radius separating the bubble from the surrounding neck.
    pub region_radius: f64,
    pub energy: f64,
    pub depth: usize,
    pub parent: Option<usize>,
    pub map: BubbleMap,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BubbleTree {
    pub verdict: Verdict,
    pub tau_sequence: Vec<Complex64>,
    /// Last slice of the sequence, absent for a degenerating sequence.
    #[serde(skip)]
    pub body: Option<MapSlice>,
    pub body_energy: f64,
    pub bubbles: Vec<Bubble>,
    pub residual_neck_energy: f64,
    pub total_energy: f64,
    /// `|body + Σ bubbles + neck − total| / total`.
    pub identity_residual: f64,
}

/// Shrinks by more than a factor four and never grows.
fn shrinking(scales: &[f64]) -> bool {
    scales.len() >= 3
        && scales.windows(2).all(|w| w[1] <= w[0])
        && scales[scales.len() - 1] < 0.25 * scales[0]
}

/// Circle integral of the interpolated energy density.
fn circle_energy(u: &MapSlice, density: &[f64], shift: (f64, f64), center: (f64, f64), rho: f64) -> f64 {
    const ANGLES: usize = 96;
    let mut sum = 0.0;
    for j in 0..ANGLES {
        let theta = 2.0 * PI * (j as f64 + 0.5) / ANGLES as f64;
        let p = torus_offset(u.tau(), center, Complex64::from_polar(rho, theta));
        sum += interp::sample(density, u.rows(), u.cols(), p.0 - shift.0, p.1 - shift.1).max(0.0);
    }
    sum * 2.0 * PI * rho / ANGLES as f64
}

fn extract_map(u: &MapSlice, center: (f64, f64), scale: f64, radius: f64, resolution: usize) -> BubbleMap {
    let mut values = Vec::with_capacity(resolution * resolution * u.dim());
    let step = 2.0 * radius / (resolution.max(2) - 1) as f64;
    for i in 0..resolution {
        for j in 0..resolution {
            let y = Complex64::new(-radius + j as f64 * step, -radius + i as f64 * step);
            let p = torus_offset(u.tau(), center, y * scale);
            values.extend(interp::sample_vector(&u.values, u.rows(), u.cols(), u.dim(), p.0, p.1));
        }
    }
    BubbleMap { scale, radius, resolution, dim: u.dim(), values }
}

/// Finds concentration points along the sequence and partitions the
/// energy of its last slice into body, bubbles and necks.
///
/// Candidates are the sampled centers of the last slice in increasing order
/// of concentration radius, refined to the best node nearby. A candidate is
/// a concentration point when its radius shrinks along the sequence (last
/// below a quarter of the first, never growing). Each point gets a region
/// radius minimising the circle integral of `|∇u|²` between
/// `core_factor · r` and half the distance to the other points; the neck is
/// the annulus of relative half width `neck_width` around it. A point lying
/// within `4 r` of a coarser point is nested below it. Cells are assigned to
/// the innermost region containing them, so the partition is exact.
pub fn extract_bubbles(sequence: &[MapSlice], opts: &BubbleOptions) -> Result<BubbleTree> {
    check_eps(opts.eps1)?;
    if sequence.len() < 3 {
        return Err(Error::Precondition(format!(
            "bubble extraction needs at least 3 slices to estimate trends, got {}",
            sequence.len()
        )));
    }
    let last = &sequence[sequence.len() - 1];
    for (i, s) in sequence.iter().enumerate() {
        if (s.rows(), s.cols(), s.dim()) != (last.rows(), last.cols(), last.dim()) {
            return Err(Error::Size("slices differ in grid size or dimension".into()).at_slice(i));
        }
    }
    let marks: Vec<_> = sequence.iter().map(|s| s.mark).collect();
    let verdict = classify_sequence(&marks, &opts.classify)?;

    let stride = if opts.stride == 0 { (last.rows().max(last.cols()) / 32).max(1) } else { opts.stride };
    let field = concentration_radii(last, opts.eps1, stride)?;
    let cells: Vec<Vec<f64>> = sequence.iter().map(cell_energies).collect();
    let last_cells = &cells[cells.len() - 1];
    let total_energy: f64 = last_cells.iter().sum();
    let cap = field.cap;
    let max_points = (total_energy / opts.eps1).ceil() as usize;

    // Local minima of the sampled radius field.
    let (sr, sc) = (field.sampled_rows() as i64, field.sampled_cols() as i64);
    let local_min = |i: usize| {
        let (r, c) = (i as i64 / sc, i as i64 % sc);
        (-1..=1).all(|a: i64| {
            (-1..=1).all(|b: i64| {
                let j = ((r + a).rem_euclid(sr) * sc + (c + b).rem_euclid(sc)) as usize;
                field.radii[i] <= field.radii[j]
            })
        })
    };
    let mut order: Vec<usize> =
        (0..field.radii.len()).filter(|&i| field.radii[i] < 0.25 * cap && local_min(i)).collect();
    order.sort_by(|&a, &b| field.radii[a].total_cmp(&field.radii[b]));

    let tau = last.tau();
    let mut points: Vec<((f64, f64), Vec<f64>)> = Vec::new();
    for i in order {
        if points.len() >= max_points {
            break;
        }
        let rough = field.center(i);
        if points.iter().any(|(c, s)| torus_displacement(tau, *c, rough).norm() < s[0] + 2.0 * stride as f64 / last.cols() as f64) {
            continue;
        }
        // Refine to the best node within one stride.
        let (r0, c0) = ((rough.1 * last.rows() as f64).round() as i64, (rough.0 * last.cols() as f64).round() as i64);
        let s = stride as i64;
        let mut best = (field.radii[i], rough);
        for dr in -s..=s {
            for dc in -s..=s {
                let k = last.index(r0 + dr, c0 + dc);
                let p = ((k % last.cols()) as f64 / last.cols() as f64, (k / last.cols()) as f64 / last.rows() as f64);
                let r = radius_from_cells(last, last_cells, p, opts.eps1, cap);
                if r < best.0 {
                    best = (r, p);
                }
            }
        }
        let center = best.1;
        let scales: Vec<f64> =
            sequence.iter().zip(&cells).map(|(u, c)| radius_from_cells(u, c, center, opts.eps1, cap)).collect();
        if shrinking(&scales) {
            points.push((center, scales));
        }
    }

    // Nesting: a point within 4r of a point with larger final radius.
    let n = points.len();
    let final_scale = |i: usize| points[i].1[points[i].1.len() - 1];
    let distance = |i: usize, j: usize| torus_displacement(tau, points[i].0, points[j].0).norm();
    let parent: Vec<Option<usize>> = (0..n)
        .map(|j| {
            (0..n)
                .filter(|&i| i != j && final_scale(i) > final_scale(j) && distance(i, j) < 4.0 * final_scale(i))
                .min_by(|&a, &b| final_scale(a).total_cmp(&final_scale(b)))
        })
        .collect();
    let depth = |mut j: usize| {
        let mut d = 1;
        while let Some(p) = parent[j] {
            d += 1;
            j = p;
        }
        d
    };

    let density = energy_density(last);
    let shift = GridGeometry::of(last).cell_center(0);
    let limit = 0.45 * shortest_period(tau);
    let w = opts.neck_width;
    let mut regions = Vec::with_capacity(n);
    for (j, point) in points.iter().enumerate() {
        let mut outer = limit / (1.0 + w);
        for (i, p) in parent.iter().enumerate() {
            // A region covers its children but stays clear of everything else.
            if i != j && *p != Some(j) {
                outer = outer.min(0.5 * distance(i, j) / (1.0 + w));
            }
        }
        let inner = (opts.core_factor * final_scale(j)).min(outer);
        let steps = 64;
        let mut best = (f64::INFINITY, outer);
        for s in 0..=steps {
            let rho = inner * (outer / inner).powf(s as f64 / steps as f64);
            let e = circle_energy(last, &density, shift, point.0, rho);
            if e < best.0 {
                best = (e, rho);
            }
        }
        regions.push(best.1);
    }

    // Assign cells to the innermost region containing them.
    let mut bubble_energy = vec![0.0; n];
    let mut neck_energy = 0.0;
    let mut body_energy = 0.0;
    let cols = last.cols();
    for (k, &e) in last_cells.iter().enumerate() {
        let p = ((k % cols) as f64 / cols as f64, (k / cols) as f64 / last.rows() as f64);
        let mut owner: Option<(usize, bool, f64)> = None;
        for j in 0..n {
            let d = torus_displacement(tau, points[j].0, p).norm();
            if d < regions[j] * (1.0 + w) && owner.is_none_or(|o| regions[j] < o.2) {
                owner = Some((j, d < regions[j] * (1.0 - w), regions[j]));
            }
        }
        match owner {
            Some((j, true, _)) => bubble_energy[j] += e,
            Some((_, false, _)) => neck_energy += e,
            None => body_energy += e,
        }
    }

    let bubbles: Vec<Bubble> = (0..n)
        .map(|j| {
            let scale = final_scale(j);
            let radius = regions[j] * (1.0 - w) / scale;
            Bubble {
                center: points[j].0,
                scales: points[j].1.clone(),
                region_radius: regions[j],
                energy: bubble_energy[j],
                depth: depth(j),
                parent: parent[j],
                map: extract_map(last, points[j].0, scale, radius, opts.map_resolution),
            }
        })
        .collect();
    let accounted = body_energy + bubble_energy.iter().sum::<f64>() + neck_energy;
    let identity_residual =
        if total_energy > 0.0 { (accounted - total_energy).abs() / total_energy } else { accounted.abs() };
    Ok(BubbleTree {
        body: (verdict != Verdict::Degenerate).then(|| last.clone()),
        verdict,
        tau_sequence: sequence.iter().map(|s| s.tau()).collect(),
        body_energy,
        bubbles,
        residual_neck_energy: neck_energy,
        total_energy,
        identity_residual,
    })
}
