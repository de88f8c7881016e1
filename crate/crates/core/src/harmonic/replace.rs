//! Harmonic replacement on ball collections and the inequalities built on it.

use serde::Serialize;

use super::energy::{cell_energies, dirichlet_integral, energy, masked_sum, GridGeometry, Stencil};
use super::slice::{boundary_ring, BallCollection, MapSlice};
use super::target::{norm, TargetManifold};
use crate::error::{Error, Result};

/// Controls for [`harmonic_replace`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReplaceOptions {
    /// Stop once no node moves farther than this in a sweep and the
    /// tangential residual is below `tol / h²`.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Over-relaxation factor; steps that would raise the energy fall back
    /// to the exact local minimiser `Π(−r/K₀)`.
    pub omega: f64,
    /// Refuse when the energy on the balls exceeds this threshold.
    pub energy_threshold: Option<f64>,
}

impl Default for ReplaceOptions {
    fn default() -> Self {
        ReplaceOptions { tol: 1e-10, max_sweeps: 20_000, omega: 1.8, energy_threshold: None }
    }
}

impl ReplaceOptions {
    pub fn unchecked(self) -> Self {
        ReplaceOptions { energy_threshold: None, ..self }
    }
}

#[derive(Clone, Debug)]
pub struct Replacement {
    pub slice: MapSlice,
    pub converged: bool,
    pub sweeps: usize,
    pub last_move: f64,
    pub energy_before: f64,
    pub energy_after: f64,
}

/// Nodes that the replacement may move: inside the balls, off the
/// boundary ring, and not frozen.
pub fn free_nodes(u: &MapSlice, balls: &BallCollection) -> Vec<usize> {
    let mask = balls.mask(u.tau(), u.rows(), u.cols());
    let ring = boundary_ring(&mask, u.rows(), u.cols());
    let (rows, cols) = (u.rows(), u.cols());
    let mut red = Vec::new();
    let mut black = Vec::new();
    for k in 0..rows * cols {
        if mask[k] && !ring[k] && !u.frozen[k] {
            if (k / cols + k % cols) % 2 == 0 {
                red.push(k);
            } else {
                black.push(k);
            }
        }
    }
    red.extend(black);
    red
}

struct Relaxation<'a> {
    target: &'a TargetManifold,
    stencil: Stencil,
    nodes: Vec<usize>,
    neighbours: Vec<usize>,
    dim: usize,
}

impl<'a> Relaxation<'a> {
    fn new(u: &MapSlice, target: &'a TargetManifold, nodes: Vec<usize>) -> Self {
        let geom = GridGeometry::of(u);
        let stencil = geom.stencil();
        let mut neighbours = Vec::with_capacity(nodes.len() * stencil.neighbours.len());
        for &k in &nodes {
            for &(o, _) in &stencil.neighbours {
                neighbours.push(geom.shift(k, o));
            }
        }
        Relaxation { target, stencil, nodes, neighbours, dim: u.dim() }
    }

    /// `r = Σ_{o≠0} K_o u(x+o)` for the i-th free node.
    fn pull(&self, values: &[f64], i: usize, r: &mut [f64]) {
        r.iter_mut().for_each(|v| *v = 0.0);
        let width = self.stencil.neighbours.len();
        for (&m, &(_, w)) in self.neighbours[i * width..(i + 1) * width].iter().zip(&self.stencil.neighbours) {
            for (s, v) in r.iter_mut().zip(&values[m * self.dim..(m + 1) * self.dim]) {
                *s += w * v;
            }
        }
    }

    /// Change of the energy when the node value goes from `a` to `b`,
    /// written as `(b − a)·(K₀a + r) + ½K₀|b − a|²` to keep it accurate for
    /// small moves.
    fn local_change(&self, a: &[f64], b: &[f64], r: &[f64]) -> f64 {
        let k0 = self.stencil.center;
        let mut linear = 0.0;
        let mut quadratic = 0.0;
        for ((p, q), s) in b.iter().zip(a).zip(r) {
            let step = p - q;
            linear += step * (k0 * q + s);
            quadratic += step * step;
        }
        linear + 0.5 * k0 * quadratic
    }

    /// One sweep; returns the largest nodal move.
    fn sweep(&self, values: &mut [f64], omega: f64) -> f64 {
        let dim = self.dim;
        let k0 = self.stencil.center;
        let mut r = vec![0.0; dim];
        let mut best = vec![0.0; dim];
        let mut relaxed = vec![0.0; dim];
        let mut largest: f64 = 0.0;
        for (i, &k) in self.nodes.iter().enumerate() {
            self.pull(values, i, &mut r);
            let a = &values[k * dim..(k + 1) * dim];
            best.iter_mut().zip(&r).for_each(|(b, s)| *b = -s / k0);
            self.target.project_in_place(&mut best);
            let mut chosen = &best;
            if omega != 1.0 {
                relaxed.iter_mut().zip(a).zip(&best).for_each(|((x, p), q)| *x = p + omega * (q - p));
                self.target.project_in_place(&mut relaxed);
                if self.local_change(a, &relaxed, &r) <= 0.0 {
                    chosen = &relaxed;
                }
            }
            let step = a.iter().zip(chosen.iter()).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
            largest = largest.max(step);
            values[k * dim..(k + 1) * dim].copy_from_slice(chosen);
        }
        largest
    }

    /// Tangential part of `∂E/∂u_x` at each free node, divided by the cell area.
    fn tangential_residual(&self, values: &[f64], cell_area: f64) -> f64 {
        let dim = self.dim;
        let mut r = vec![0.0; dim];
        let mut worst: f64 = 0.0;
        for (i, &k) in self.nodes.iter().enumerate() {
            self.pull(values, i, &mut r);
            let p = &values[k * dim..(k + 1) * dim];
            let grad: Vec<f64> = r.iter().zip(p).map(|(s, v)| s + self.stencil.center * v).collect();
            worst = worst.max(norm(&self.target.tangent_project(p, &grad)) / cell_area);
        }
        worst
    }
}

/// Replaces `u` on the balls by a discrete energy minimiser with the same
/// values outside and on the boundary ring.
pub fn harmonic_replace(
    u: &MapSlice,
    target: &TargetManifold,
    balls: &BallCollection,
    opts: &ReplaceOptions,
) -> Result<Replacement> {
    u.validate(target)?;
    balls.validate(u.tau())?;
    let cells = cell_energies(u);
    let energy_before: f64 = cells.iter().sum();
    if let Some(limit) = opts.energy_threshold {
        let on_balls = masked_sum(&cells, &balls.mask(u.tau(), u.rows(), u.cols())).value;
        if on_balls > limit {
            return Err(Error::Precondition(format!(
                "energy on the balls is {on_balls}, above the small-energy threshold {limit}"
            )));
        }
    }
    let relax = Relaxation::new(u, target, free_nodes(u, balls));
    let mut out = u.clone();
    let mut sweeps = 0;
    let mut last_move = 0.0;
    let mut converged = relax.nodes.is_empty();
    // Converged once no node moves by `tol` and the tangential residual is
    // below `tol / h²`, with `h²` the cell area.
    let cell_area = GridGeometry::of(u).cell_area;
    while !converged && sweeps < opts.max_sweeps {
        last_move = relax.sweep(&mut out.values, opts.omega);
        sweeps += 1;
        converged = last_move < opts.tol && relax.tangential_residual(&out.values, cell_area) <= opts.tol / cell_area;
    }
    let energy_after = energy(&out);
    Ok(Replacement { slice: out, converged, sweeps, last_move, energy_before, energy_after })
}

/// `H(u, 𝓑₁, 𝓑₂) = H(H(u, 𝓑₁), 𝓑₂)`, without an energy check on the second step.
pub fn iterated_replace(
    u: &MapSlice,
    target: &TargetManifold,
    first: &BallCollection,
    second: &BallCollection,
    opts: &ReplaceOptions,
) -> Result<MapSlice> {
    let once = harmonic_replace(u, target, first, opts)?.slice;
    Ok(harmonic_replace(&once, target, second, &opts.unchecked())?.slice)
}

/// Largest tangential residual of the discrete harmonic map equation over
/// the free nodes of the balls, in units of the Laplacian.
pub fn tangential_residual(u: &MapSlice, target: &TargetManifold, balls: &BallCollection) -> f64 {
    let relax = Relaxation::new(u, target, free_nodes(u, balls));
    relax.tangential_residual(&u.values, GridGeometry::of(u).cell_area)
}

/// `∫ |∇u − ∇v|²` over the whole torus.
pub fn gradient_distance_sq(u: &MapSlice, v: &MapSlice) -> f64 {
    let diff: Vec<f64> = u.values.iter().zip(&v.values).map(|(a, b)| a - b).collect();
    dirichlet_integral(&GridGeometry::of(u), u.dim(), &diff)
}

/// `(E(u) − E(v)) − ¼ ∫ |∇u − ∇v|²` for a replacement `v` of `u`.
pub fn energy_gap_defect(u: &MapSlice, v: &MapSlice) -> f64 {
    (energy(u) - energy(v)) - 0.25 * gradient_distance_sq(u, v)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReplacementContinuity {
    /// `|E(w1) − E(w2)|` for the replacements `w1`, `w2`.
    pub energy_gap: f64,
    /// `sup |u1 − u2|` on the balls.
    pub c0_distance: f64,
    /// `‖∇u1 − ∇u2‖_{L²}`.
    pub gradient_distance: f64,
    /// `E(u1)` on the balls.
    pub energy: f64,
    /// `c0_distance · E + gradient_distance · √E`.
    pub bound_shape: f64,
}

pub fn replacement_continuity_probe(
    u1: &MapSlice,
    u2: &MapSlice,
    target: &TargetManifold,
    balls: &BallCollection,
    opts: &ReplaceOptions,
) -> Result<ReplacementContinuity> {
    let w1 = harmonic_replace(u1, target, balls, opts)?;
    let w2 = harmonic_replace(u2, target, balls, opts)?;
    let mask = balls.mask(u1.tau(), u1.rows(), u1.cols());
    let mut c0: f64 = 0.0;
    for (k, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
        let d: f64 = u1.node(k).iter().zip(u2.node(k)).map(|(a, b)| (a - b) * (a - b)).sum();
        c0 = c0.max(d.sqrt());
    }
    let grad = gradient_distance_sq(u1, u2).sqrt();
    let e = masked_sum(&cell_energies(u1), &mask).value;
    Ok(ReplacementContinuity {
        energy_gap: (w1.energy_after - w2.energy_after).abs(),
        c0_distance: c0,
        gradient_distance: grad,
        energy: e,
        bound_shape: c0 * e + grad * e.sqrt(),
    })
}

/// Energies entering the two comparison inequalities for one factor `μ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub factor: f64,
    /// `E[H(u, 2μ𝓑₂)]`
    pub e_double: f64,
    /// `E[H(u, 𝓑₁, μ𝓑₂)]`
    pub e_first_then_scaled: f64,
    /// Largest `k` for which the second inequality holds (infinite when
    /// it holds for every `k`).
    pub k_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub e_u: f64,
    /// `E[H(u, 𝓑₁)]`
    pub e_first: f64,
    /// `E[H(u, 𝓑₁, 𝓑₂)]`
    pub e_both: f64,
    /// `E[H(u, ½𝓑₂)]`
    pub e_half_second: f64,
    /// Largest `k` for which the first inequality holds.
    pub k_max_first: f64,
    pub rows: Vec<ComparisonRow>,
    /// Common constant `min(k_max)`; both inequalities hold with it.
    pub k: f64,
}

pub const COMPARISON_FACTORS: [f64; 3] = [0.125, 0.25, 0.5];

pub fn comparison_probe(
    u: &MapSlice,
    target: &TargetManifold,
    first: &BallCollection,
    second: &BallCollection,
    epsilon1: f64,
    opts: &ReplaceOptions,
) -> Result<ComparisonReport> {
    let cells = cell_energies(u);
    for (name, b) in [("first", first), ("second", second)] {
        let e = masked_sum(&cells, &b.mask(u.tau(), u.rows(), u.cols())).value;
        if e > epsilon1 / 3.0 {
            return Err(Error::Precondition(format!(
                "energy {e} on the {name} collection exceeds a third of the threshold {epsilon1}"
            )));
        }
    }
    let opts = opts.unchecked();
    let e_u: f64 = cells.iter().sum();
    let h1 = harmonic_replace(u, target, first, &opts)?.slice;
    let e_first = energy(&h1);
    let e_both = harmonic_replace(&h1, target, second, &opts)?.energy_after;
    let e_half_second = harmonic_replace(u, target, &second.scaled(0.5), &opts)?.energy_after;
    let gain = e_u - e_half_second;
    let k_max_first = if gain <= 0.0 { f64::INFINITY } else { (e_u - e_both) / (gain * gain) };
    let mut rows = Vec::new();
    for factor in COMPARISON_FACTORS {
        let e_double = harmonic_replace(u, target, &second.scaled(2.0 * factor), &opts)?.energy_after;
        let e_first_then_scaled = harmonic_replace(&h1, target, &second.scaled(factor), &opts)?.energy_after;
        let excess = (e_first - e_first_then_scaled) - (e_u - e_double);
        let k_max = if excess <= 0.0 { f64::INFINITY } else { (e_u - e_first).max(0.0).sqrt() / excess };
        rows.push(ComparisonRow { factor, e_double, e_first_then_scaled, k_max });
    }
    let k = rows.iter().map(|r| r.k_max).fold(k_max_first, f64::min);
    Ok(ComparisonReport { e_u, e_first, e_both, e_half_second, k_max_first, rows, k })
}
