//! Discrete Dirichlet energy and area on a marked torus grid.
//!
//! The node lattice is spanned by `1/cols` and `τ/rows`. After Gauss
//! reduction to a basis `e1, e2` with `e1·e2 ≥ 0`, every cell with base
//! node `x` is split into the triangles `(x, x+e1, x+e2)` and
//! `(x+e1+e2, x+e2, x+e1)`. Edge differences use the fourth-order staggered
//! formula `D_e u(x) = 9/8 (u(x+e) − u(x)) − 1/24 (u(x+2e) − u(x−e))`, and a
//! triangle with edge differences `δ1, δ2` carries energy
//! `¼ |det E| Σ g^{αβ} δα·δβ` and area `½ |δ1 ∧ δ2|`.
//!
//! The energy is a positive semidefinite quadratic form whose kernel is the
//! constants, it is unchanged by exact lattice changes of basis, and
//! `energy ≥ area` holds triangle by triangle.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::slice::{BallCollection, MapSlice};

/// Coefficients `(j, c_j)` of the staggered edge difference.
pub const EDGE_DIFFERENCE: [(i64, f64); 4] = [(-1, 1.0 / 24.0), (0, -9.0 / 8.0), (1, 9.0 / 8.0), (2, -1.0 / 24.0)];

/// Reduced lattice basis of a grid on the torus `{1, τ}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridGeometry {
    pub rows: usize,
    pub cols: usize,
    pub tau: Complex64,
    /// Node offsets `(drow, dcol)` of the reduced basis.
    pub e1: (i64, i64),
    pub e2: (i64, i64),
    /// Inverse Gram matrix entries `(g^11, g^12, g^22)`.
    pub inverse_gram: (f64, f64, f64),
    /// Plane area of one cell.
    pub cell_area: f64,
}

impl GridGeometry {
    pub fn new(tau: Complex64, rows: usize, cols: usize) -> Self {
        let vector = |o: (i64, i64)| Complex64::new(o.1 as f64 / cols as f64, 0.0) + tau * (o.0 as f64 / rows as f64);
        let mut a = (0i64, 1i64);
        let mut b = (1i64, 0i64);
        loop {
            if vector(a).norm_sqr() > vector(b).norm_sqr() {
                std::mem::swap(&mut a, &mut b);
            }
            let (va, vb) = (vector(a), vector(b));
            let m = ((va.re * vb.re + va.im * vb.im) / va.norm_sqr()).round() as i64;
            if m == 0 {
                break;
            }
            b = (b.0 - m * a.0, b.1 - m * a.1);
        }
        let (va, vb) = (vector(a), vector(b));
        if va.re * vb.re + va.im * vb.im < 0.0 {
            b = (-b.0, -b.1);
        }
        let (va, vb) = (vector(a), vector(b));
        let g11 = va.norm_sqr();
        let g22 = vb.norm_sqr();
        let g12 = va.re * vb.re + va.im * vb.im;
        let det = g11 * g22 - g12 * g12;
        GridGeometry {
            rows,
            cols,
            tau,
            e1: a,
            e2: b,
            inverse_gram: (g22 / det, -g12 / det, g11 / det),
            cell_area: (va.re * vb.im - va.im * vb.re).abs(),
        }
    }

    pub fn of(u: &MapSlice) -> Self {
        Self::new(u.tau(), u.rows(), u.cols())
    }

    pub fn nodes(&self) -> usize {
        self.rows * self.cols
    }

    /// Node reached from `k` by the offset `o = (drow, dcol)`.
    pub fn shift(&self, k: usize, o: (i64, i64)) -> usize {
        let (r, c) = ((k / self.cols) as i64, (k % self.cols) as i64);
        ((r + o.0).rem_euclid(self.rows as i64) as usize) * self.cols + (c + o.1).rem_euclid(self.cols as i64) as usize
    }

    /// Parameter coordinates of the center of the cell based at node `k`.
    pub fn cell_center(&self, k: usize) -> (f64, f64) {
        let (r, c) = ((k / self.cols) as f64, (k % self.cols) as f64);
        let dr = 0.5 * (self.e1.0 + self.e2.0) as f64;
        let dc = 0.5 * (self.e1.1 + self.e2.1) as f64;
        ((c + dc) / self.cols as f64, (r + dr) / self.rows as f64)
    }

    /// Translation-invariant stencil of the energy form: `E = ½ uᵀ K u`
    /// with `(K u)(x) = Σ_o K_o u(x + o)`. Offsets are reduced modulo the
    /// grid so that coincident nodes are merged.
    pub fn stencil(&self) -> Stencil {
        let (a, b, d) = self.inverse_gram;
        let area = self.cell_area;
        let mut map: BTreeMap<(i64, i64), f64> = BTreeMap::new();
        let mut add = |o: (i64, i64), w: f64| {
            let key = (o.0.rem_euclid(self.rows as i64), o.1.rem_euclid(self.cols as i64));
            *map.entry(key).or_insert(0.0) += w;
        };
        let comb = |p: (i64, i64), j: i64, q: (i64, i64), k: i64| (k * q.0 - j * p.0, k * q.1 - j * p.1);
        let (e1, e2) = (self.e1, self.e2);
        let skew = (e1.0 - e2.0, e1.1 - e2.1);
        for &(j, cj) in &EDGE_DIFFERENCE {
            for &(k, ck) in &EDGE_DIFFERENCE {
                let w = cj * ck * area;
                add(comb(e1, j, e1, k), a * w);
                add(comb(e2, j, e2, k), d * w);
                // D1ᵀD2 + D2ᵀD1
                add(comb(e1, j, e2, k), 0.5 * b * w);
                add(comb(e2, j, e1, k), 0.5 * b * w);
                // (S_e2 D1)ᵀ(S_e1 D2) + transpose
                let o = comb(e1, j, e2, k);
                add((o.0 + skew.0, o.1 + skew.1), 0.5 * b * w);
                let o = comb(e2, j, e1, k);
                add((o.0 - skew.0, o.1 - skew.1), 0.5 * b * w);
            }
        }
        let center = map.remove(&(0, 0)).unwrap_or(0.0);
        let neighbours = map.into_iter().filter(|(_, w)| *w != 0.0).collect();
        Stencil { center, neighbours }
    }
}

/// Energy stencil: diagonal weight and off-diagonal offsets.
#[derive(Clone, Debug, PartialEq)]
pub struct Stencil {
    pub center: f64,
    pub neighbours: Vec<((i64, i64), f64)>,
}

/// Staggered edge differences of a `dim`-vector field along `e`, formed
/// from differences so that constants give exact zeros.
fn edge_differences(geom: &GridGeometry, dim: usize, values: &[f64], e: (i64, i64)) -> Vec<f64> {
    let n = geom.nodes();
    let mut out = Vec::with_capacity(n * dim);
    for k in 0..n {
        let at = |j: i64| {
            let m = geom.shift(k, (j * e.0, j * e.1));
            &values[m * dim..(m + 1) * dim]
        };
        let (back, here, next, far) = (at(-1), at(0), at(1), at(2));
        for d in 0..dim {
            out.push(9.0 / 8.0 * (next[d] - here[d]) - (far[d] - back[d]) / 24.0);
        }
    }
    out
}

/// Per-cell energies and areas of a `dim`-vector field.
pub fn cell_quantities(geom: &GridGeometry, dim: usize, values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let d1 = edge_differences(geom, dim, values, geom.e1);
    let d2 = edge_differences(geom, dim, values, geom.e2);
    let (a, b, d) = geom.inverse_gram;
    let dot = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(x, y)| x * y).sum::<f64>();
    let n = geom.nodes();
    let mut energies = Vec::with_capacity(n);
    let mut areas = Vec::with_capacity(n);
    for k in 0..n {
        let mut e = 0.0;
        let mut s = 0.0;
        for (p, q) in [(k, k), (geom.shift(k, geom.e2), geom.shift(k, geom.e1))] {
            let u = &d1[p * dim..(p + 1) * dim];
            let v = &d2[q * dim..(q + 1) * dim];
            let (uu, uv, vv) = (dot(u, u), dot(u, v), dot(v, v));
            e += 0.25 * geom.cell_area * (a * uu + 2.0 * b * uv + d * vv);
            s += 0.5 * (uu * vv - uv * uv).max(0.0).sqrt();
        }
        energies.push(e);
        areas.push(s);
    }
    (energies, areas)
}

/// `∫ |∇w|²` of an arbitrary `dim`-vector field.
pub fn dirichlet_integral(geom: &GridGeometry, dim: usize, values: &[f64]) -> f64 {
    2.0 * cell_quantities(geom, dim, values).0.iter().sum::<f64>()
}

pub fn cell_energies(u: &MapSlice) -> Vec<f64> {
    cell_quantities(&GridGeometry::of(u), u.dim(), &u.values).0
}

/// `|∇u|²` per cell, located at the cell centers.
pub fn energy_density(u: &MapSlice) -> Vec<f64> {
    let geom = GridGeometry::of(u);
    cell_quantities(&geom, u.dim(), &u.values).0.into_iter().map(|e| 2.0 * e / geom.cell_area).collect()
}

/// Energy restricted to a region, with a flag for an empty region.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegionEnergy {
    pub value: f64,
    pub empty: bool,
}

pub fn energy(u: &MapSlice) -> f64 {
    cell_energies(u).iter().sum()
}

pub fn area(u: &MapSlice) -> f64 {
    cell_quantities(&GridGeometry::of(u), u.dim(), &u.values).1.iter().sum()
}

/// Energy and area of the whole slice in one pass.
pub fn energy_and_area(u: &MapSlice) -> (f64, f64) {
    let (e, a) = cell_quantities(&GridGeometry::of(u), u.dim(), &u.values);
    (e.iter().sum(), a.iter().sum())
}

/// Sum of the cell energies whose base node lies in the mask.
pub fn masked_sum(cells: &[f64], mask: &[bool]) -> RegionEnergy {
    let mut value = 0.0;
    let mut empty = true;
    for (e, &m) in cells.iter().zip(mask) {
        if m {
            value += e;
            empty = false;
        }
    }
    RegionEnergy { value, empty }
}

pub fn energy_in(u: &MapSlice, balls: &BallCollection) -> RegionEnergy {
    masked_sum(&cell_energies(u), &balls.mask(u.tau(), u.rows(), u.cols()))
}

pub fn area_in(u: &MapSlice, balls: &BallCollection) -> RegionEnergy {
    let (_, areas) = cell_quantities(&GridGeometry::of(u), u.dim(), &u.values);
    masked_sum(&areas, &balls.mask(u.tau(), u.rows(), u.cols()))
}
