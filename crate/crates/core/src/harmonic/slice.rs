//! Sampled maps into a target and ball collections on the torus.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::target::TargetManifold;
use crate::error::{Error, Result};
use crate::periodic::{check_shape, parameter_gradient, Lattice, Mark, PGrid, PeriodicField};

/// A map from the flat torus `{1, τ}` into `R^dim`, sampled on a grid.
///
/// Node `(r, c)` sits at parameters `(c/cols, r/rows)`. Values are stored
/// interleaved, `dim` per node. Frozen nodes are never modified by the
/// replacement operations.
#[derive(Clone, Debug, PartialEq)]
pub struct MapSlice {
    pub mark: Mark,
    rows: usize,
    cols: usize,
    dim: usize,
    pub values: Vec<f64>,
    pub frozen: Vec<bool>,
}

impl MapSlice {
    pub fn new(mark: Mark, rows: usize, cols: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        check_shape(rows, cols)?;
        if dim == 0 || values.len() != rows * cols * dim {
            return Err(Error::Size(format!(
                "expected {} values for {rows}x{cols} nodes of dimension {dim}, got {}",
                rows * cols * dim,
                values.len()
            )));
        }
        Ok(MapSlice { mark, rows, cols, dim, values, frozen: vec![false; rows * cols] })
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn(mark: Mark, rows: usize, cols: usize, dim: usize, f: impl Fn(f64, f64) -> Vec<f64>) -> Result<Self> {
        check_shape(rows, cols)?;
        let mut values = Vec::with_capacity(rows * cols * dim);
        for r in 0..rows {
            for c in 0..cols {
                let v = f(c as f64 / cols as f64, r as f64 / rows as f64);
                if v.len() != dim {
                    return Err(Error::Size(format!("sample has {} components, expected {dim}", v.len())));
                }
                values.extend(v);
            }
        }
        Self::new(mark, rows, cols, dim, values)
    }

    pub fn constant(mark: Mark, rows: usize, cols: usize, point: &[f64]) -> Result<Self> {
        Self::from_fn(mark, rows, cols, point.len(), |_, _| point.to_vec())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> usize {
        self.rows * self.cols
    }

    pub fn tau(&self) -> Complex64 {
        self.mark.tau()
    }

    pub fn node(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn node_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn index(&self, row: i64, col: i64) -> usize {
        row.rem_euclid(self.rows as i64) as usize * self.cols + col.rem_euclid(self.cols as i64) as usize
    }

    /// Largest distance of a value from the target.
    pub fn target_error(&self, target: &TargetManifold) -> f64 {
        self.values.chunks_exact(self.dim).map(|v| target.distance(v)).fold(0.0, f64::max)
    }

    /// Checks dimensions and that every value lies on the target.
    pub fn validate(&self, target: &TargetManifold) -> Result<()> {
        if target.ambient_dim() != self.dim {
            return Err(Error::Argument(format!(
                "map has dimension {} but the target lives in R^{}",
                self.dim,
                target.ambient_dim()
            )));
        }
        let err = self.target_error(target);
        if err > 1e-10 {
            return Err(Error::Precondition(format!("map leaves the target by {err:e}")));
        }
        Ok(())
    }

    /// Projects every value onto the target.
    pub fn project(&mut self, target: &TargetManifold) {
        for v in self.values.chunks_exact_mut(self.dim) {
            target.project_in_place(v);
        }
    }

    pub fn to_pgrid(&self) -> PGrid {
        PGrid {
            rows: self.rows,
            cols: self.cols,
            components: self.dim,
            tau: self.tau(),
            data: self.values.clone(),
        }
    }

    pub fn from_pgrid(grid: &PGrid) -> Result<Self> {
        Self::new(Mark::new(grid.tau)?, grid.rows, grid.cols, grid.components, grid.data.clone())
    }

    /// Spectral parameter derivatives `(u_x, u_y)`, interleaved like the values.
    pub fn parameter_gradients(&self) -> (Vec<f64>, Vec<f64>) {
        let (dim, n) = (self.dim, self.nodes());
        let mut ux = vec![0.0; n * dim];
        let mut uy = vec![0.0; n * dim];
        // Two real components per complex transform.
        for first in (0..dim).step_by(2) {
            let second = (first + 1 < dim).then_some(first + 1);
            let data: Vec<Complex64> = (0..n)
                .map(|k| Complex64::new(self.values[k * dim + first], second.map_or(0.0, |s| self.values[k * dim + s])))
                .collect();
            let field = PeriodicField::new(Lattice::new(self.mark), self.rows, self.cols, data).expect("slice shape is valid");
            let (dx, dy) = parameter_gradient(&field);
            for k in 0..n {
                ux[k * dim + first] = dx.data()[k].re;
                uy[k * dim + first] = dy.data()[k].re;
                if let Some(s) = second {
                    ux[k * dim + s] = dx.data()[k].im;
                    uy[k * dim + s] = dy.data()[k].im;
                }
            }
        }
        (ux, uy)
    }

    /// Maximum nodal distance to another slice on the same grid.
    pub fn sup_distance(&self, other: &MapSlice) -> f64 {
        self.values
            .chunks_exact(self.dim)
            .zip(other.values.chunks_exact(other.dim))
            .map(|(a, b)| a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

/// Plane displacement between two parameter points on the torus `{1, τ}`,
/// taken to the nearest periodic image.
pub fn torus_displacement(tau: Complex64, from: (f64, f64), to: (f64, f64)) -> Complex64 {
    let wrap = |d: f64| d - d.round();
    let base = Complex64::new(wrap(to.0 - from.0), 0.0) + tau * wrap(to.1 - from.1);
    let mut best = base;
    for m in -2..=2 {
        for n in -2..=2 {
            let z = base + Complex64::new(m as f64, 0.0) + tau * n as f64;
            if z.norm_sqr() < best.norm_sqr() {
                best = z;
            }
        }
    }
    best
}

/// Parameter point at plane displacement `z` from `center`.
pub fn torus_offset(tau: Complex64, center: (f64, f64), z: Complex64) -> (f64, f64) {
    let dy = z.im / tau.im;
    let dx = z.re - dy * tau.re;
    (center.0 + dx, center.1 + dy)
}

/// Length of the shortest nonzero period of `{1, τ}`.
pub fn shortest_period(tau: Complex64) -> f64 {
    let mut best = f64::INFINITY;
    for m in -3i32..=3 {
        for n in -3i32..=3 {
            if (m, n) != (0, 0) {
                best = best.min((Complex64::new(m as f64, 0.0) + tau * n as f64).norm());
            }
        }
    }
    best
}

/// A geodesic ball on the torus: center in parameter coordinates
/// `(x, y) ∈ [0, 1)²` and radius in plane units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: (f64, f64),
    pub radius: f64,
}

impl Ball {
    pub fn new(center: (f64, f64), radius: f64) -> Self {
        Ball { center, radius }
    }

    /// Center at grid node `(row, col)`.
    pub fn at_node(rows: usize, cols: usize, row: usize, col: usize, radius: f64) -> Self {
        Ball { center: (col as f64 / cols as f64, row as f64 / rows as f64), radius }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Ball { center: self.center, radius: self.radius * factor }
    }
}

/// A finite collection of pairwise disjoint balls.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BallCollection {
    pub balls: Vec<Ball>,
}

impl BallCollection {
    pub fn new(balls: Vec<Ball>) -> Self {
        BallCollection { balls }
    }

    pub fn single(ball: Ball) -> Self {
        BallCollection { balls: vec![ball] }
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }

    /// Same centers, radii multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        BallCollection { balls: self.balls.iter().map(|b| b.scaled(factor)).collect() }
    }

    /// Checks radii against the torus size and pairwise disjointness.
    pub fn validate(&self, tau: Complex64) -> Result<()> {
        let limit = 0.5 * shortest_period(tau);
        for b in &self.balls {
            if !(b.radius > 0.0) || b.radius >= limit {
                return Err(Error::Geometry(format!(
                    "ball radius {} must lie in (0, {limit}) to embed in the torus",
                    b.radius
                )));
            }
        }
        for (i, a) in self.balls.iter().enumerate() {
            for b in &self.balls[i + 1..] {
                let d = torus_displacement(tau, a.center, b.center).norm();
                if d < a.radius + b.radius - 1e-12 {
                    return Err(Error::Geometry(format!(
                        "balls at {:?} and {:?} overlap (distance {d}, radii {} + {})",
                        a.center, b.center, a.radius, b.radius
                    )));
                }
            }
        }
        Ok(())
    }

    /// Node mask of the union: a node belongs to a ball when its torus
    /// distance to the center is below the radius by more than 1e-12.
    pub fn mask(&self, tau: Complex64, rows: usize, cols: usize) -> Vec<bool> {
        let mut mask = vec![false; rows * cols];
        for b in &self.balls {
            for r in 0..rows {
                for c in 0..cols {
                    let p = (c as f64 / cols as f64, r as f64 / rows as f64);
                    if torus_displacement(tau, b.center, p).norm() < b.radius - 1e-12 {
                        mask[r * cols + c] = true;
                    }
                }
            }
        }
        mask
    }
}

/// Mask nodes with a grid neighbour (left, right, up, down) outside the mask.
pub fn boundary_ring(mask: &[bool], rows: usize, cols: usize) -> Vec<bool> {
    let mut ring = vec![false; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            let k = r * cols + c;
            if !mask[k] {
                continue;
            }
            let neighbours = [
                r * cols + (c + 1) % cols,
                r * cols + (c + cols - 1) % cols,
                ((r + 1) % rows) * cols + c,
                ((r + rows - 1) % rows) * cols + c,
            ];
            ring[k] = neighbours.iter().any(|&n| !mask[n]);
        }
    }
    ring
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_excludes_ties() {
        let tau = Complex64::new(0.0, 1.0);
        let b = BallCollection::single(Ball::new((0.5, 0.5), 0.125));
        let m = b.mask(tau, 16, 16);
        // (0.5 ± 0.125, 0.5) lies exactly on the circle
        assert!(!m[8 * 16 + 10] && !m[8 * 16 + 6]);
        assert!(m[8 * 16 + 9] && m[8 * 16 + 8]);
        assert_eq!(m.iter().filter(|&&v| v).count(), 9);
    }

    #[test]
    fn overlapping_balls_rejected() {
        let tau = Complex64::new(0.0, 1.0);
        let ok = BallCollection::new(vec![Ball::new((0.1, 0.1), 0.2), Ball::new((0.6, 0.6), 0.2)]);
        assert!(ok.validate(tau).is_ok());
        let wrap = BallCollection::new(vec![Ball::new((0.05, 0.5), 0.2), Ball::new((0.9, 0.5), 0.2)]);
        assert!(matches!(wrap.validate(tau), Err(Error::Geometry(_))));
        let big = BallCollection::single(Ball::new((0.5, 0.5), 0.5));
        assert!(big.validate(tau).is_err());
    }

    #[test]
    fn ring_is_inside_mask() {
        let tau = Complex64::new(0.0, 1.0);
        let m = BallCollection::single(Ball::new((0.5, 0.5), 0.3)).mask(tau, 32, 32);
        let ring = boundary_ring(&m, 32, 32);
        assert!(ring.iter().zip(&m).all(|(&r, &m)| !r || m));
        assert!(!ring[16 * 32 + 16]);
    }
}
