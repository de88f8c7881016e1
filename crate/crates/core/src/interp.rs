//! Periodic tensor-product Lagrange interpolation on uniform grids.
//!
//! Samples are addressed by parameters `(x, y)` on the unit square with
//! node `(r, c)` at `x = c/cols`, `y = r/rows`. The interpolant uses a
//! six-point stencil per direction (degree five), so smooth fields are
//! reproduced to sixth order in the grid spacing.

use std::ops::{Add, Mul};

/// Number of nodes per direction in the interpolation stencil.
pub const STENCIL: usize = 6;

/// Node indices and Lagrange weights for the fractional index `t` on a
/// periodic grid of `len` nodes.
pub fn weights(t: f64, len: usize) -> ([usize; STENCIL], [f64; STENCIL]) {
    let base = t.floor();
    let u = t - base;
    let base = base as i64;
    let mut idx = [0usize; STENCIL];
    let mut w = [0.0; STENCIL];
    for k in 0..STENCIL {
        let node = k as f64 - 2.0;
        let mut weight = 1.0;
        for j in 0..STENCIL {
            if j != k {
                let other = j as f64 - 2.0;
                weight *= (u - other) / (node - other);
            }
        }
        idx[k] = (base + k as i64 - 2).rem_euclid(len as i64) as usize;
        w[k] = weight;
    }
    (idx, w)
}

/// Interpolates a scalar-like grid (`f64`, `Complex64`, ...) at `(x, y)`.
pub fn sample<T>(data: &[T], rows: usize, cols: usize, x: f64, y: f64) -> T
where
    T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
{
    let (ci, cw) = weights(x * cols as f64, cols);
    let (ri, rw) = weights(y * rows as f64, rows);
    let mut acc = T::default();
    for (&r, &wr) in ri.iter().zip(&rw) {
        let row = &data[r * cols..(r + 1) * cols];
        let mut line = T::default();
        for (&c, &wc) in ci.iter().zip(&cw) {
            line = line + row[c] * wc;
        }
        acc = acc + line * wr;
    }
    acc
}

/// Interpolates a grid with `components` interleaved values per node.
pub fn sample_vector(data: &[f64], rows: usize, cols: usize, components: usize, x: f64, y: f64) -> Vec<f64> {
    let (ci, cw) = weights(x * cols as f64, cols);
    let (ri, rw) = weights(y * rows as f64, rows);
    let mut out = vec![0.0; components];
    for (&r, &wr) in ri.iter().zip(&rw) {
        for (&c, &wc) in ci.iter().zip(&cw) {
            let node = &data[(r * cols + c) * components..(r * cols + c + 1) * components];
            let w = wr * wc;
            for (o, v) in out.iter_mut().zip(node) {
                *o += w * v;
            }
        }
    }
    out
}
