//! Beltrami coefficients of torus metrics and their periodic uniformization.
//!
//! A metric `g` on the square torus is written `λ|dz + μ dz̄|²`. Solving
//! `w_z̄ = μ w_z` with `w = z + B z̄ + s(z)`, `s` periodic, produces a map
//! whose periods are `1 + B` and `i(1 − B)`. After normalisation the map
//! `w̃ = (w − w(0)) / (1 + B)` carries the square torus onto the flat torus
//! `{1, τ}`; its inverse `h` is conformal from the flat torus onto `(T², g)`
//! and fixes `0 ↦ 0`, `1 ↦ 1`, `τ ↦ i`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interp;
use crate::periodic::{
    beurling, check_shape, d_z, d_zbar, dbar_inverse, parameter_gradient, Lattice, Mark, PeriodicField,
};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;
pub const DEFAULT_DELTA: f64 = 1e-4;

/// Smallest forward-map Jacobian accepted by [`invert_map`].
pub const JACOBIAN_FLOOR: f64 = 1e-10;

const NEWTON_TOL: f64 = 1e-14;
const NEWTON_MAX_ITER: usize = 60;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Sampled symmetric metric `g11 dx² + 2 g12 dx dy + g22 dy²` on the square torus.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricField {
    rows: usize,
    cols: usize,
    pub g11: Vec<f64>,
    pub g12: Vec<f64>,
    pub g22: Vec<f64>,
    /// Multiple of the flat metric added by [`regularize`] so far.
    pub delta: f64,
}

impl MetricField {
    pub fn new(rows: usize, cols: usize, g11: Vec<f64>, g12: Vec<f64>, g22: Vec<f64>) -> Result<Self> {
        check_shape(rows, cols)?;
        for (name, v) in [("g11", &g11), ("g12", &g12), ("g22", &g22)] {
            if v.len() != rows * cols {
                return Err(Error::Size(format!("{name} has {} samples, expected {}", v.len(), rows * cols)));
            }
        }
        Ok(MetricField { rows, cols, g11, g12, g22, delta: 0.0 })
    }

    /// Samples `f(x, y) = (g11, g12, g22)` on the grid.
    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(f64, f64) -> (f64, f64, f64)) -> Result<Self> {
        check_shape(rows, cols)?;
        let n = rows * cols;
        let (mut g11, mut g12, mut g22) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for r in 0..rows {
            for col in 0..cols {
                let (a, b, d) = f(col as f64 / cols as f64, r as f64 / rows as f64);
                g11.push(a);
                g12.push(b);
                g22.push(d);
            }
        }
        Self::new(rows, cols, g11, g12, g22)
    }

    pub fn identity(rows: usize, cols: usize) -> Result<Self> {
        Self::from_fn(rows, cols, |_, _| (1.0, 0.0, 1.0))
    }

    /// Pullback of the Euclidean metric by a map with the given parameter
    /// derivatives, each `components` values per node interleaved.
    pub fn pullback(rows: usize, cols: usize, components: usize, du_dx: &[f64], du_dy: &[f64]) -> Result<Self> {
        check_shape(rows, cols)?;
        let n = rows * cols;
        if du_dx.len() != n * components || du_dy.len() != n * components {
            return Err(Error::Size("derivative arrays do not match the grid".into()));
        }
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
        let mut g11 = Vec::with_capacity(n);
        let mut g12 = Vec::with_capacity(n);
        let mut g22 = Vec::with_capacity(n);
        for (ux, uy) in du_dx.chunks_exact(components).zip(du_dy.chunks_exact(components)) {
            g11.push(dot(ux, ux));
            g12.push(dot(ux, uy));
            g22.push(dot(uy, uy));
        }
        Self::new(rows, cols, g11, g12, g22)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn determinant(&self, node: usize) -> f64 {
        self.g11[node] * self.g22[node] - self.g12[node] * self.g12[node]
    }

    /// Area `∫ √det g` over the unit parameter square.
    pub fn area(&self) -> f64 {
        (0..self.g11.len()).map(|k| self.determinant(k).max(0.0).sqrt()).sum::<f64>() / self.g11.len() as f64
    }
}

/// Adds `delta` times the flat metric.
pub fn regularize(g: &MetricField, delta: f64) -> Result<MetricField> {
    if !(delta > 0.0) {
        return Err(Error::Argument(format!("regularization delta must be positive, got {delta}")));
    }
    let mut out = g.clone();
    for v in out.g11.iter_mut().chain(out.g22.iter_mut()) {
        *v += delta;
    }
    out.delta += delta;
    Ok(out)
}

/// `g = λ|dz + μ dz̄|²` nodewise, together with `k = sup |μ|`.
#[derive(Clone, Debug, PartialEq)]
pub struct BeltramiField {
    pub mu: PeriodicField,
    pub lambda: Vec<f64>,
    pub bound_k: f64,
}

impl BeltramiField {
    /// A coefficient field with `λ ≡ 1`.
    pub fn from_mu(mu: PeriodicField) -> Self {
        let bound_k = mu.sup_norm();
        let lambda = vec![1.0; mu.data().len()];
        BeltramiField { mu, lambda, bound_k }
    }

    /// Constant coefficient on a `rows × cols` grid.
    pub fn constant(rows: usize, cols: usize, mu: Complex64) -> Result<Self> {
        Ok(Self::from_mu(PeriodicField::from_fn(Lattice::square(), rows, cols, |_, _| mu)?))
    }

    pub fn rows(&self) -> usize {
        self.mu.rows()
    }

    pub fn cols(&self) -> usize {
        self.mu.cols()
    }

    /// Expands `λ|dz + μ dz̄|²` back into metric components.
    pub fn reconstruct(&self) -> MetricField {
        let n = self.lambda.len();
        let (mut g11, mut g12, mut g22) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for (&mu, &lambda) in self.mu.data().iter().zip(&self.lambda) {
            g11.push(lambda * (1.0 + mu).norm_sqr());
            g12.push(2.0 * lambda * mu.im);
            g22.push(lambda * (1.0 - mu).norm_sqr());
        }
        MetricField { rows: self.rows(), cols: self.cols(), g11, g12, g22, delta: 0.0 }
    }
}

pub fn metric_to_beltrami(g: &MetricField) -> Result<BeltramiField> {
    let n = g.g11.len();
    let mut mu = Vec::with_capacity(n);
    let mut lambda = Vec::with_capacity(n);
    for k in 0..n {
        let (a, b, d) = (g.g11[k], g.g12[k], g.g22[k]);
        let det = a * d - b * b;
        let trace = a + d;
        if !(a > 0.0) || !(d > 0.0) || !(det > 1e-14 * trace * trace) {
            return Err(Error::Degenerate { row: k / g.cols, col: k % g.cols });
        }
        let denom = trace + 2.0 * det.sqrt();
        mu.push(c(a - d, 2.0 * b) / denom);
        lambda.push(denom / 4.0);
    }
    let mu = PeriodicField::new(Lattice::square(), g.rows, g.cols, mu)?;
    let bound_k = mu.sup_norm();
    Ok(BeltramiField { mu, lambda, bound_k })
}

/// Output of the periodic Beltrami solve.
#[derive(Clone, Debug)]
pub struct UniformizationResult {
    pub mark: Mark,
    /// Mean of `μ(1 + s_z)`, the `z̄` coefficient of the affine part.
    pub g0_mean: Complex64,
    /// Zero-mean periodic part `s` of `w = z + B z̄ + s`.
    pub periodic_part: PeriodicField,
    /// Normalised forward map `w̃` sampled on the square grid.
    pub w_grid: Vec<Complex64>,
    /// Inverse map `h` sampled on the grid of the `{1, τ}` torus.
    pub h_grid: Option<Vec<Complex64>>,
    pub residual: f64,
    pub iterations: usize,
    /// L² change of the iterate at every step.
    pub changes: Vec<f64>,
    pub min_jacobian: f64,
    pub conformal_defect: Option<f64>,
    pub beltrami: BeltramiField,
    s_x: Vec<Complex64>,
    s_y: Vec<Complex64>,
    s_origin: Complex64,
}

impl UniformizationResult {
    pub fn rows(&self) -> usize {
        self.periodic_part.rows()
    }

    pub fn cols(&self) -> usize {
        self.periodic_part.cols()
    }

    pub fn tau(&self) -> Complex64 {
        self.mark.tau()
    }

    fn affine_scale(&self) -> Complex64 {
        1.0 + self.g0_mean
    }

    /// Normalised forward map at parameters `(x, y)` of the square torus.
    pub fn forward(&self, x: f64, y: f64) -> Complex64 {
        let s = interp::sample(self.periodic_part.data(), self.rows(), self.cols(), x, y);
        self.forward_with(x, y, s)
    }

    fn forward_with(&self, x: f64, y: f64, s: Complex64) -> Complex64 {
        (c(x, y) + self.g0_mean * c(x, -y) + s - self.s_origin) / self.affine_scale()
    }

    /// Parameter derivatives of the normalised forward map at `(x, y)`.
    fn forward_gradient(&self, x: f64, y: f64) -> (Complex64, Complex64) {
        let (rows, cols) = (self.rows(), self.cols());
        let sx = interp::sample(&self.s_x, rows, cols, x, y);
        let sy = interp::sample(&self.s_y, rows, cols, x, y);
        let a = self.affine_scale();
        ((a + sx) / a, (c(0.0, 1.0) * (1.0 - self.g0_mean) + sy) / a)
    }

    /// Preimage of the plane point `p` under the normalised forward map.
    pub fn preimage(&self, p: Complex64) -> Result<Complex64> {
        let b = self.g0_mean;
        let q = p * self.affine_scale();
        let mut z = (q - b * q.conj()) / (1.0 - b.norm_sqr());
        for _ in 0..NEWTON_MAX_ITER {
            let f = self.forward(z.re, z.im) - p;
            if f.norm() < NEWTON_TOL {
                return Ok(z);
            }
            let (wx, wy) = self.forward_gradient(z.re, z.im);
            let det = wx.re * wy.im - wx.im * wy.re;
            if det.abs() < 1e-300 {
                break;
            }
            let dx = (wy.im * f.re - wy.re * f.im) / det;
            let dy = (-wx.im * f.re + wx.re * f.im) / det;
            z -= c(dx, dy);
        }
        let f = (self.forward(z.re, z.im) - p).norm();
        if f < 1e-10 {
            Ok(z)
        } else {
            Err(Error::NonConvergence { iterations: NEWTON_MAX_ITER, residual: f })
        }
    }
}

/// Solves `w_z̄ = μ w_z` on the square torus.
pub fn solve_periodic_beltrami(mu: &BeltramiField, tol: f64, max_iter: usize) -> Result<UniformizationResult> {
    if !(mu.bound_k < 1.0) {
        return Err(Error::Precondition(format!("sup |mu| = {} must be below 1", mu.bound_k)));
    }
    if !(tol > 0.0) {
        return Err(Error::Argument(format!("tolerance must be positive, got {tol}")));
    }
    let m = &mu.mu;
    let mut h = PeriodicField::zeros(m.lattice(), m.rows(), m.cols())?;
    let mut changes = Vec::new();
    let mut converged = false;
    while changes.len() < max_iter {
        let q = m.zip_with(&h, |mu, h| mu * (1.0 + h)).remove_mean();
        let next = beurling(&q);
        let change = next.sub(&h).l2_norm();
        changes.push(change);
        h = next;
        if change < tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            iterations: changes.len(),
            residual: changes.last().copied().unwrap_or(f64::NAN),
        });
    }

    let q = m.zip_with(&h, |mu, h| mu * (1.0 + h));
    let g0_mean = q.mean();
    if !(g0_mean.norm() < 1.0) {
        return Err(Error::Geometry(format!("affine coefficient {g0_mean} has modulus >= 1")));
    }
    let s = dbar_inverse(&q.remove_mean())?;
    let w_z = d_z(&s).map(|v| 1.0 + v);
    let w_zbar = d_zbar(&s).map(|v| g0_mean + v);
    let mismatch = w_zbar.sub(&w_z.zip_with(m, |wz, mu| mu * wz));
    let residual = mismatch.l2_norm() / w_z.l2_norm();
    let min_jacobian = w_z
        .data()
        .iter()
        .zip(w_zbar.data())
        .map(|(a, b)| a.norm_sqr() - b.norm_sqr())
        .fold(f64::INFINITY, f64::min);

    let tau = c(0.0, 1.0) * (1.0 - g0_mean) / (1.0 + g0_mean);
    let mark = Mark::new(tau)?;
    let (s_x, s_y) = parameter_gradient(&s);
    let s_origin = s.data()[0];
    let mut result = UniformizationResult {
        mark,
        g0_mean,
        periodic_part: s,
        w_grid: Vec::new(),
        h_grid: None,
        residual,
        iterations: changes.len(),
        changes,
        min_jacobian,
        conformal_defect: None,
        beltrami: mu.clone(),
        s_x: s_x.into_data(),
        s_y: s_y.into_data(),
        s_origin,
    };
    let (rows, cols) = (result.rows(), result.cols());
    let mut w_grid = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for col in 0..cols {
            let (x, y) = (col as f64 / cols as f64, r as f64 / rows as f64);
            w_grid.push(result.forward_with(x, y, result.periodic_part.data()[r * cols + col]));
        }
    }
    result.w_grid = w_grid;
    Ok(result)
}

/// Sampled inverse map together with its residual in the inverse equation.
#[derive(Clone, Debug)]
pub struct InverseMap {
    pub tau: Complex64,
    pub rows: usize,
    pub cols: usize,
    /// `h(a + bτ)` at `a = c/cols`, `b = r/rows`, as a point of the plane
    /// covering the square torus.
    pub values: Vec<Complex64>,
    /// `‖h_w̄ + μ(h) conj(h_w)‖ / ‖h_w‖` from finite differences.
    pub residual: f64,
}

impl InverseMap {
    /// Periodic part `h(a + bτ) − (a + b i)`.
    pub fn periodic_part(&self) -> Vec<Complex64> {
        let mut out = self.values.clone();
        for r in 0..self.rows {
            for col in 0..self.cols {
                out[r * self.cols + col] -= c(col as f64 / self.cols as f64, r as f64 / self.rows as f64);
            }
        }
        out
    }

    /// Derivatives of `h` along the `(a, b)` parameters by fourth-order
    /// central differences.
    pub fn parameter_derivatives(&self) -> (Vec<Complex64>, Vec<Complex64>) {
        let q = self.periodic_part();
        let (da, db) = central_differences(&q, self.rows, self.cols);
        let da = da.into_iter().map(|v| v + 1.0).collect();
        let db = db.into_iter().map(|v| v + c(0.0, 1.0)).collect();
        (da, db)
    }
}

/// Fourth-order periodic central differences along columns and rows, in
/// unit-square parameter units.
pub fn central_differences(q: &[Complex64], rows: usize, cols: usize) -> (Vec<Complex64>, Vec<Complex64>) {
    let at = |r: i64, col: i64| q[(r.rem_euclid(rows as i64) as usize) * cols + col.rem_euclid(cols as i64) as usize];
    let mut da = Vec::with_capacity(q.len());
    let mut db = Vec::with_capacity(q.len());
    for r in 0..rows as i64 {
        for col in 0..cols as i64 {
            let d = |p1: Complex64, m1: Complex64, p2: Complex64, m2: Complex64| {
                (8.0 * (p1 - m1) - (p2 - m2)) / 12.0
            };
            da.push(d(at(r, col + 1), at(r, col - 1), at(r, col + 2), at(r, col - 2)) * cols as f64);
            db.push(d(at(r + 1, col), at(r - 1, col), at(r + 2, col), at(r - 2, col)) * rows as f64);
        }
    }
    (da, db)
}

/// Inverts the normalised forward map on the grid of the `{1, τ}` torus.
pub fn invert_map(result: &UniformizationResult) -> Result<InverseMap> {
    let (rows, cols) = (result.rows(), result.cols());
    if result.min_jacobian <= JACOBIAN_FLOOR {
        let jac = w_jacobian(result);
        let (k, &j) = jac
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty grid");
        return Err(Error::Foldover { row: k / cols, col: k % cols, jacobian: j });
    }
    let tau = result.tau();
    let mut values = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let b = r as f64 / rows as f64;
        for col in 0..cols {
            let a = col as f64 / cols as f64;
            values.push(result.preimage(a + b * tau)?);
        }
    }
    let mut inverse = InverseMap { tau, rows, cols, values, residual: 0.0 };
    inverse.residual = cr2_residual(&inverse, &result.beltrami.mu);
    Ok(inverse)
}

fn w_jacobian(result: &UniformizationResult) -> Vec<f64> {
    let w_z = d_z(&result.periodic_part);
    let w_zbar = d_zbar(&result.periodic_part);
    w_z.data()
        .iter()
        .zip(w_zbar.data())
        .map(|(a, b)| (1.0 + a).norm_sqr() - (result.g0_mean + b).norm_sqr())
        .collect()
}

fn cr2_residual(inverse: &InverseMap, mu: &PeriodicField) -> f64 {
    let (da, db) = inverse.parameter_derivatives();
    let tau = inverse.tau;
    let gap = tau - tau.conj();
    let mut num = 0.0;
    let mut den = 0.0;
    for ((&ha, &hb), &h) in da.iter().zip(&db).zip(&inverse.values) {
        let h_w = (hb - tau.conj() * ha) / gap;
        let h_wbar = (tau * ha - hb) / gap;
        let mu_h = interp::sample(mu.data(), mu.rows(), mu.cols(), h.re, h.im);
        num += (h_wbar + mu_h * h_w.conj()).norm_sqr();
        den += h_w.norm_sqr();
    }
    (num / den).sqrt()
}

/// `E(h) − Area(h)` for the inverse map from the flat `{1, τ}` torus onto
/// the metric `λ|dz + μ dz̄|²`, evaluated on the square grid through the
/// pulled-back flat metric of the forward map.
pub fn conformal_defect(result: &UniformizationResult) -> f64 {
    let b = &result.beltrami;
    let g = b.reconstruct();
    let a = result.affine_scale();
    let n = g.g11.len();
    let mut energy = 0.0;
    for k in 0..n {
        let wx = (a + result.s_x[k]) / a;
        let wy = (c(0.0, 1.0) * (1.0 - result.g0_mean) + result.s_y[k]) / a;
        let (p11, p22) = (wx.norm_sqr(), wy.norm_sqr());
        let p12 = (wx * wy.conj()).re;
        let det = p11 * p22 - p12 * p12;
        // tr(P⁻¹ G) √det P
        let trace = (p22 * g.g11[k] - 2.0 * p12 * g.g12[k] + p11 * g.g22[k]) / det;
        energy += 0.5 * trace * det.sqrt();
    }
    energy / n as f64 - g.area()
}

/// Regularises, extracts `μ`, solves, inverts and measures the defect.
/// `delta = 0` skips regularisation.
pub fn uniformize(g: &MetricField, delta: f64, tol: f64) -> Result<UniformizationResult> {
    let g = if delta > 0.0 { regularize(g, delta)? } else { g.clone() };
    let mu = metric_to_beltrami(&g).map_err(|e| e.in_stage("beltrami coefficient"))?;
    let mut result =
        solve_periodic_beltrami(&mu, tol, DEFAULT_MAX_ITER).map_err(|e| e.in_stage("beltrami solve"))?;
    let inverse = invert_map(&result).map_err(|e| e.in_stage("inverse map"))?;
    result.h_grid = Some(inverse.values);
    result.conformal_defect = Some(conformal_defect(&result));
    Ok(result)
}

/// Distances between the solutions for two coefficient fields.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ContinuityReport {
    pub d_sup_w: f64,
    pub d_sup_h: f64,
    pub d_lp_grad: f64,
}

pub fn continuity_probe(mu_a: &BeltramiField, mu_b: &BeltramiField, tol: f64) -> Result<ContinuityReport> {
    if (mu_a.rows(), mu_a.cols()) != (mu_b.rows(), mu_b.cols()) {
        return Err(Error::Size("coefficient fields live on different grids".into()));
    }
    let k = mu_a.bound_k.max(mu_b.bound_k);
    if !(k < 1.0) {
        return Err(Error::Precondition(format!("common bound {k} must be below 1")));
    }
    let ra = solve_periodic_beltrami(mu_a, tol, DEFAULT_MAX_ITER)?;
    let rb = solve_periodic_beltrami(mu_b, tol, DEFAULT_MAX_ITER)?;
    let ia = invert_map(&ra)?;
    let ib = invert_map(&rb)?;
    let sup = |a: &[Complex64], b: &[Complex64]| a.iter().zip(b).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
    let (aa, ab) = ia.parameter_derivatives();
    let (ba, bb) = ib.parameter_derivatives();
    let n = aa.len() as f64;
    let grad = aa
        .iter()
        .zip(&ba)
        .zip(ab.iter().zip(&bb))
        .map(|((p, q), (s, t))| (p - q).norm_sqr() + (s - t).norm_sqr())
        .sum::<f64>()
        / n;
    Ok(ContinuityReport {
        d_sup_w: sup(&ra.w_grid, &rb.w_grid),
        d_sup_h: sup(&ia.values, &ib.values),
        d_lp_grad: grad.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn diag(rows: usize, a: f64, d: f64) -> MetricField {
        MetricField::from_fn(rows, rows, |_, _| (a, 0.0, d)).unwrap()
    }

    #[test]
    fn flat_metric_has_zero_coefficient() {
        let b = metric_to_beltrami(&diag(8, 1.0, 1.0)).unwrap();
        assert!(b.mu.sup_norm() == 0.0);
        assert!(b.lambda.iter().all(|&l| l == 1.0));
    }

    #[test]
    fn diag_four_one() {
        let b = metric_to_beltrami(&diag(8, 4.0, 1.0)).unwrap();
        assert!((b.mu.at(3, 5) - 1.0 / 3.0).norm() < 1e-15);
        assert!((b.lambda[7] - 2.25).abs() < 1e-15);
    }

    #[test]
    fn degenerate_metric_names_node() {
        let g = MetricField::from_fn(8, 8, |x, y| if x == 0.25 && y == 0.5 { (1.0, 1.0, 1.0) } else { (1.0, 0.0, 1.0) })
            .unwrap();
        match metric_to_beltrami(&g) {
            Err(Error::Degenerate { row, col }) => assert_eq!((row, col), (4, 2)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn regularize_examples() {
        let z = regularize(&diag(8, 0.0, 0.0), 0.5).unwrap();
        assert!(z.g11.iter().chain(&z.g22).all(|&v| v == 0.5));
        let r = regularize(&diag(8, 4.0, 1.0), 1.0).unwrap();
        assert_eq!((r.g11[0], r.g22[0], r.g12[0]), (5.0, 2.0, 0.0));
        assert!(matches!(regularize(&r, 0.0), Err(Error::Argument(_))));
    }

    #[test]
    fn constant_coefficient_gives_closed_form_mark() {
        let b = BeltramiField::constant(16, 16, c(1.0 / 3.0, 0.0)).unwrap();
        let r = solve_periodic_beltrami(&b, 1e-12, 100).unwrap();
        assert!((r.tau() - c(0.0, 0.5)).norm() < 1e-12);
        assert!(r.periodic_part.sup_norm() < 1e-14);
    }

    #[test]
    fn rejects_unit_bound() {
        let b = BeltramiField::constant(8, 8, c(1.0, 0.0)).unwrap();
        assert!(matches!(solve_periodic_beltrami(&b, 1e-10, 10), Err(Error::Precondition(_))));
    }

    #[test]
    fn reports_non_convergence() {
        let mu = PeriodicField::from_fn(Lattice::square(), 16, 16, |x, y| {
            c(0.5 * (2.0 * PI * x).cos(), 0.3 * (2.0 * PI * y).sin())
        })
        .unwrap();
        let err = solve_periodic_beltrami(&BeltramiField::from_mu(mu), 1e-14, 2).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { iterations: 2, .. }), "{err}");
    }

    #[test]
    fn identity_metric_uniformizes_trivially() {
        let r = uniformize(&MetricField::identity(16, 16).unwrap(), 0.0, 1e-10).unwrap();
        assert!((r.tau() - c(0.0, 1.0)).norm() < 1e-15);
        assert!(r.conformal_defect.unwrap().abs() < 1e-10);
        let h = r.h_grid.unwrap();
        assert!((h[16 * 3 + 5] - c(5.0 / 16.0, 3.0 / 16.0)).norm() < 1e-14);
    }
}
