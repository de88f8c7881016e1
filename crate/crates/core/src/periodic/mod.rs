//! Doubly periodic fields on torus fundamental domains.
//!
//! A field is sampled on a `rows × cols` grid over the parameter square
//! `[0,1)²`; node `(r, c)` sits at parameters `x = c/cols`, `y = r/rows`,
//! i.e. at the point `x + y·τ` of the lattice `{1, τ}`. Fourier mode
//! `(m, n)` is `exp(2πi(mx + ny))`, so `m` runs along columns and `n`
//! along rows.
//!
//! Derivative multipliers vanish on the Nyquist line of the direction they
//! differentiate; this keeps `∂_z̄ f = conj(∂_z f)` exact for real `f`.

mod pgrid;

pub use pgrid::{PGrid, PGRID_MAGIC};

use std::cell::RefCell;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on the mean accepted by [`dbar_inverse`].
pub const MEAN_TOLERANCE: f64 = 1e-10;

/// A point in the upper half plane labelling the flat torus `C / {1, τ}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mark(Complex64);

impl Mark {
    pub fn new(tau: Complex64) -> Result<Self> {
        if !(tau.im > 0.0) || !tau.re.is_finite() || !tau.im.is_finite() {
            return Err(Error::Argument(format!("mark must lie in the upper half plane, got {tau}")));
        }
        Ok(Mark(tau))
    }

    /// The square torus, `τ = i`.
    pub fn square() -> Self {
        Mark(Complex64::new(0.0, 1.0))
    }

    pub fn tau(self) -> Complex64 {
        self.0
    }
}

impl fmt::Display for Mark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:+}i", self.0.re, self.0.im)
    }
}

/// Period lattice `{ω₁, ω₂} = {1, τ}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    omega2: Mark,
}

impl Lattice {
    pub fn new(mark: Mark) -> Self {
        Lattice { omega2: mark }
    }

    pub fn square() -> Self {
        Lattice { omega2: Mark::square() }
    }

    pub fn omega1(&self) -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    pub fn omega2(&self) -> Complex64 {
        self.omega2.tau()
    }

    pub fn mark(&self) -> Mark {
        self.omega2
    }

    /// Plane point of the parameter pair `(x, y)`.
    pub fn point(&self, x: f64, y: f64) -> Complex64 {
        self.omega1() * x + self.omega2() * y
    }

    /// Area of the fundamental parallelogram.
    pub fn area(&self) -> f64 {
        self.omega2().im
    }
}

/// Checks the grid shape invariant shared by every periodic field.
pub fn check_shape(rows: usize, cols: usize) -> Result<()> {
    for (name, n) in [("rows", rows), ("cols", cols)] {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::Size(format!("{name} = {n} must be a power of two >= 8")));
        }
    }
    Ok(())
}

/// Signed frequency of index `k` on a grid of `len` samples, with a flag
/// for the unpaired Nyquist frequency `-len/2`.
pub fn frequency(k: usize, len: usize) -> (i64, bool) {
    let half = len / 2;
    if k < half {
        (k as i64, false)
    } else {
        (k as i64 - len as i64, k == half)
    }
}

/// A complex scalar sampled on a periodic grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicField {
    lattice: Lattice,
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl PeriodicField {
    pub fn new(lattice: Lattice, rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        check_shape(rows, cols)?;
        if data.len() != rows * cols {
            return Err(Error::Size(format!(
                "expected {} samples for a {rows}x{cols} grid, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(PeriodicField { lattice, rows, cols, data })
    }

    pub fn zeros(lattice: Lattice, rows: usize, cols: usize) -> Result<Self> {
        Self::new(lattice, rows, cols, vec![Complex64::new(0.0, 0.0); rows * cols])
    }

    /// Samples `f(x, y)` at the grid parameters.
    pub fn from_fn(
        lattice: Lattice,
        rows: usize,
        cols: usize,
        f: impl Fn(f64, f64) -> Complex64,
    ) -> Result<Self> {
        check_shape(rows, cols)?;
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let y = r as f64 / rows as f64;
            for c in 0..cols {
                data.push(f(c as f64 / cols as f64, y));
            }
        }
        Self::new(lattice, rows, cols, data)
    }

    pub fn from_real(lattice: Lattice, rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::new(lattice, rows, cols, data.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn at(&self, row: usize, col: usize) -> Complex64 {
        self.data[(row % self.rows) * self.cols + col % self.cols]
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.re).collect()
    }

    /// New field on the same grid with `f` applied nodewise.
    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        self.with_data(self.data.iter().map(|&z| f(z)).collect())
    }

    /// Nodewise combination of two fields on the same grid.
    pub fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "grid mismatch");
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        self.with_data(data)
    }

    fn with_data(&self, data: Vec<Complex64>) -> Self {
        PeriodicField { lattice: self.lattice, rows: self.rows, cols: self.cols, data }
    }

    pub fn mean(&self) -> Complex64 {
        self.data.iter().sum::<Complex64>() / self.data.len() as f64
    }

    /// Discrete L² norm normalised by the number of nodes (RMS).
    pub fn l2_norm(&self) -> f64 {
        (self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.data.len() as f64).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    /// Field with the mean removed.
    pub fn remove_mean(&self) -> Self {
        let m = self.mean();
        self.map(|z| z - m)
    }
}

/// Discrete Fourier coefficients of a [`PeriodicField`], normalised so
/// that a pure mode has coefficient one.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    lattice: Lattice,
    rows: usize,
    cols: usize,
    coefficients: Vec<Complex64>,
}

impl SpectralField {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// Coefficient of mode `exp(2πi(mx + ny))`.
    pub fn coefficient(&self, m: i64, n: i64) -> Complex64 {
        let c = m.rem_euclid(self.cols as i64) as usize;
        let r = n.rem_euclid(self.rows as i64) as usize;
        self.coefficients[r * self.cols + c]
    }

    pub fn inverse(&self) -> PeriodicField {
        let mut data = self.coefficients.clone();
        fft2(&mut data, self.rows, self.cols, true);
        PeriodicField { lattice: self.lattice, rows: self.rows, cols: self.cols, data }
    }

    /// Multiplies every mode by `multiplier(m, n, nyquist_m, nyquist_n)`.
    pub fn apply(&mut self, multiplier: impl Fn(i64, i64, bool, bool) -> Complex64) {
        for r in 0..self.rows {
            let (n, ny) = frequency(r, self.rows);
            for c in 0..self.cols {
                let (m, nx) = frequency(c, self.cols);
                self.coefficients[r * self.cols + c] *= multiplier(m, n, nx, ny);
            }
        }
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// In-place unnormalised 2-D FFT (forward) or normalised inverse.
fn fft2(data: &mut [Complex64], rows: usize, cols: usize, inverse: bool) {
    PLANNER.with(|planner| {
        let mut planner = planner.borrow_mut();
        let (row_fft, col_fft) = if inverse {
            (planner.plan_fft_inverse(cols), planner.plan_fft_inverse(rows))
        } else {
            (planner.plan_fft_forward(cols), planner.plan_fft_forward(rows))
        };
        row_fft.process(data);
        let mut column = vec![Complex64::new(0.0, 0.0); rows];
        for c in 0..cols {
            for r in 0..rows {
                column[r] = data[r * cols + c];
            }
            col_fft.process(&mut column);
            for r in 0..rows {
                data[r * cols + c] = column[r];
            }
        }
    });
    let scale = if inverse { 1.0 } else { 1.0 / (rows * cols) as f64 };
    if scale != 1.0 {
        for z in data.iter_mut() {
            *z *= scale;
        }
    }
}

pub fn forward_transform(f: &PeriodicField) -> SpectralField {
    let mut coefficients = f.data.clone();
    fft2(&mut coefficients, f.rows, f.cols, false);
    SpectralField { lattice: f.lattice, rows: f.rows, cols: f.cols, coefficients }
}

fn multiply(f: &PeriodicField, multiplier: impl Fn(i64, i64, bool, bool) -> Complex64) -> PeriodicField {
    let mut spectrum = forward_transform(f);
    spectrum.apply(multiplier);
    spectrum.inverse()
}

/// Spectral symbol of `∂_z` on mode `(m, n)`: `π(n + im)`.
pub fn dz_symbol(m: i64, n: i64, nyquist_m: bool, nyquist_n: bool) -> Complex64 {
    let m = if nyquist_m { 0.0 } else { m as f64 };
    let n = if nyquist_n { 0.0 } else { n as f64 };
    Complex64::new(PI * n, PI * m)
}

/// Spectral symbol of `∂_z̄` on mode `(m, n)`: `π(-n + im)`.
pub fn dzbar_symbol(m: i64, n: i64, nyquist_m: bool, nyquist_n: bool) -> Complex64 {
    let m = if nyquist_m { 0.0 } else { m as f64 };
    let n = if nyquist_n { 0.0 } else { n as f64 };
    Complex64::new(-PI * n, PI * m)
}

pub fn d_z(f: &PeriodicField) -> PeriodicField {
    multiply(f, dz_symbol)
}

pub fn d_zbar(f: &PeriodicField) -> PeriodicField {
    multiply(f, dzbar_symbol)
}

/// Derivatives along the two parameter directions, `(∂_x f, ∂_y f)`.
pub fn parameter_gradient(f: &PeriodicField) -> (PeriodicField, PeriodicField) {
    let spectrum = forward_transform(f);
    let mut dx = spectrum.clone();
    dx.apply(|m, _, nx, _| if nx { Complex64::new(0.0, 0.0) } else { Complex64::new(0.0, 2.0 * PI * m as f64) });
    let mut dy = spectrum;
    dy.apply(|_, n, _, ny| if ny { Complex64::new(0.0, 0.0) } else { Complex64::new(0.0, 2.0 * PI * n as f64) });
    (dx.inverse(), dy.inverse())
}

fn check_mean(f: &PeriodicField) -> Result<()> {
    let mean = f.mean();
    if mean.norm() > MEAN_TOLERANCE {
        return Err(Error::Precondition(format!(
            "field must have zero mean (|mean| <= {MEAN_TOLERANCE:e}), got mean {mean}"
        )));
    }
    Ok(())
}

/// Zero-mean solution `s` of `∂_z̄ s = f`.
///
/// The corner mode where both Nyquist lines meet has no `∂_z̄` symbol and is
/// dropped.
pub fn dbar_inverse(f: &PeriodicField) -> Result<PeriodicField> {
    check_mean(f)?;
    Ok(multiply(f, |m, n, nx, ny| invert_symbol(dzbar_symbol(m, n, nx, ny))))
}

/// Zero-mean solution `s` of `∂_z s = f`.
pub fn dz_inverse(f: &PeriodicField) -> Result<PeriodicField> {
    check_mean(f)?;
    Ok(multiply(f, |m, n, nx, ny| invert_symbol(dz_symbol(m, n, nx, ny))))
}

fn invert_symbol(symbol: Complex64) -> Complex64 {
    if symbol.norm_sqr() == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        symbol.inv()
    }
}

/// Symbol of the periodic Beurling transform: `(n + im)/(-n + im)`, zero on
/// the mean mode and one on the Nyquist corner.
pub fn beurling_symbol(m: i64, n: i64, nyquist_m: bool, nyquist_n: bool) -> Complex64 {
    if m == 0 && n == 0 {
        return Complex64::new(0.0, 0.0);
    }
    let denominator = dzbar_symbol(m, n, nyquist_m, nyquist_n);
    if denominator.norm_sqr() == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    dz_symbol(m, n, nyquist_m, nyquist_n) / denominator
}

/// Periodic Beurling transform, `∂_z ∘ (∂_z̄)⁻¹` on zero-mean fields. The
/// mean of the input is discarded.
pub fn beurling(f: &PeriodicField) -> PeriodicField {
    multiply(f, beurling_symbol)
}
