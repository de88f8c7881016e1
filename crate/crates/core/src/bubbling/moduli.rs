//! Reduction of marks to the fundamental domain and mark-equivalent resampling.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::harmonic::MapSlice;
use crate::periodic::Mark;

const MAX_STEPS: usize = 10_000;
/// Marks within this distance of the unit circle count as lying on it.
const ARC_TOLERANCE: f64 = 1e-12;

/// One generator application.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ModularStep {
    /// `τ ↦ τ + k`
    T(i64),
    /// `τ ↦ −1/τ`
    S,
}

/// Integer unimodular matrix `[[a, b], [c, d]]` acting by `(aτ + b)/(cτ + d)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Unimodular {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl Unimodular {
    pub const IDENTITY: Unimodular = Unimodular { a: 1, b: 0, c: 0, d: 1 };

    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        if a * d - b * c != 1 {
            return Err(Error::Argument(format!("matrix [[{a}, {b}], [{c}, {d}]] has determinant {}", a * d - b * c)));
        }
        Ok(Unimodular { a, b, c, d })
    }

    pub fn determinant(&self) -> i64 {
        self.a * self.d - self.b * self.c
    }

    pub fn apply(&self, tau: Complex64) -> Complex64 {
        (tau * self.a as f64 + self.b as f64) / (tau * self.c as f64 + self.d as f64)
    }

    /// `self · other`: apply `other` first.
    pub fn compose(&self, other: &Unimodular) -> Unimodular {
        Unimodular {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }

    fn of_step(step: ModularStep) -> Unimodular {
        match step {
            ModularStep::T(k) => Unimodular { a: 1, b: k, c: 0, d: 1 },
            ModularStep::S => Unimodular { a: 0, b: -1, c: 1, d: 0 },
        }
    }
}

/// A mark reduced to the fundamental domain together with the reduction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModuliPoint {
    pub tau: Mark,
    pub word: Vec<ModularStep>,
    pub matrix: Unimodular,
}

/// Membership in `{|τ| ≥ 1, Im τ > 0, −½ < Re τ ≤ ½}` with `Re τ ≥ 0` on
/// the unit circle.
pub fn in_fundamental_domain(tau: Complex64) -> bool {
    let r2 = tau.norm_sqr();
    tau.im > 0.0
        && tau.re > -0.5
        && tau.re <= 0.5
        && r2 >= 1.0
        && !(r2 - 1.0 <= ARC_TOLERANCE && tau.re < 0.0)
}

pub fn reduce_to_fundamental_domain(mark: Mark) -> Result<ModuliPoint> {
    let mut tau = mark.tau();
    let mut word = Vec::new();
    let mut matrix = Unimodular::IDENTITY;
    let mut push = |step: ModularStep, tau: &mut Complex64, word: &mut Vec<ModularStep>| {
        *tau = match step {
            ModularStep::T(k) => *tau + k as f64,
            ModularStep::S => -1.0 / *tau,
        };
        matrix = Unimodular::of_step(step).compose(&matrix);
        word.push(step);
    };
    for _ in 0..MAX_STEPS {
        let mut k = -(tau.re - 0.5).ceil() as i64;
        let shifted = tau.re + k as f64;
        if shifted <= -0.5 {
            k += 1;
        } else if shifted > 0.5 {
            k -= 1;
        }
        if k != 0 {
            push(ModularStep::T(k), &mut tau, &mut word);
        }
        if tau.norm_sqr() < 1.0 - ARC_TOLERANCE {
            push(ModularStep::S, &mut tau, &mut word);
            continue;
        }
        if tau.norm_sqr() - 1.0 <= ARC_TOLERANCE && tau.re < 0.0 {
            // On the arc S acts as the reflection Re ↦ −Re.
            matrix = Unimodular::of_step(ModularStep::S).compose(&matrix);
            word.push(ModularStep::S);
            tau = -tau.conj();
        }
        if tau.norm_sqr() < 1.0 {
            tau /= tau.norm();
        }
        return Ok(ModuliPoint { tau: Mark::new(tau)?, word, matrix });
    }
    Err(Error::NonConvergence { iterations: MAX_STEPS, residual: tau.norm() })
}

/// The same map on the torus `{1, τ'}` with `τ' = (aτ + b)/(cτ + d)`.
///
/// The lattices are related by `z ↦ z/(cτ + d)`, a similarity; node
/// `(i', j')` of the new grid is the old node `(j'c + i'a, j'd + i'b)`
/// modulo the grid size. Requires a square node grid.
pub fn modular_resample(u: &MapSlice, matrix: &Unimodular) -> Result<MapSlice> {
    if u.rows() != u.cols() {
        return Err(Error::Size("mark-equivalent resampling needs rows == cols".into()));
    }
    if matrix.determinant() != 1 {
        return Err(Error::Argument("matrix is not unimodular".into()));
    }
    let n = u.rows() as i64;
    let mark = Mark::new(matrix.apply(u.tau()))?;
    let dim = u.dim();
    let mut values = Vec::with_capacity(u.values.len());
    let mut frozen = Vec::with_capacity(u.nodes());
    for i in 0..n {
        for j in 0..n {
            let row = j * matrix.c + i * matrix.a;
            let col = j * matrix.d + i * matrix.b;
            let k = u.index(row, col);
            values.extend_from_slice(&u.values[k * dim..(k + 1) * dim]);
            frozen.push(u.frozen[k]);
        }
    }
    let mut out = MapSlice::new(mark, u.rows(), u.cols(), dim, values)?;
    out.frozen = frozen;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn square_mark_is_already_reduced() {
        let p = reduce_to_fundamental_domain(Mark::square()).unwrap();
        assert_eq!(p.tau.tau(), c(0.0, 1.0));
        assert!(p.word.is_empty());
    }

    #[test]
    fn translate_back() {
        let p = reduce_to_fundamental_domain(Mark::new(c(5.0, 1.0)).unwrap()).unwrap();
        assert_eq!(p.word, vec![ModularStep::T(-5)]);
        assert!((p.matrix.apply(c(5.0, 1.0)) - c(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn invert_then_translate() {
        let p = reduce_to_fundamental_domain(Mark::new(c(0.5, 0.5)).unwrap()).unwrap();
        assert_eq!(p.word, vec![ModularStep::S, ModularStep::T(1)]);
        assert!((p.tau.tau() - c(0.0, 1.0)).norm() < 1e-12);
        assert_eq!(p.matrix.determinant(), 1);
    }

    #[test]
    fn arc_ties_go_right() {
        let t = Complex64::from_polar(1.0, 2.0);
        let p = reduce_to_fundamental_domain(Mark::new(t).unwrap()).unwrap();
        assert!(p.tau.tau().re >= 0.0 && in_fundamental_domain(p.tau.tau()));
        let edge = reduce_to_fundamental_domain(Mark::new(c(-0.5, 2.0)).unwrap()).unwrap();
        assert_eq!(edge.tau.tau(), c(0.5, 2.0));
    }
}
