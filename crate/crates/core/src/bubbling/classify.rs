//! Convergence or degeneration of a sequence of marks in moduli space.

use num_complex::Complex64;
use serde::Serialize;

use super::moduli::reduce_to_fundamental_domain;
use crate::error::{Error, Result};
use crate::periodic::Mark;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClassifyOptions {
    /// Reduced `Im τ` above which a growing sequence counts as degenerate.
    pub blowup_threshold: f64,
    /// Number of final entries that must increase strictly.
    pub trend_length: usize,
    /// Largest moduli distance among the final `window` reduced marks for
    /// a converged verdict.
    pub cauchy_tolerance: f64,
    pub window: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions { blowup_threshold: 50.0, trend_length: 5, cauchy_tolerance: 1e-2, window: 3 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Converged { tau: Mark },
    Degenerate,
    Inconclusive,
}

/// Distance between reduced marks, identifying the edges `Re τ = ±½` and
/// the two halves of the unit arc.
pub fn moduli_distance(a: Complex64, b: Complex64) -> f64 {
    let mut best = f64::INFINITY;
    for k in [-1.0, 0.0, 1.0] {
        best = best.min((a - b - k).norm());
        if (b.norm() - 1.0).abs() < 0.1 {
            best = best.min((a + b.conj() - k).norm());
        }
    }
    best
}

pub fn classify_sequence(taus: &[Mark], opts: &ClassifyOptions) -> Result<Verdict> {
    if taus.is_empty() {
        return Err(Error::Argument("cannot classify an empty sequence of marks".into()));
    }
    let reduced: Vec<Complex64> =
        taus.iter().map(|&t| reduce_to_fundamental_domain(t).map(|p| p.tau.tau())).collect::<Result<_>>()?;
    let last = reduced[reduced.len() - 1];
    if last.im > opts.blowup_threshold && reduced.len() >= opts.trend_length.max(2) {
        let tail = &reduced[reduced.len() - opts.trend_length.max(2)..];
        if tail.windows(2).all(|w| w[1].im > w[0].im) {
            return Ok(Verdict::Degenerate);
        }
    }
    let tail = &reduced[reduced.len().saturating_sub(opts.window.max(1))..];
    let spread = tail
        .iter()
        .flat_map(|a| tail.iter().map(move |b| moduli_distance(*a, *b)))
        .fold(0.0, f64::max);
    if spread <= opts.cauchy_tolerance {
        return Ok(Verdict::Converged { tau: Mark::new(last)? });
    }
    Ok(Verdict::Inconclusive)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_and_growing_sequences() {
        let opts = ClassifyOptions::default();
        let square = vec![Mark::square(); 4];
        assert_eq!(classify_sequence(&square, &opts).unwrap(), Verdict::Converged { tau: Mark::square() });
        let growing: Vec<Mark> = (1..=60).map(|n| Mark::new(Complex64::new(0.0, n as f64)).unwrap()).collect();
        assert_eq!(classify_sequence(&growing, &opts).unwrap(), Verdict::Degenerate);
        assert!(classify_sequence(&[], &opts).is_err());
    }

    #[test]
    fn oscillation_is_inconclusive() {
        let taus: Vec<Mark> =
            (0..6).map(|n| Mark::new(Complex64::new(0.0, if n % 2 == 0 { 1.0 } else { 3.0 })).unwrap()).collect();
        assert_eq!(classify_sequence(&taus, &ClassifyOptions::default()).unwrap(), Verdict::Inconclusive);
    }
}
