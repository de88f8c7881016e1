//! Area-measure comparison of maps through Gaussian test functions.

use crate::error::{Error, Result};
use crate::harmonic::MapSlice;

/// Gaussian bumps `exp(−|p − c_k|² / 2σ²)` on the ambient space with
/// centers from a Halton sequence in `[−extent, extent]^dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct TestFamily {
    pub centers: Vec<Vec<f64>>,
    pub sigma: f64,
}

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn radical_inverse(mut k: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while k > 0 {
        out += (k % base) as f64 * inv;
        k /= base;
        inv /= base as f64;
    }
    out
}

impl TestFamily {
    pub fn new(dim: usize, count: usize, extent: f64, sigma: f64) -> Result<Self> {
        if dim > PRIMES.len() {
            return Err(Error::Argument(format!("test family supports up to {} dimensions", PRIMES.len())));
        }
        let centers = (1..=count as u64)
            .map(|k| PRIMES[..dim].iter().map(|&b| extent * (2.0 * radical_inverse(k, b) - 1.0)).collect())
            .collect();
        Ok(TestFamily { centers, sigma })
    }

    /// The default family: `count` bumps of width ½ over `[−1.25, 1.25]^dim`.
    pub fn standard(dim: usize, count: usize) -> Result<Self> {
        Self::new(dim, count, 1.25, 0.5)
    }

    pub fn evaluate(&self, k: usize, p: &[f64]) -> f64 {
        let d2: f64 = self.centers[k].iter().zip(p).map(|(c, x)| (c - x) * (c - x)).sum();
        (-d2 / (2.0 * self.sigma * self.sigma)).exp()
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }
}

/// Total area and `∫ φ_k dA_u` for every test function.
///
/// The area element `|u_x ∧ u_y| dx dy` uses spectral derivatives and the
/// node rule, which is spectrally accurate for smooth periodic maps.
pub fn area_moments(u: &MapSlice, family: &TestFamily) -> (f64, Vec<f64>) {
    let (ux, uy) = u.parameter_gradients();
    let dim = u.dim();
    let weight = 1.0 / u.nodes() as f64;
    let mut total = 0.0;
    let mut moments = vec![0.0; family.len()];
    for k in 0..u.nodes() {
        let a = &ux[k * dim..(k + 1) * dim];
        let b = &uy[k * dim..(k + 1) * dim];
        let (aa, ab, bb) = a.iter().zip(b).fold((0.0, 0.0, 0.0), |acc, (x, y)| {
            (acc.0 + x * x, acc.1 + x * y, acc.2 + y * y)
        });
        let da = (aa * bb - ab * ab).max(0.0).sqrt() * weight;
        total += da;
        let p = u.node(k);
        for (m, slot) in moments.iter_mut().enumerate() {
            *slot += family.evaluate(m, p) * da;
        }
    }
    (total, moments)
}

/// `max_k |∫φ_k dA_u / A_u − ∫φ_k dA_v / A_v|` over the standard family.
///
/// A surrogate for the varifold distance: it sees the positions of the
/// area measures only, not their tangent planes.
pub fn varifold_distance_simplified(u: &MapSlice, v: &MapSlice, test_count: usize) -> Result<f64> {
    if u.dim() != v.dim() {
        return Err(Error::Argument(format!("maps have dimensions {} and {}", u.dim(), v.dim())));
    }
    let family = TestFamily::standard(u.dim(), test_count)?;
    let (au, mu) = area_moments(u, &family);
    let (av, mv) = area_moments(v, &family);
    Ok(match (au > 0.0, av > 0.0) {
        (false, false) => 0.0,
        (true, true) => mu.iter().zip(&mv).map(|(a, b)| (a / au - b / av).abs()).fold(0.0, f64::max),
        _ => 1.0,
    })
}
