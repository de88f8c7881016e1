//! Sweepouts of tori, conformal reparametrization, coverings and
//! tightening by harmonic replacement.

mod covering;
mod drive;
mod reparam;
mod smooth;
mod tighten;

pub use covering::{build_covering, CoveringOptions, CoveringSchedule, Tent};
pub use drive::{minmax_drive, DriveHistory, DriveOptions, RoundRecord};
pub use reparam::{compose_with_inverse, conformal_slice, reparametrize_conformal, ReparamOptions, ReparamReport};
pub use smooth::{mollify, smooth_sweepout, SmoothOptions, SmoothingReport};
pub use tighten::{tighten, verify_property_star, PropertyStar, TightenOptions, TighteningReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonic::{energy_and_area, gradient_distance_sq, MapSlice, TargetManifold};
use crate::periodic::Mark;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointKind {
    Constant,
    Circle,
}

/// A path of marked torus maps sampled at `t_k = k/M`.
#[derive(Clone, Debug, PartialEq)]
pub struct Sweepout {
    pub times: Vec<f64>,
    pub slices: Vec<MapSlice>,
    pub endpoints: [EndpointKind; 2],
}

/// All nodes carry the same value.
pub fn is_constant(u: &MapSlice) -> bool {
    let first = u.node(0);
    u.values.chunks_exact(u.dim()).all(|v| v == first)
}

/// Largest adjacent-slice step `sup |u_{k+1} − u_k| + ‖∇u_{k+1} − ∇u_k‖`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Continuity {
    pub max_step: f64,
    /// Index `k` of the worst pair `(k, k + 1)`.
    pub at: usize,
}

impl Sweepout {
    pub fn new(slices: Vec<MapSlice>, endpoints: [EndpointKind; 2]) -> Result<Self> {
        if slices.len() < 2 {
            return Err(Error::Argument(format!("a sweepout needs at least two slices, got {}", slices.len())));
        }
        let first = &slices[0];
        for (i, s) in slices.iter().enumerate() {
            if (s.rows(), s.cols(), s.dim()) != (first.rows(), first.cols(), first.dim()) {
                return Err(Error::Size("slices differ in grid size or dimension".into()).at_slice(i));
            }
        }
        let m = slices.len() - 1;
        for (end, &kind) in [0, m].into_iter().zip(&endpoints) {
            if kind == EndpointKind::Constant {
                let s = &slices[end];
                if !is_constant(s) || s.mark != Mark::square() {
                    return Err(Error::Precondition(
                        "constant endpoints must be constant maps on the square torus".into(),
                    )
                    .at_slice(end));
                }
            }
        }
        let times = (0..=m).map(|k| k as f64 / m as f64).collect();
        Ok(Sweepout { times, slices, endpoints })
    }

    /// Samples `f(t)` at `M + 1` equally spaced times.
    pub fn from_fn(samples: usize, endpoints: [EndpointKind; 2], f: impl Fn(f64) -> Result<MapSlice>) -> Result<Self> {
        if samples == 0 {
            return Err(Error::Argument("a sweepout needs at least one time step".into()));
        }
        let slices = (0..=samples).map(|k| f(k as f64 / samples as f64)).collect::<Result<_>>()?;
        Self::new(slices, endpoints)
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    /// Indices of the slices strictly between the endpoints.
    pub fn interior(&self) -> std::ops::Range<usize> {
        1..self.slices.len() - 1
    }

    pub fn marks(&self) -> Vec<Mark> {
        self.slices.iter().map(|s| s.mark).collect()
    }

    pub fn validate(&self, target: &TargetManifold) -> Result<()> {
        for (i, s) in self.slices.iter().enumerate() {
            s.validate(target).map_err(|e| e.at_slice(i))?;
        }
        Ok(())
    }

    /// `(energy, area)` of every slice.
    pub fn energies_and_areas(&self) -> Vec<(f64, f64)> {
        use rayon::prelude::*;
        self.slices.par_iter().map(energy_and_area).collect()
    }

    /// Index and value of the largest slice energy.
    pub fn max_energy(&self) -> (usize, f64) {
        self.energies_and_areas()
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &(e, _))| if e > best.1 { (i, e) } else { best })
    }

    /// Discrete stand-in for continuity in `t`: the largest step between
    /// adjacent slices, measured on the grid of the earlier one.
    pub fn continuity(&self) -> Continuity {
        let mut worst = Continuity { max_step: 0.0, at: 0 };
        for k in 0..self.slices.len() - 1 {
            let (a, b) = (&self.slices[k], &self.slices[k + 1]);
            let step = a.sup_distance(b) + gradient_distance_sq(a, b).sqrt();
            if step > worst.max_step {
                worst = Continuity { max_step: step, at: k };
            }
        }
        worst
    }
}
