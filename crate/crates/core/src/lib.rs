//! Numerical toolkit for min-max constructions of minimal tori.
//!
//! The crate is organised along the pipeline it implements:
//!
//! * [`periodic`]: doubly periodic sampled fields and the spectral
//!   Cauchy–Riemann calculus (`∂_z`, `∂_z̄`, their inverses, the periodic
//!   Beurling multiplier) plus the `PGRID1` grid file format.
//! * [`beltrami`]: Beltrami coefficients of torus metrics, the periodic
//!   Beltrami solver, marks and normalized conformal maps.
//! * [`harmonic`]: target manifolds, map slices, the discrete Dirichlet
//!   energy and area, harmonic replacement on ball collections and the
//!   inequality probes built on it.
//! * [`sweepout`]: sweepouts, conformal reparametrization, coverings and
//!   tightening by harmonic replacement.
//! * [`bubbling`]: modular reduction of marks, degeneration
//!   classification, energy concentration and bubble extraction.
//! * [`pipeline`]: configuration, scenarios and the end-to-end driver
//!   used by the `minmax-tori` binary.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beltrami;
pub mod bubbling;
pub mod error;
pub mod harmonic;
pub mod interp;
pub mod periodic;
pub mod pipeline;
pub mod sweepout;

pub use error::{Error, Result};
pub use periodic::{Lattice, Mark};
