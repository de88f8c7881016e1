//! Modular reduction of marks, degeneration classification, energy
//! concentration and bubble extraction along sequences of slices.

mod classify;
mod concentration;
mod moduli;
mod neck;
mod varifold;

pub use classify::{classify_sequence, moduli_distance, ClassifyOptions, Verdict};
pub use concentration::{
    concentration_radii, concentration_radius, extract_bubbles, torus_diameter, Bubble, BubbleMap, BubbleOptions,
    BubbleTree, RadiusField,
};
pub use moduli::{
    in_fundamental_domain, modular_resample, reduce_to_fundamental_domain, ModularStep, ModuliPoint, Unimodular,
};
pub use neck::{neck_report, nu_almost_harmonic_check, nu_sample_balls, CylinderRegion, NeckReport, NuCheck};
pub use varifold::{area_moments, varifold_distance_simplified, TestFamily};
