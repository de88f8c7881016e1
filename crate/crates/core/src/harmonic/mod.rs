//! Target manifolds, discrete energy and area, and harmonic replacement.

mod boundary;
mod decrease;
mod energy;
mod replace;
mod slice;
mod target;

pub use boundary::{collar_interpolate, courant_lebesgue_radius, Collar, RadiusChoice};
pub use decrease::{max_energy_decrease, CandidateFamily, EnergyDecrease};
pub use energy::{
    area, area_in, cell_energies, cell_quantities, dirichlet_integral, energy, energy_and_area, energy_density,
    energy_in, masked_sum, GridGeometry, RegionEnergy, Stencil, EDGE_DIFFERENCE,
};
pub use replace::{
    comparison_probe, energy_gap_defect, free_nodes, gradient_distance_sq, harmonic_replace, iterated_replace,
    replacement_continuity_probe, tangential_residual, ComparisonReport, ComparisonRow, ReplaceOptions, Replacement,
    ReplacementContinuity, COMPARISON_FACTORS,
};
pub use slice::{boundary_ring, shortest_period, torus_displacement, torus_offset, Ball, BallCollection, MapSlice};
pub use target::TargetManifold;
