//! Cylinder charts on annuli and the almost-harmonic test on necks.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::harmonic::{
    cell_energies, gradient_distance_sq, harmonic_replace, masked_sum, shortest_period, torus_offset, Ball,
    BallCollection, MapSlice, ReplaceOptions, TargetManifold,
};
use crate::interp;

const T_SAMPLES: usize = 96;
const THETA_SAMPLES: usize = 128;

/// The cylinder `[t1, t2] × S¹` identified with the annulus
/// `e^{−t2} < |x − center| < e^{−t1}` by `x = center + e^{−t + 2πiθ}`.
///
/// `θ` is measured in turns. Energies are reported in the conformal
/// coordinates `(t, s = 2πθ)`, where they agree with the annulus energies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CylinderRegion {
    pub center: (f64, f64),
    pub t_range: (f64, f64),
    pub theta_period: f64,
}

impl CylinderRegion {
    pub fn new(center: (f64, f64), t1: f64, t2: f64) -> Result<Self> {
        if !(t1 < t2) {
            return Err(Error::Argument(format!("cylinder needs t1 < t2, got [{t1}, {t2}]")));
        }
        Ok(CylinderRegion { center, t_range: (t1, t2), theta_period: 1.0 })
    }

    /// Cylinder over the annulus with the given plane radii.
    pub fn from_radii(center: (f64, f64), inner: f64, outer: f64) -> Result<Self> {
        if !(inner > 0.0 && inner < outer) {
            return Err(Error::Argument(format!("annulus needs 0 < inner < outer, got {inner}, {outer}")));
        }
        Self::new(center, -outer.ln(), -inner.ln())
    }

    pub fn inner_radius(&self) -> f64 {
        (-self.t_range.1).exp()
    }

    pub fn outer_radius(&self) -> f64 {
        (-self.t_range.0).exp()
    }

    pub fn length(&self) -> f64 {
        self.t_range.1 - self.t_range.0
    }

    fn check(&self, tau: Complex64) -> Result<()> {
        let limit = 0.5 * shortest_period(tau);
        if self.outer_radius() >= limit {
            return Err(Error::Geometry(format!(
                "annulus of outer radius {} does not embed in the torus (limit {limit})",
                self.outer_radius()
            )));
        }
        Ok(())
    }

    /// Node mask of the annulus.
    pub fn mask(&self, tau: Complex64, rows: usize, cols: usize) -> Vec<bool> {
        let outer = BallCollection::single(Ball::new(self.center, self.outer_radius())).mask(tau, rows, cols);
        let inner = BallCollection::single(Ball::new(self.center, self.inner_radius())).mask(tau, rows, cols);
        outer.iter().zip(&inner).map(|(&o, &i)| o && !i).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NeckReport {
    /// `½ ∫ |u_t|² + |u_s|²`
    pub e_total: f64,
    /// `½ ∫ |u_s|²`
    pub e_theta: f64,
    /// `e_theta / e_total`, zero for a constant map.
    pub ratio: f64,
    /// `⅛ ∫ |u_t|² − |u_s|²`
    pub defect_lower_bound: f64,
}

/// Cylinder-chart energies of `u` on the region.
///
/// Plane gradients come from spectral parameter derivatives interpolated
/// at the chart points; `u_t = −ρ ∂_ρ u` and `u_s = ρ ∂_φ u` follow from the
/// chart Jacobian.
pub fn neck_report(u: &MapSlice, region: &CylinderRegion) -> Result<NeckReport> {
    let tau = u.tau();
    region.check(tau)?;
    let (ux, uy) = u.parameter_gradients();
    let dim = u.dim();
    let (t1, t2) = region.t_range;
    let dt = (t2 - t1) / T_SAMPLES as f64;
    let ds = 2.0 * PI / THETA_SAMPLES as f64;
    let (mut et, mut es) = (0.0, 0.0);
    for i in 0..T_SAMPLES {
        let t = t1 + (i as f64 + 0.5) * dt;
        let rho = (-t).exp();
        for j in 0..THETA_SAMPLES {
            let phi = (j as f64 + 0.5) * ds;
            let dir = Complex64::from_polar(1.0, phi);
            let p = torus_offset(tau, region.center, dir * rho);
            let gx = interp::sample_vector(&ux, u.rows(), u.cols(), dim, p.0, p.1);
            let gy = interp::sample_vector(&uy, u.rows(), u.cols(), dim, p.0, p.1);
            for d in 0..dim {
                // Plane derivatives from parameter derivatives.
                let u_x = gx[d];
                let u_y = (gy[d] - tau.re * gx[d]) / tau.im;
                let radial = dir.re * u_x + dir.im * u_y;
                let angular = -dir.im * u_x + dir.re * u_y;
                et += (rho * radial).powi(2);
                es += (rho * angular).powi(2);
            }
        }
    }
    let (et, es) = (0.5 * et * dt * ds, 0.5 * es * dt * ds);
    let total = et + es;
    Ok(NeckReport {
        e_total: total,
        e_theta: es,
        ratio: if total > 0.0 { es / total } else { 0.0 },
        defect_lower_bound: 0.25 * (et - es),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NuCheck {
    pub holds: bool,
    /// Largest `∫|∇u − ∇v|² / ∫_annulus |∇u|²` over the samples.
    pub worst_ratio: f64,
    pub worst_ball: Option<Ball>,
    pub samples: usize,
}

/// Balls inside the annulus: centers on a golden-angle spiral in the
/// cylinder, radii 90% of the distance to the annulus boundary.
pub fn nu_sample_balls(region: &CylinderRegion, samples: usize, tau: Complex64) -> Vec<Ball> {
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let (inner, outer) = (region.inner_radius(), region.outer_radius());
    (0..samples)
        .map(|k| {
            let frac = (k as f64 + 0.5) / samples as f64;
            let rho = inner + (outer - inner) * frac;
            let phi = 2.0 * PI * (k as f64 * golden).fract();
            let center = torus_offset(tau, region.center, Complex64::from_polar(rho, phi));
            let center = (center.0.rem_euclid(1.0), center.1.rem_euclid(1.0));
            Ball::new(center, 0.9 * (rho - inner).min(outer - rho))
        })
        .collect()
}

/// Tests `∫_{⅛B} |∇u − ∇v|² ≤ ν ∫_annulus |∇u|²` with `v = H(u, ⅛B)` for
/// sampled balls `B` in the annulus.
pub fn nu_almost_harmonic_check(
    u: &MapSlice,
    target: &TargetManifold,
    region: &CylinderRegion,
    nu: f64,
    samples: usize,
    opts: &ReplaceOptions,
) -> Result<NuCheck> {
    region.check(u.tau())?;
    let neck = 2.0 * masked_sum(&cell_energies(u), &region.mask(u.tau(), u.rows(), u.cols())).value;
    let mut worst = NuCheck { holds: true, worst_ratio: 0.0, worst_ball: None, samples };
    for ball in nu_sample_balls(region, samples, u.tau()) {
        let eighth = BallCollection::single(ball.scaled(0.125));
        let v = harmonic_replace(u, target, &eighth, &opts.unchecked())?;
        let lhs = gradient_distance_sq(u, &v.slice);
        let ratio = if neck > 0.0 {
            lhs / neck
        } else if lhs > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        if lhs > nu * neck {
            worst.holds = false;
        }
        if ratio > worst.worst_ratio || worst.worst_ball.is_none() {
            worst.worst_ratio = ratio;
            worst.worst_ball = Some(ball);
        }
    }
    Ok(worst)
}
