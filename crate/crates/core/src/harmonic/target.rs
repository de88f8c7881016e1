//! Target manifolds embedded in Euclidean space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A closed submanifold `N ⊂ R^d` with an explicit nearest-point projection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetManifold {
    /// Round sphere of the given radius in `R^dim`.
    Sphere { dim: usize, radius: f64 },
    /// Product of circles, one per consecutive coordinate pair.
    FlatTorusProduct { radii: Vec<f64> },
    /// Ellipsoid `Σ x_i² / a_i² = 1`.
    Ellipsoid { semi_axes: Vec<f64> },
}

impl TargetManifold {
    pub fn sphere(dim: usize) -> Self {
        TargetManifold::Sphere { dim, radius: 1.0 }
    }

    /// Looks up a target by its CLI name.
    pub fn by_name(name: &str) -> Result<Self> {
        Ok(match name {
            "s2" | "sphere2" => Self::sphere(3),
            "s3" | "sphere3" => Self::sphere(4),
            "torus" | "flat-torus" => TargetManifold::FlatTorusProduct { radii: vec![1.0, 1.0] },
            "clifford-torus" => {
                TargetManifold::FlatTorusProduct { radii: vec![std::f64::consts::FRAC_1_SQRT_2; 2] }
            }
            "ellipsoid" => TargetManifold::Ellipsoid { semi_axes: vec![1.0, 1.0, 0.5] },
            _ => {
                return Err(Error::Argument(format!(
                    "unknown target `{name}`; available: s2, s3, torus, clifford-torus, ellipsoid"
                )))
            }
        })
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            TargetManifold::Sphere { dim, radius } => *dim >= 2 && *radius > 0.0,
            TargetManifold::FlatTorusProduct { radii } => !radii.is_empty() && radii.iter().all(|&r| r > 0.0),
            TargetManifold::Ellipsoid { semi_axes } => semi_axes.len() >= 2 && semi_axes.iter().all(|&a| a > 0.0),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Argument(format!("invalid target {self:?}")))
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            TargetManifold::Sphere { dim, .. } => *dim,
            TargetManifold::FlatTorusProduct { radii } => 2 * radii.len(),
            TargetManifold::Ellipsoid { semi_axes } => semi_axes.len(),
        }
    }

    /// Radius of a tubular neighbourhood on which the projection is smooth.
    pub fn reach(&self) -> f64 {
        match self {
            TargetManifold::Sphere { radius, .. } => *radius,
            TargetManifold::FlatTorusProduct { radii } => radii.iter().copied().fold(f64::INFINITY, f64::min),
            TargetManifold::Ellipsoid { semi_axes } => {
                let min = semi_axes.iter().copied().fold(f64::INFINITY, f64::min);
                let max = semi_axes.iter().copied().fold(0.0, f64::max);
                min * min / max
            }
        }
    }

    /// Nearest point of `N`, written into `x`.
    pub fn project_in_place(&self, x: &mut [f64]) {
        match self {
            TargetManifold::Sphere { radius, .. } => scale_to(x, *radius),
            TargetManifold::FlatTorusProduct { radii } => {
                for (pair, &r) in x.chunks_exact_mut(2).zip(radii) {
                    scale_to(pair, r);
                }
            }
            TargetManifold::Ellipsoid { semi_axes } => project_ellipsoid(x, semi_axes),
        }
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        self.project_in_place(&mut out);
        out
    }

    /// Distance from `x` to `N`.
    pub fn distance(&self, x: &[f64]) -> f64 {
        let p = self.project(x);
        p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    /// Unit normals spanning the normal space at a point of `N`.
    pub fn normals(&self, p: &[f64]) -> Vec<Vec<f64>> {
        let d = p.len();
        let unit = |mut v: Vec<f64>| {
            let n = norm(&v);
            if n > 0.0 {
                v.iter_mut().for_each(|x| *x /= n);
            }
            v
        };
        match self {
            TargetManifold::Sphere { .. } => vec![unit(p.to_vec())],
            TargetManifold::FlatTorusProduct { .. } => (0..d / 2)
                .map(|k| {
                    let mut v = vec![0.0; d];
                    v[2 * k] = p[2 * k];
                    v[2 * k + 1] = p[2 * k + 1];
                    unit(v)
                })
                .collect(),
            TargetManifold::Ellipsoid { semi_axes } => {
                vec![unit(p.iter().zip(semi_axes).map(|(x, a)| x / (a * a)).collect())]
            }
        }
    }

    /// Component of `v` tangent to `N` at `p`.
    pub fn tangent_project(&self, p: &[f64], v: &[f64]) -> Vec<f64> {
        let mut out = v.to_vec();
        for n in self.normals(p) {
            let s = dot(&out, &n);
            out.iter_mut().zip(&n).for_each(|(o, m)| *o -= s * m);
        }
        out
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn scale_to(x: &mut [f64], radius: f64) {
    let n = norm(x);
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v *= radius / n);
    } else {
        x.iter_mut().for_each(|v| *v = 0.0);
        x[0] = radius;
    }
}

/// Nearest point on an ellipsoid: `x_i = a_i² y_i / (a_i² + t)` with `t`
/// the root above `-min a_i²` of `Σ a_i² y_i² / (a_i² + t)² = 1`.
fn project_ellipsoid(y: &mut [f64], axes: &[f64]) {
    let excess = |t: f64| -> f64 { y.iter().zip(axes).map(|(v, a)| (a * v / (a * a + t)).powi(2)).sum::<f64>() - 1.0 };
    let (imin, amin) = axes
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty axes");
    let amax = axes.iter().copied().fold(0.0, f64::max);
    let mut lo = -amin * amin;
    let mut hi = amax * norm(y) + amax * amax;
    if y[imin] == 0.0 && excess(lo * (1.0 - 1e-12)) <= 0.0 {
        // The root sits on the singular value: the nearest point lies in
        // the plane through the shortest axis.
        let mut rest = 0.0;
        for (i, (v, a)) in y.iter_mut().zip(axes).enumerate() {
            if i != imin {
                let d = a * a - amin * amin;
                *v = if d > 0.0 { *v * a * a / d } else { 0.0 };
                rest += (*v / a).powi(2);
            }
        }
        y[imin] = amin * (1.0 - rest).max(0.0).sqrt();
        return;
    }
    let mut t = 0.0f64.clamp(lo, hi);
    for _ in 0..200 {
        let value = excess(t);
        if value > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        if value.abs() < 1e-15 || hi - lo <= 1e-15 * (1.0 + t.abs()) {
            break;
        }
        let slope: f64 = y.iter().zip(axes).map(|(v, a)| -2.0 * (a * v).powi(2) / (a * a + t).powi(3)).sum();
        let newton = t - value / slope;
        t = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
    }
    for (v, a) in y.iter_mut().zip(axes) {
        *v *= a * a / (a * a + t);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_projection() {
        let s = TargetManifold::sphere(3);
        let p = s.project(&[3.0, 0.0, 4.0]);
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[2] - 0.8).abs() < 1e-15);
        assert_eq!(s.project(&[0.0, 0.0, 0.0]), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn ellipsoid_projection_lands_on_surface() {
        let e = TargetManifold::Ellipsoid { semi_axes: vec![1.0, 2.0, 0.5] };
        for y in [[0.3, -0.2, 0.1], [3.0, 1.0, -2.0], [0.0, 0.1, 0.0], [1.0, 0.0, 0.0]] {
            let p = e.project(&y);
            let level: f64 = p.iter().zip([1.0, 2.0, 0.5]).map(|(x, a)| (x / a) * (x / a)).sum();
            assert!((level - 1.0).abs() < 1e-12, "{y:?} -> {p:?}");
        }
    }

    #[test]
    fn names_resolve() {
        assert_eq!(TargetManifold::by_name("s2").unwrap().ambient_dim(), 3);
        assert!(TargetManifold::by_name("klein").is_err());
    }
}
