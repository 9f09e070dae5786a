//! Discrete energy-minimizing disks in the conformal chart of a collapsed set.
//!
//! The target space is the chart disk of radius `K` with the length element
//! `lambda_E(x) |dx|`, where `lambda_E = exp(-1/d) / d^2` and `d` is the
//! Euclidean distance to the set `E`. The factor vanishes to infinite order on
//! `E`, so `E` is collapsed to a point.

pub mod conformal;
pub mod energy;
pub mod fiber;
pub mod mesh;
pub mod solver;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::density::QuadSpec;
use crate::error::{Error, Result};
use crate::quad;

pub use conformal::{joukowski_pair, surgery_segment, theodorsen_map, Joukowski, SurgeryReport, TheodorsenConfig, TheodorsenMap};
pub use energy::{discrete_energy, discrete_energy_with, triangle_energies, EnergyBreakdown, EnergyMode, InitialMap, MapState, WeightRule};
pub use fiber::{fiber_region, FiberReport};
pub use mesh::DiskMesh;
pub use solver::{minimize_energy, SolveReport, SolverConfig};

/// Below this distance `exp(-1/d)` underflows to zero.
const UNDERFLOW: f64 = 1.0 / 745.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    /// The origin.
    Point,
    /// Closed disk centred at the origin.
    Disk { radius: f64 },
    Segment { a: [f64; 2], b: [f64; 2] },
}

/// `Unit` replaces the conformal factor by 1 (calibration against flat identities).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    #[default]
    Conformal,
    Unit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollapsedSetSpec {
    pub shape: Shape,
    pub k_chart: f64,
    #[serde(default)]
    pub weighting: Weighting,
}

impl CollapsedSetSpec {
    pub fn point(k_chart: f64) -> Result<Self> {
        Self::new(Shape::Point, k_chart)
    }

    pub fn disk(radius: f64, k_chart: f64) -> Result<Self> {
        Self::new(Shape::Disk { radius }, k_chart)
    }

    pub fn segment(a: [f64; 2], b: [f64; 2], k_chart: f64) -> Result<Self> {
        Self::new(Shape::Segment { a, b }, k_chart)
    }

    pub fn new(shape: Shape, k_chart: f64) -> Result<Self> {
        let s = Self { shape, k_chart, weighting: Weighting::Conformal };
        s.validate()?;
        Ok(s)
    }

    pub fn with_weighting(mut self, weighting: Weighting) -> Self {
        self.weighting = weighting;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.k_chart;
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::Parameter(format!("chart radius must be positive, got {k}")));
        }
        let extent = match self.shape {
            Shape::Point => 0.0,
            Shape::Disk { radius } => {
                if !(radius > 0.0) {
                    return Err(Error::Parameter(format!("disk radius must be positive, got {radius}")));
                }
                radius
            }
            Shape::Segment { a, b } => {
                if a.iter().chain(&b).any(|v| !v.is_finite()) || a == b {
                    return Err(Error::Parameter("segment endpoints must be finite and distinct".into()));
                }
                a[0].hypot(a[1]).max(b[0].hypot(b[1]))
            }
        };
        if extent >= k {
            return Err(Error::Parameter(format!("set of extent {extent} does not fit in the open chart disk of radius {k}")));
        }
        Ok(())
    }

    /// Euclidean distance to the set and its gradient (zero on the set).
    pub fn distance(&self, x: [f64; 2]) -> (f64, [f64; 2]) {
        let radial = |r0: f64| {
            let n = x[0].hypot(x[1]);
            if n <= r0 || n == 0.0 {
                (0.0, [0.0, 0.0])
            } else {
                (n - r0, [x[0] / n, x[1] / n])
            }
        };
        match self.shape {
            Shape::Point => radial(0.0),
            Shape::Disk { radius } => radial(radius),
            Shape::Segment { a, b } => {
                let e = [b[0] - a[0], b[1] - a[1]];
                let t = (((x[0] - a[0]) * e[0] + (x[1] - a[1]) * e[1]) / (e[0] * e[0] + e[1] * e[1])).clamp(0.0, 1.0);
                let r = [x[0] - a[0] - t * e[0], x[1] - a[1] - t * e[1]];
                let d = r[0].hypot(r[1]);
                if d == 0.0 {
                    (0.0, [0.0, 0.0])
                } else {
                    (d, [r[0] / d, r[1] / d])
                }
            }
        }
    }

    /// Squared conformal factor and its gradient at a chart point.
    pub fn weight(&self, x: [f64; 2]) -> (f64, [f64; 2]) {
        if self.weighting == Weighting::Unit {
            return (1.0, [0.0, 0.0]);
        }
        let (d, g) = self.distance(x);
        if d <= UNDERFLOW {
            return (0.0, [0.0, 0.0]);
        }
        let w = (-2.0 / d).exp() / (d * d * d * d);
        let s = w * (2.0 / (d * d) - 4.0 / d);
        (w, [s * g[0], s * g[1]])
    }
}

/// `lambda_E(x) = exp(-1/d) / d^2`, zero on `E`.
pub fn conformal_factor(e: &CollapsedSetSpec, x: [f64; 2]) -> f64 {
    if e.weighting == Weighting::Unit {
        return 1.0;
    }
    let d = e.distance(x).0;
    if d <= UNDERFLOW {
        0.0
    } else {
        (-1.0 / d).exp() / (d * d)
    }
}

/// `int lambda_E^2` over the chart disk, the energy of `z -> K z`.
pub fn reference_map_energy(e: &CollapsedSetSpec, q: QuadSpec) -> Result<f64> {
    e.validate()?;
    let k = e.k_chart;
    if e.weighting == Weighting::Unit {
        return Ok(PI * k * k);
    }
    // int lambda^2 is at most pi K^2 max lambda^2, and max lambda^2 < 1
    let tol = q.abs_tol.max(q.rel_tol * PI * k * k * 0.3);
    match e.shape {
        Shape::Point | Shape::Disk { .. } => {
            let r0 = match e.shape {
                Shape::Disk { radius } => radius,
                _ => 0.0,
            };
            let g = |t: f64| {
                let w = e.weight([t, 0.0]).0;
                2.0 * PI * w * t
            };
            quad::integrate(g, r0, k, tol)
        }
        Shape::Segment { .. } => {
            let inner = |th: f64| {
                let (s, c) = th.sin_cos();
                quad::integrate(|r| e.weight([r * c, r * s]).0 * r, 0.0, k, 0.1 * tol / (2.0 * PI)).unwrap_or(f64::NAN)
            };
            quad::integrate(inner, 0.0, 2.0 * PI, tol)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::E;

    #[test]
    fn factor_values() {
        let p = CollapsedSetSpec::point(2.0).unwrap();
        assert_relative_eq!(conformal_factor(&p, [0.6, 0.8]), 1.0 / E, max_relative = 1e-15);
        assert_eq!(conformal_factor(&p, [0.0, 0.0]), 0.0);
        let d = CollapsedSetSpec::disk(1.0, 2.0).unwrap();
        assert_relative_eq!(conformal_factor(&d, [0.0, 1.5]), 4.0 * (-2f64).exp(), max_relative = 1e-15);
        assert_eq!(conformal_factor(&d, [0.3, -0.2]), 0.0);
        let s = CollapsedSetSpec::segment([-1.0, 0.0], [1.0, 0.0], 2.0).unwrap();
        assert_relative_eq!(conformal_factor(&s, [0.5, 1.0]), 1.0 / E, max_relative = 1e-15);
        assert_relative_eq!(conformal_factor(&s, [1.6, 0.8]), 1.0 / E, max_relative = 1e-15);
        assert!(CollapsedSetSpec::disk(2.0, 2.0).is_err());
        assert!(CollapsedSetSpec::segment([0.0, 0.0], [0.0, 2.5], 2.0).is_err());
    }

    #[test]
    fn weight_gradient_matches_differences() {
        let s = CollapsedSetSpec::segment([-0.5, 0.2], [0.7, -0.1], 2.0).unwrap();
        for x in [[0.3, 0.9], [1.2, -0.4], [-0.9, 0.1]] {
            let (_, g) = s.weight(x);
            let h = 1e-6;
            for k in 0..2 {
                let mut p = x;
                let mut m = x;
                p[k] += h;
                m[k] -= h;
                let fd = (s.weight(p).0 - s.weight(m).0) / (2.0 * h);
                assert_relative_eq!(g[k], fd, max_relative = 1e-6, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn reference_energies() {
        let q = QuadSpec::default();
        // substitution u = 1/(t - r0) reduces both to incomplete gamma integrals
        let disk = reference_map_energy(&CollapsedSetSpec::disk(1.0, 2.0).unwrap(), q).unwrap();
        assert_relative_eq!(disk, 4.0 * PI * (-2f64).exp(), max_relative = 1e-9);
        let point = reference_map_energy(&CollapsedSetSpec::point(2.0).unwrap(), q).unwrap();
        assert_relative_eq!(point, PI / E, max_relative = 1e-9);
        let flat = CollapsedSetSpec::point(2.0).unwrap().with_weighting(Weighting::Unit);
        assert_relative_eq!(reference_map_energy(&flat, q).unwrap(), 4.0 * PI);
        // polar quadrature against a Cartesian midpoint sum
        let seg = CollapsedSetSpec::segment([-0.5, 0.0], [0.5, 0.0], 2.0).unwrap();
        let polar = reference_map_energy(&seg, q).unwrap();
        let n = 1200;
        let h = 4.0 / n as f64;
        let mut cart = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = [-2.0 + (i as f64 + 0.5) * h, -2.0 + (j as f64 + 0.5) * h];
                if x[0].hypot(x[1]) < 2.0 {
                    cart += seg.weight(x).0 * h * h;
                }
            }
        }
        assert_relative_eq!(polar, cart, max_relative = 2e-3);
    }
}
