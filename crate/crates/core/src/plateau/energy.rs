//! Piecewise-affine maps and their weighted energies.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mesh::{DiskMesh, Element};
use super::CollapsedSetSpec;
use crate::error::{Error, Result};

/// Piecewise-affine map from the mesh into the chart disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapState {
    pub images: Vec<[f64; 2]>,
    /// Angle of the first boundary vertex.
    pub theta0: f64,
    /// `increments[k]` is the angle from boundary vertex `k` to `k + 1` (cyclically).
    pub increments: Vec<f64>,
    pub k_chart: f64,
}

impl MapState {
    /// Samples `map` at the vertices; boundary images are pushed radially onto the chart circle.
    pub fn from_fn<M: Fn([f64; 2]) -> [f64; 2]>(mesh: &DiskMesh, k_chart: f64, map: M) -> Result<Self> {
        Self::from_images(mesh, k_chart, mesh.vertices.iter().map(|&z| map(z)).collect())
    }

    /// Same as [`MapState::from_fn`] with the vertex images given directly.
    pub fn from_images(mesh: &DiskMesh, k_chart: f64, mut images: Vec<[f64; 2]>) -> Result<Self> {
        if images.len() != mesh.vertices.len() {
            return Err(Error::Parameter("map state does not match the mesh".into()));
        }
        let angles: Vec<f64> = mesh.boundary.iter().map(|&b| images[b][1].atan2(images[b][0])).collect();
        let n = angles.len();
        let mut increments = Vec::with_capacity(n);
        for k in 0..n {
            let mut d = angles[(k + 1) % n] - angles[k];
            d -= 2.0 * PI * (d / (2.0 * PI)).floor();
            increments.push(d);
        }
        let total: f64 = increments.iter().sum();
        if (total - 2.0 * PI).abs() > 1e-9 {
            return Err(Error::Parameter(format!("boundary trace winds {} times, expected once", total / (2.0 * PI))));
        }
        let theta0 = angles[0];
        let mut s = MapState { images: Vec::new(), theta0, increments, k_chart };
        let phi = s.boundary_angles();
        for (&b, &a) in mesh.boundary.iter().zip(&phi) {
            images[b] = [k_chart * a.cos(), k_chart * a.sin()];
        }
        for (i, z) in images.iter_mut().enumerate() {
            let r = z[0].hypot(z[1]);
            if r > k_chart {
                *z = [z[0] * k_chart / r, z[1] * k_chart / r];
            }
            if !z.iter().all(|v| v.is_finite()) {
                return Err(Error::Parameter(format!("non-finite image at vertex {i}")));
            }
        }
        s.images = images;
        Ok(s)
    }

    /// The discretized reference map `z -> K z`.
    pub fn reference(mesh: &DiskMesh, k_chart: f64) -> Result<Self> {
        Self::from_fn(mesh, k_chart, |z| [k_chart * z[0], k_chart * z[1]])
    }

    /// Unwrapped angles of the boundary images, starting at `theta0`.
    pub fn boundary_angles(&self) -> Vec<f64> {
        let mut a = Vec::with_capacity(self.increments.len());
        let mut t = self.theta0;
        for d in &self.increments {
            a.push(t);
            t += d;
        }
        a
    }

    pub fn validate(&self, mesh: &DiskMesh) -> Result<()> {
        if self.images.len() != mesh.vertices.len() || self.increments.len() != mesh.boundary.len() {
            return Err(Error::Parameter("map state does not match the mesh".into()));
        }
        let k = self.k_chart;
        let tol = 1e-9 * k;
        if let Some(i) = self.images.iter().position(|z| !(z[0].hypot(z[1]) <= k + tol)) {
            return Err(Error::Parameter(format!("image of vertex {i} leaves the chart disk")));
        }
        if let Some(j) = self.increments.iter().position(|&d| !(d >= 0.0)) {
            return Err(Error::Parameter(format!("boundary trace is not monotone at boundary vertex {j}")));
        }
        let total: f64 = self.increments.iter().sum();
        if (total - 2.0 * PI).abs() > 1e-9 {
            return Err(Error::Parameter(format!("boundary increments sum to {total}")));
        }
        for (&b, a) in mesh.boundary.iter().zip(self.boundary_angles()) {
            let z = self.images[b];
            if (z[0] - k * a.cos()).abs() > tol || (z[1] - k * a.sin()).abs() > tol {
                return Err(Error::Parameter(format!("boundary image of vertex {b} is off the chart circle")));
            }
        }
        Ok(())
    }
}

/// Starting maps for the solver, all with image disk of radius `K`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialMap {
    /// `z -> K z`.
    #[default]
    Reference,
    /// `z -> K r^gamma e^{i a}` with `a = theta + 0.15 r sin 3 theta + r^2 (1 - r)`.
    Distorted { gamma: f64 },
    /// `z -> K (z - a) / (1 - a z)` for real `a` in (-1, 1).
    Mobius { a: f64 },
}

impl InitialMap {
    pub fn build(&self, mesh: &DiskMesh, k_chart: f64) -> Result<MapState> {
        match *self {
            InitialMap::Reference => MapState::reference(mesh, k_chart),
            InitialMap::Distorted { gamma } => {
                if !(gamma > 0.0 && gamma.is_finite()) {
                    return Err(Error::Parameter(format!("distortion exponent must be positive, got {gamma}")));
                }
                MapState::from_fn(mesh, k_chart, |z| {
                    let r = z[0].hypot(z[1]);
                    let th = z[1].atan2(z[0]);
                    let a = th + 0.15 * r * (3.0 * th).sin() + r * r * (1.0 - r);
                    let m = k_chart * r.powf(gamma);
                    [m * a.cos(), m * a.sin()]
                })
            }
            InitialMap::Mobius { a } => {
                if !(a.abs() < 1.0) {
                    return Err(Error::Parameter(format!("Mobius parameter must lie in (-1, 1), got {a}")));
                }
                MapState::from_fn(mesh, k_chart, |z| {
                    let (nr, ni) = (z[0] - a, z[1]);
                    let (dr, di) = (1.0 - a * z[0], -a * z[1]);
                    let d = dr * dr + di * di;
                    [k_chart * (nr * dr + ni * di) / d, k_chart * (ni * dr - nr * di) / d]
                })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyMode {
    #[default]
    Dirichlet,
    Reshetnyak,
}

/// Where the squared conformal factor is sampled on each image triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightRule {
    /// At the image centroid.
    #[default]
    Centroid,
    /// Mean over the three image vertices. Since the sets are convex, a nondegenerate
    /// triangle with zero weight lies inside the set.
    VertexMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    /// `sum w (s1^2 + s2^2) |T|`.
    pub dirichlet: f64,
    /// `sum w s1^2 |T|`.
    pub reshetnyak: f64,
    /// `sum w s1 s2 |T|`.
    pub area: f64,
    /// `sum w (s1 - s2)^2 |T|`.
    pub conformality_defect: f64,
}

impl EnergyBreakdown {
    pub fn get(&self, mode: EnergyMode) -> f64 {
        match mode {
            EnergyMode::Dirichlet => self.dirichlet,
            EnergyMode::Reshetnyak => self.reshetnyak,
        }
    }

    fn add(&mut self, o: &EnergyBreakdown) {
        self.dirichlet += o.dirichlet;
        self.reshetnyak += o.reshetnyak;
        self.area += o.area;
        self.conformality_defect += o.conformality_defect;
    }
}

/// Singular values of `[[a, b], [c, d]]`, largest first.
pub fn singular_values(m: [f64; 4]) -> (f64, f64) {
    let [a, b, c, d] = m;
    let p = (a + d).hypot(c - b);
    let q = (a - d).hypot(c + b);
    (0.5 * (p + q), 0.5 * (p - q).abs())
}

pub(crate) struct TriangleTerm {
    pub energy: EnergyBreakdown,
    /// Gradient of the selected energy with respect to the three images.
    pub grad: [[f64; 2]; 3],
    /// Weight times area, the coefficient of the frozen-weight Hessian.
    pub stiffness: f64,
}

/// Differential of the affine map on one element as `[dx/ds, dx/dt, dy/ds, dy/dt]`.
fn differential(el: &Element, images: &[[f64; 2]]) -> [f64; 4] {
    let mut m = [0.0; 4];
    for (k, &v) in el.v.iter().enumerate() {
        let u = images[v];
        let g = el.grad[k];
        m[0] += u[0] * g[0];
        m[1] += u[0] * g[1];
        m[2] += u[1] * g[0];
        m[3] += u[1] * g[1];
    }
    m
}

pub(crate) fn triangle_term(
    el: &Element,
    images: &[[f64; 2]],
    e: &CollapsedSetSpec,
    rule: WeightRule,
    mode: EnergyMode,
    with_grad: bool,
) -> TriangleTerm {
    let m = differential(el, images);
    let [a, b, c, d] = m;
    let p = (a + d).hypot(c - b);
    let q = (a - d).hypot(c + b);
    let s1 = 0.5 * (p + q);
    let s2 = 0.5 * (p - q).abs();
    // weight and its gradient with respect to each image vertex
    let (w, dw) = match rule {
        WeightRule::Centroid => {
            let mut cen = [0.0; 2];
            for &v in &el.v {
                cen[0] += images[v][0] / 3.0;
                cen[1] += images[v][1] / 3.0;
            }
            let (w, g) = e.weight(cen);
            let g = [g[0] / 3.0, g[1] / 3.0];
            (w, [g; 3])
        }
        WeightRule::VertexMean => {
            let ws = el.v.map(|v| e.weight(images[v]));
            ((ws[0].0 + ws[1].0 + ws[2].0) / 3.0, ws.map(|(_, g)| [g[0] / 3.0, g[1] / 3.0]))
        }
    };
    let wt = w * el.area;
    let energy = EnergyBreakdown {
        dirichlet: wt * (s1 * s1 + s2 * s2),
        reshetnyak: wt * (s1 * s1),
        area: wt * (s1 * s2),
        conformality_defect: wt * ((s1 - s2) * (s1 - s2)),
    };
    let mut grad = [[0.0; 2]; 3];
    if with_grad {
        // derivative of the integrand with respect to (a, b, c, d)
        let dm = match mode {
            EnergyMode::Dirichlet => [2.0 * a, 2.0 * b, 2.0 * c, 2.0 * d],
            EnergyMode::Reshetnyak => {
                let mut g = [0.0; 4];
                if p > 0.0 {
                    let (u, v) = ((a + d) / p, (c - b) / p);
                    g = [u, -v, v, u];
                }
                if q > 0.0 {
                    let (u, v) = ((a - d) / q, (c + b) / q);
                    g = [g[0] + u, g[1] + v, g[2] + v, g[3] - u];
                }
                g.map(|x| s1 * x)
            }
        };
        let integrand = match mode {
            EnergyMode::Dirichlet => s1 * s1 + s2 * s2,
            EnergyMode::Reshetnyak => s1 * s1,
        };
        let wg = el.area * integrand;
        for k in 0..3 {
            let g = el.grad[k];
            grad[k] = [
                wt * (dm[0] * g[0] + dm[1] * g[1]) + wg * dw[k][0],
                wt * (dm[2] * g[0] + dm[3] * g[1]) + wg * dw[k][1],
            ];
        }
    }
    TriangleTerm { energy, grad, stiffness: wt }
}

/// Totals in triangle order, so the per-triangle inequalities survive summation.
pub(crate) fn evaluate(
    elements: &[Element],
    images: &[[f64; 2]],
    e: &CollapsedSetSpec,
    rule: WeightRule,
    mode: EnergyMode,
    with_grad: bool,
) -> (EnergyBreakdown, Vec<TriangleTerm>) {
    let terms: Vec<TriangleTerm> = elements.par_iter().map(|el| triangle_term(el, images, e, rule, mode, with_grad)).collect();
    let mut total = EnergyBreakdown::default();
    for t in &terms {
        total.add(&t.energy);
    }
    (total, terms)
}

pub(crate) fn scatter_gradient(elements: &[Element], terms: &[TriangleTerm], n: usize) -> Vec<[f64; 2]> {
    let mut g = vec![[0.0; 2]; n];
    for (el, t) in elements.iter().zip(terms) {
        for k in 0..3 {
            g[el.v[k]][0] += t.grad[k][0];
            g[el.v[k]][1] += t.grad[k][1];
        }
    }
    g
}

/// Weighted energies of the piecewise-affine map, with the factor sampled at image
/// centroids. All four totals are returned whatever the mode.
pub fn discrete_energy(mesh: &DiskMesh, map: &MapState, e: &CollapsedSetSpec, mode: EnergyMode) -> Result<EnergyBreakdown> {
    discrete_energy_with(mesh, map, e, WeightRule::Centroid, mode)
}

pub fn discrete_energy_with(mesh: &DiskMesh, map: &MapState, e: &CollapsedSetSpec, rule: WeightRule, mode: EnergyMode) -> Result<EnergyBreakdown> {
    if map.images.len() != mesh.vertices.len() {
        return Err(Error::Parameter("map state does not match the mesh".into()));
    }
    let elements = mesh.elements()?;
    Ok(evaluate(&elements, &map.images, e, rule, mode, false).0)
}

/// Per-triangle breakdowns in mesh order.
pub fn triangle_energies(mesh: &DiskMesh, map: &MapState, e: &CollapsedSetSpec, rule: WeightRule) -> Result<Vec<EnergyBreakdown>> {
    if map.images.len() != mesh.vertices.len() {
        return Err(Error::Parameter("map state does not match the mesh".into()));
    }
    let elements = mesh.elements()?;
    Ok(evaluate(&elements, &map.images, e, rule, EnergyMode::Dirichlet, false).1.into_iter().map(|t| t.energy).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plateau::Weighting;
    use approx::assert_relative_eq;

    #[test]
    fn singular_values_match_eigenvalues() {
        let m = [1.3, -0.4, 0.7, 2.1];
        let (s1, s2) = singular_values(m);
        // eigenvalues of M^T M
        let (a, b, c, d) = (m[0], m[1], m[2], m[3]);
        let t = a * a + b * b + c * c + d * d;
        let det = a * d - b * c;
        let disc = (t * t - 4.0 * det * det).sqrt();
        assert_relative_eq!(s1 * s1, 0.5 * (t + disc), max_relative = 1e-14);
        assert_relative_eq!(s2 * s2, 0.5 * (t - disc), max_relative = 1e-13);
    }

    #[test]
    fn identity_calibration() {
        let mesh = DiskMesh::rings(0.1).unwrap();
        let e = CollapsedSetSpec::point(1.0).unwrap().with_weighting(Weighting::Unit);
        let id = MapState::from_fn(&mesh, 1.0, |z| z).unwrap();
        id.validate(&mesh).unwrap();
        let en = discrete_energy(&mesh, &id, &e, EnergyMode::Dirichlet).unwrap();
        let poly = en.area;
        assert_relative_eq!(en.dirichlet, 2.0 * poly, max_relative = 1e-12);
        assert_relative_eq!(en.reshetnyak, poly, max_relative = 1e-12);
        assert!(en.conformality_defect < 1e-20);
        assert!((poly - PI).abs() < 0.01);
    }

    #[test]
    fn gradients_match_differences() {
        let mesh = DiskMesh::rings(0.34).unwrap();
        let e = CollapsedSetSpec::disk(0.5, 2.0).unwrap();
        let map = MapState::from_fn(&mesh, 2.0, |z| {
            let r = z[0].hypot(z[1]);
            [2.0 * z[0] * (0.7 + 0.3 * r) + 0.1 * z[1], 2.0 * z[1] * (0.7 + 0.3 * r)]
        })
        .unwrap();
        let elements = mesh.elements().unwrap();
        for (rule, mode) in [
            (WeightRule::Centroid, EnergyMode::Dirichlet),
            (WeightRule::Centroid, EnergyMode::Reshetnyak),
            (WeightRule::VertexMean, EnergyMode::Dirichlet),
            (WeightRule::VertexMean, EnergyMode::Reshetnyak),
        ] {
            let (_, terms) = evaluate(&elements, &map.images, &e, rule, mode, true);
            let g = scatter_gradient(&elements, &terms, map.images.len());
            for i in [0, 3, 9, 14] {
                for k in 0..2 {
                    let h = 1e-6;
                    let mut p = map.images.clone();
                    let mut m = map.images.clone();
                    p[i][k] += h;
                    m[i][k] -= h;
                    let f = |x: &[[f64; 2]]| evaluate(&elements, x, &e, rule, mode, false).0.get(mode);
                    let fd = (f(&p) - f(&m)) / (2.0 * h);
                    assert_relative_eq!(g[i][k], fd, max_relative = 1e-5, epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn monotone_trace_is_enforced() {
        let mesh = DiskMesh::rings(0.25).unwrap();
        // reflection reverses the boundary orientation
        assert!(MapState::from_fn(&mesh, 2.0, |z| [2.0 * z[0], -2.0 * z[1]]).is_err());
        let mut s = MapState::reference(&mesh, 2.0).unwrap();
        s.increments[0] -= 0.2;
        s.increments[1] += 0.2;
        assert!(s.validate(&mesh).is_err());
    }
}
