//! Preconditioned projected descent for the weighted energies.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::energy::{discrete_energy, evaluate, scatter_gradient, EnergyBreakdown, EnergyMode, MapState, WeightRule};
use super::mesh::{DiskMesh, Element};
use super::CollapsedSetSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub mode: EnergyMode,
    /// Sampling of the conformal factor in the descended energy. The centroid rule
    /// gives zero weight to folded or stretched triangles reaching from the set far
    /// into the region where the factor is large, and descent finds such maps.
    pub rule: WeightRule,
    /// Stop once an accepted step lowers the energy by less than this fraction.
    pub tol: f64,
    pub max_iter: usize,
    /// Weight of the unweighted stiffness added to the preconditioner, relative to the
    /// largest element weight. It lets vertices mapped into the collapsed set follow
    /// their neighbours.
    pub regularization: f64,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    pub armijo: f64,
    pub min_step: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mode: EnergyMode::Dirichlet,
            rule: WeightRule::VertexMean,
            tol: 1e-8,
            max_iter: 200,
            regularization: 1e-3,
            cg_tol: 1e-3,
            cg_max_iter: 2000,
            armijo: 1e-4,
            min_step: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub state: MapState,
    /// Final and initial energies under the descended rule.
    pub energy: EnergyBreakdown,
    pub initial: EnergyBreakdown,
    /// The same with the factor sampled at image centroids.
    pub centroid_energy: EnergyBreakdown,
    pub centroid_initial: EnergyBreakdown,
    pub iterations: usize,
    pub converged: bool,
    /// The line search failed before the tolerance was met.
    pub stagnated: bool,
    /// Energies after each accepted step, starting with the initial map.
    pub trace: Vec<EnergyBreakdown>,
    /// Accepted step lengths.
    pub steps: Vec<f64>,
}

impl SolveReport {
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("iter,dirichlet,reshetnyak,area,conformality_defect\n");
        for (i, e) in self.trace.iter().enumerate() {
            s.push_str(&format!("{i},{:e},{:e},{:e},{:e}\n", e.dirichlet, e.reshetnyak, e.area, e.conformality_defect));
        }
        s
    }
}

/// Symmetric sparsity pattern of the P1 stiffness matrix.
struct Pattern {
    row_start: Vec<usize>,
    cols: Vec<usize>,
    /// Position of each local (row, column) pair of each element.
    slots: Vec<[usize; 9]>,
    diag: Vec<usize>,
}

impl Pattern {
    fn new(n: usize, elements: &[Element]) -> Self {
        let mut rows: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for el in elements {
            for &a in &el.v {
                rows[a].extend(el.v.iter().copied());
            }
        }
        let mut row_start = vec![0];
        let mut cols = Vec::new();
        for r in &mut rows {
            r.sort_unstable();
            r.dedup();
            cols.extend(r.iter().copied());
            row_start.push(cols.len());
        }
        let find = |i: usize, j: usize| row_start[i] + cols[row_start[i]..row_start[i + 1]].binary_search(&j).unwrap();
        let slots = elements
            .iter()
            .map(|el| {
                let mut s = [0; 9];
                for a in 0..3 {
                    for b in 0..3 {
                        s[3 * a + b] = find(el.v[a], el.v[b]);
                    }
                }
                s
            })
            .collect();
        let diag = (0..n).map(|i| find(i, i)).collect();
        Pattern { row_start, cols, slots, diag }
    }

    fn assemble(&self, elements: &[Element], coef: impl Fn(usize) -> f64) -> Vec<f64> {
        let mut vals = vec![0.0; self.cols.len()];
        for (t, el) in elements.iter().enumerate() {
            let c = coef(t) * el.area;
            for a in 0..3 {
                for b in 0..3 {
                    let g = (el.grad[a][0] * el.grad[b][0] + el.grad[a][1] * el.grad[b][1]) * c;
                    vals[self.slots[t][3 * a + b]] += g;
                }
            }
        }
        vals
    }

    fn apply(&self, vals: &[f64], x: &[[f64; 2]], y: &mut [[f64; 2]]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = [0.0; 2];
            for p in self.row_start[i]..self.row_start[i + 1] {
                let xj = x[self.cols[p]];
                s[0] += vals[p] * xj[0];
                s[1] += vals[p] * xj[1];
            }
            *yi = s;
        }
    }
}

/// Admissible displacement directions: free interior vertices, tangential boundary
/// motion, fixed anchors.
#[derive(Clone, Copy)]
enum Freedom {
    Free,
    Tangent([f64; 2]),
    Fixed,
}

fn project(f: &[Freedom], x: &mut [[f64; 2]]) {
    for (xi, fi) in x.iter_mut().zip(f) {
        match *fi {
            Freedom::Free => {}
            Freedom::Tangent(t) => {
                let s = xi[0] * t[0] + xi[1] * t[1];
                *xi = [s * t[0], s * t[1]];
            }
            Freedom::Fixed => *xi = [0.0, 0.0],
        }
    }
}

fn dot(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x[0] * y[0] + x[1] * y[1]).sum()
}

/// Least-squares nondecreasing fit (pool adjacent violators), then clipped to `[lo, hi]`.
fn isotonic(values: &mut [f64], lo: f64, hi: f64) {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values.iter() {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (b, nb) = blocks[blocks.len() - 1];
            let (a, na) = blocks[blocks.len() - 2];
            if a <= b {
                break;
            }
            blocks.pop();
            let n = na + nb;
            *blocks.last_mut().unwrap() = ((a * na as f64 + b * nb as f64) / n as f64, n);
        }
    }
    let mut k = 0;
    for (v, n) in blocks {
        for x in &mut values[k..k + n] {
            *x = v.clamp(lo, hi);
        }
        k += n;
    }
}

struct Problem<'a> {
    mesh: &'a DiskMesh,
    anchors: [usize; 3],
    k: f64,
}

impl Problem<'_> {
    /// Moves interior images and boundary angles by `t * dir` and restores the constraints.
    fn step(&self, images: &[[f64; 2]], angles: &[f64], dir: &[[f64; 2]], t: f64) -> (Vec<[f64; 2]>, Vec<f64>) {
        let k = self.k;
        let mut im: Vec<[f64; 2]> = images.iter().zip(dir).map(|(u, d)| [u[0] + t * d[0], u[1] + t * d[1]]).collect();
        for z in &mut im {
            let r = z[0].hypot(z[1]);
            if r > k {
                *z = [z[0] * k / r, z[1] * k / r];
            }
        }
        let b = &self.mesh.boundary;
        let mut ang: Vec<f64> = angles
            .iter()
            .zip(b)
            .map(|(&a, &v)| {
                let tau = [-a.sin(), a.cos()];
                a + t * (dir[v][0] * tau[0] + dir[v][1] * tau[1]) / k
            })
            .collect();
        let n = b.len();
        let [a0, a1, a2] = self.anchors;
        for (s, e, hi) in [(a0, a1, angles[a1]), (a1, a2, angles[a2]), (a2, n, angles[a0] + 2.0 * PI)] {
            let lo = angles[s];
            ang[s] = lo;
            isotonic(&mut ang[s + 1..e], lo, hi);
        }
        for (&v, &a) in b.iter().zip(&ang) {
            im[v] = [k * a.cos(), k * a.sin()];
        }
        (im, ang)
    }

    fn state(&self, images: Vec<[f64; 2]>, angles: &[f64]) -> MapState {
        let n = angles.len();
        let increments = (0..n)
            .map(|i| if i + 1 < n { angles[i + 1] - angles[i] } else { angles[0] + 2.0 * PI - angles[i] })
            .collect();
        MapState { images, theta0: angles[0], increments, k_chart: self.k }
    }
}

/// Descends the selected energy from `init`.
///
/// Each step solves the frozen-weight Newton system (plus a small unweighted
/// Laplacian) by Jacobi-preconditioned conjugate gradients restricted to the
/// admissible directions, then backtracks until the Armijo condition holds.
/// Boundary vertices slide along the chart circle; their angles stay ordered and
/// three anchors at a third of the loop apart stay fixed.
pub fn minimize_energy(mesh: &DiskMesh, e: &CollapsedSetSpec, init: &MapState, cfg: &SolverConfig) -> Result<SolveReport> {
    e.validate()?;
    init.validate(mesh)?;
    if (init.k_chart - e.k_chart).abs() > 1e-12 * e.k_chart {
        return Err(Error::Parameter("map state and collapsed set use different chart radii".into()));
    }
    if !(cfg.tol > 0.0 && cfg.max_iter > 0 && cfg.regularization >= 0.0 && cfg.armijo > 0.0 && cfg.armijo < 0.5) {
        return Err(Error::Parameter(format!("invalid solver configuration {cfg:?}")));
    }
    let elements = mesh.elements()?;
    let n = mesh.vertices.len();
    let pattern = Pattern::new(n, &elements);
    let unweighted = pattern.assemble(&elements, |_| 1.0);
    let problem = Problem { mesh, anchors: mesh.anchors(), k: e.k_chart };
    let is_anchor = {
        let mut a = vec![false; n];
        for &i in &problem.anchors {
            a[mesh.boundary[i]] = true;
        }
        a
    };
    let mut freedom = vec![Freedom::Free; n];
    let mut images = init.images.clone();
    let mut angles = init.boundary_angles();

    let mode = cfg.mode;
    let (mut energy, mut terms) = evaluate(&elements, &images, e, cfg.rule, mode, true);
    let initial = energy;
    let mut trace = vec![energy];
    let mut steps = Vec::new();
    let (mut converged, mut stagnated) = (false, false);
    let mut iterations = 0;
    // Newton-like steps are accepted at t = 1 most of the time; start there each iteration.
    while iterations < cfg.max_iter {
        iterations += 1;
        for (&v, &a) in mesh.boundary.iter().zip(&angles) {
            freedom[v] = if is_anchor[v] { Freedom::Fixed } else { Freedom::Tangent([-a.sin(), a.cos()]) };
        }
        let mut grad = scatter_gradient(&elements, &terms, n);
        project(&freedom, &mut grad);
        let wmax_density = elements.iter().zip(&terms).map(|(el, t)| t.stiffness / el.area).fold(0.0, f64::max);
        let scale = match mode {
            EnergyMode::Dirichlet => 2.0,
            EnergyMode::Reshetnyak => 1.0,
        };
        let mut vals = pattern.assemble(&elements, |t| scale * terms[t].stiffness / elements[t].area);
        let reg = cfg.regularization * scale * wmax_density;
        for (v, u) in vals.iter_mut().zip(&unweighted) {
            *v += reg * u;
        }
        let dir = conjugate_gradient(&pattern, &vals, &freedom, &grad, cfg);
        let slope = dot(&grad, &dir);
        if !(slope < 0.0) {
            converged = grad.iter().all(|g| g[0] == 0.0 && g[1] == 0.0);
            stagnated = !converged;
            break;
        }
        let e0 = energy.get(mode);
        let mut t = 1.0;
        let accepted = loop {
            let (im, ang) = problem.step(&images, &angles, &dir, t);
            let (en, tr) = evaluate(&elements, &im, e, cfg.rule, mode, true);
            if en.get(mode) <= e0 + cfg.armijo * t * slope {
                break Some((im, ang, en, tr));
            }
            t *= 0.5;
            if t < cfg.min_step {
                break None;
            }
        };
        let Some((im, ang, en, tr)) = accepted else {
            stagnated = true;
            break;
        };
        images = im;
        angles = ang;
        let decrease = e0 - en.get(mode);
        energy = en;
        terms = tr;
        trace.push(energy);
        steps.push(t);
        if decrease <= cfg.tol * e0.abs() {
            converged = true;
            break;
        }
    }
    let state = problem.state(images, &angles);
    let centroid_energy = discrete_energy(mesh, &state, e, mode)?;
    let centroid_initial = discrete_energy(mesh, init, e, mode)?;
    Ok(SolveReport { state, energy, initial, centroid_energy, centroid_initial, iterations, converged, stagnated, trace, steps })
}

fn conjugate_gradient(p: &Pattern, vals: &[f64], freedom: &[Freedom], grad: &[[f64; 2]], cfg: &SolverConfig) -> Vec<[f64; 2]> {
    let n = grad.len();
    let inv_diag: Vec<f64> = p.diag.iter().map(|&d| if vals[d] > 0.0 { 1.0 / vals[d] } else { 0.0 }).collect();
    let precond = |r: &[[f64; 2]]| -> Vec<[f64; 2]> {
        let mut z: Vec<[f64; 2]> = r.iter().zip(&inv_diag).map(|(r, d)| [r[0] * d, r[1] * d]).collect();
        project(freedom, &mut z);
        z
    };
    let mut x = vec![[0.0; 2]; n];
    let mut r: Vec<[f64; 2]> = grad.iter().map(|g| [-g[0], -g[1]]).collect();
    let r0 = dot(&r, &r).sqrt();
    if r0 == 0.0 {
        return x;
    }
    let mut z = precond(&r);
    let mut d = z.clone();
    let mut rz = dot(&r, &z);
    let mut ad = vec![[0.0; 2]; n];
    for _ in 0..cfg.cg_max_iter {
        p.apply(vals, &d, &mut ad);
        project(freedom, &mut ad);
        let dad = dot(&d, &ad);
        if !(dad > 0.0) {
            break;
        }
        let alpha = rz / dad;
        for i in 0..n {
            x[i][0] += alpha * d[i][0];
            x[i][1] += alpha * d[i][1];
            r[i][0] -= alpha * ad[i][0];
            r[i][1] -= alpha * ad[i][1];
        }
        if dot(&r, &r).sqrt() <= cfg.cg_tol * r0 {
            break;
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            d[i][0] = z[i][0] + beta * d[i][0];
            d[i][1] = z[i][1] + beta * d[i][1];
        }
    }
    if dot(&x, &x) == 0.0 {
        // fall back to steepest descent
        return r.iter().map(|v| [v[0], v[1]]).collect();
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::QuadSpec;
    use crate::plateau::{reference_map_energy, Weighting};
    use approx::assert_relative_eq;

    #[test]
    fn isotonic_projection() {
        let mut v = [0.3, 0.1, 0.2, 0.9, 0.5];
        isotonic(&mut v, 0.0, 0.8);
        assert_relative_eq!(v[0], 0.2, max_relative = 1e-15);
        assert_relative_eq!(v[2], 0.2, max_relative = 1e-15);
        assert_relative_eq!(v[3], 0.7, max_relative = 1e-15);
        assert_relative_eq!(v[4], 0.7, max_relative = 1e-15);
        let mut w = [-1.0, 2.0];
        isotonic(&mut w, 0.0, 1.0);
        assert_eq!(w, [0.0, 1.0]);
    }

    #[test]
    fn harmonic_map_from_distorted_start() {
        // with unit weight the minimizer with the anchors fixed is the identity
        let mesh = DiskMesh::rings(0.1).unwrap();
        let e = CollapsedSetSpec::point(1.0).unwrap().with_weighting(Weighting::Unit);
        let init = MapState::from_fn(&mesh, 1.0, |z| {
            let r = z[0].hypot(z[1]);
            let t = z[1].atan2(z[0]) + 0.15 * r * (3.0 * z[1].atan2(z[0])).sin();
            [r.powf(1.3) * t.cos(), r.powf(1.3) * t.sin()]
        })
        .unwrap();
        let rep = minimize_energy(&mesh, &e, &init, &SolverConfig::default()).unwrap();
        rep.state.validate(&mesh).unwrap();
        assert!(rep.energy.dirichlet < rep.initial.dirichlet);
        let id = MapState::from_fn(&mesh, 1.0, |z| z).unwrap();
        let target = crate::plateau::discrete_energy(&mesh, &id, &e, EnergyMode::Dirichlet).unwrap();
        assert_relative_eq!(rep.energy.dirichlet, target.dirichlet, max_relative = 1e-6);
        let err = rep.state.images.iter().zip(&id.images).map(|(a, b)| (a[0] - b[0]).hypot(a[1] - b[1])).fold(0.0, f64::max);
        assert!(err < 1e-3, "max deviation from the identity {err}");
    }

    #[test]
    fn reference_map_is_nearly_stationary() {
        let mesh = DiskMesh::rings(0.02).unwrap();
        let e = CollapsedSetSpec::point(2.0).unwrap();
        let p = MapState::reference(&mesh, 2.0).unwrap();
        let rep = minimize_energy(&mesh, &e, &p, &SolverConfig::default()).unwrap();
        let rel = (rep.initial.dirichlet - rep.energy.dirichlet) / rep.initial.dirichlet;
        assert!((0.0..1e-3).contains(&rel), "relative decrease {rel}");
        let r = reference_map_energy(&e, QuadSpec::default()).unwrap();
        assert_relative_eq!(rep.energy.dirichlet, 2.0 * r, max_relative = 0.02);
    }
}
