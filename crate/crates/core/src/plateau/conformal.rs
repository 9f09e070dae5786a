//! Explicit conformal maps for segment fibers: Joukowski and Theodorsen.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::energy::{discrete_energy, EnergyBreakdown, EnergyMode, MapState};
use super::mesh::DiskMesh;
use super::{CollapsedSetSpec, Shape};
use crate::error::{Error, Result};

type C64 = Complex<f64>;

/// `J(z) = z + rho^2 / z`, mapping `|z| > rho` onto the plane minus `[-2 rho, 2 rho]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Joukowski {
    pub rho: f64,
}

pub fn joukowski_pair(rho: f64) -> Result<Joukowski> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Parameter(format!("Joukowski parameter must lie in (0, 1), got {rho}")));
    }
    Ok(Joukowski { rho })
}

impl Joukowski {
    pub fn forward(&self, z: C64) -> C64 {
        z + self.rho * self.rho / z
    }

    /// The branch fixing infinity; points of the slit are rejected.
    pub fn inverse(&self, w: C64) -> Result<C64> {
        let r2 = self.rho * self.rho;
        if w.im == 0.0 && w.re.abs() <= 2.0 * self.rho {
            return Err(Error::BranchCut((w.re, w.im)));
        }
        let s = (w * w - 4.0 * r2).sqrt();
        let (a, b) = (0.5 * (w + s), 0.5 * (w - s));
        Ok(if a.norm_sqr() >= b.norm_sqr() { a } else { b })
    }

    /// Limit of the inverse on the slit from the upper half plane.
    pub fn inverse_upper(&self, x: f64) -> C64 {
        let c = (x / (2.0 * self.rho)).clamp(-1.0, 1.0);
        C64::from_polar(self.rho, c.acos())
    }

    /// Semi-axes of the image of the unit circle.
    pub fn ellipse(&self) -> (f64, f64) {
        (1.0 + self.rho * self.rho, 1.0 - self.rho * self.rho)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TheodorsenConfig {
    pub fft_size: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for TheodorsenConfig {
    fn default() -> Self {
        Self { fft_size: 512, tol: 1e-13, max_iter: 500 }
    }
}

/// Conformal map `g` of the unit disk onto a star-shaped domain, `g(0) = 0`, `g'(0) > 0`.
#[derive(Debug, Clone)]
pub struct TheodorsenMap {
    /// Boundary correspondence `phi(theta_j)` at `theta_j = 2 pi j / N`.
    pub phi: Vec<f64>,
    /// Taylor coefficients of `log(g(w) / w)`.
    pub coeffs: Vec<C64>,
    pub iterations: usize,
    /// Sup-norm change of the correspondence at each iteration.
    pub history: Vec<f64>,
    /// Largest `|log rho_b|'`, the contraction factor of the iteration.
    pub epsilon: f64,
    /// Largest `| |g| - rho_b(arg g) |` on a four times finer boundary sample.
    pub boundary_residual: f64,
}

impl TheodorsenMap {
    pub fn eval(&self, w: C64) -> C64 {
        let mut f = C64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            f = f * w + c;
        }
        w * f.exp()
    }

    /// `g'(0)`.
    pub fn scale(&self) -> f64 {
        self.coeffs[0].re.exp()
    }
}

/// Theodorsen iteration `phi = theta + conj[log rho_b(phi)]` with FFT conjugation.
pub fn theodorsen_map<F: Fn(f64) -> f64>(rho_b: F, cfg: &TheodorsenConfig) -> Result<TheodorsenMap> {
    let n = cfg.fft_size;
    if n < 16 || !n.is_power_of_two() {
        return Err(Error::Parameter(format!("fft size must be a power of two >= 16, got {n}")));
    }
    let theta: Vec<f64> = (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
    let log_r = |phi: f64| -> Result<f64> {
        let r = rho_b(phi);
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::Parameter(format!("boundary radius {r} at angle {phi}")));
        }
        Ok(r.ln())
    };
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    // one-sided spectrum of a real sample: the coefficients of the analytic extension
    let analytic = |vals: &[f64]| -> Vec<C64> {
        let mut buf: Vec<C64> = vals.iter().map(|&v| C64::new(v, 0.0)).collect();
        fwd.process(&mut buf);
        let mut c = vec![C64::new(0.0, 0.0); n / 2];
        c[0] = buf[0] / n as f64;
        for k in 1..n / 2 {
            c[k] = 2.0 * buf[k] / n as f64;
        }
        c
    };
    let boundary_imag = |c: &[C64]| -> Vec<f64> {
        let mut buf = vec![C64::new(0.0, 0.0); n];
        buf[..n / 2].copy_from_slice(c);
        inv.process(&mut buf);
        buf.iter().map(|z| z.im).collect()
    };

    // contraction factor from the spectral derivative of log rho_b on a fine grid
    let fine: Vec<f64> = (0..n).map(|j| log_r(theta[j])).collect::<Result<_>>()?;
    let c = analytic(&fine);
    let mut dc = c.clone();
    for (k, v) in dc.iter_mut().enumerate() {
        *v *= C64::new(0.0, k as f64);
    }
    let mut buf = vec![C64::new(0.0, 0.0); n];
    buf[..n / 2].copy_from_slice(&dc);
    inv.process(&mut buf);
    let epsilon = buf.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
    if !(epsilon < 1.0) {
        return Err(Error::Convergence { iterations: 0, history: vec![epsilon] });
    }

    let mut phi = theta.clone();
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let l: Vec<f64> = phi.iter().map(|&p| log_r(p)).collect::<Result<_>>()?;
        let conj = boundary_imag(&analytic(&l));
        let next: Vec<f64> = theta.iter().zip(&conj).map(|(t, k)| t + k).collect();
        let change = next.iter().zip(&phi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        phi = next;
        history.push(change);
        if change <= cfg.tol {
            break;
        }
        if iterations >= cfg.max_iter || !change.is_finite() {
            return Err(Error::Convergence { iterations, history });
        }
    }
    let l: Vec<f64> = phi.iter().map(|&p| log_r(p)).collect::<Result<_>>()?;
    let coeffs = analytic(&l);
    let mut map = TheodorsenMap { phi, coeffs, iterations, history, epsilon, boundary_residual: 0.0 };
    let m = 4 * n;
    let mut res = 0.0_f64;
    for j in 0..m {
        let w = C64::from_polar(1.0, 2.0 * PI * (j as f64 + 0.5) / m as f64);
        let g = map.eval(w);
        res = res.max((g.norm() - rho_b(g.arg())).abs());
    }
    map.boundary_residual = res;
    Ok(map)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurgeryReport {
    pub state: MapState,
    pub energy: EnergyBreakdown,
    pub rho: f64,
    /// `g'(0)` of the disk-to-ellipse map.
    pub scale: f64,
    pub theodorsen_iterations: usize,
    pub boundary_residual: f64,
    /// Vertices mapped onto the slit, where the upper-branch limit is used.
    pub slit_vertices: usize,
}

/// `v = K J^{-1}(g(z))`: the disk goes conformally onto the ellipse `J(|z| = 1)`,
/// the slit `[-2 rho, 2 rho]` pulls back to an arc, and the rest of the ellipse
/// opens onto the annulus `rho < |z| < 1` which `K z` sends outside `E`.
pub fn surgery_segment(e: &CollapsedSetSpec, mesh: &DiskMesh, cfg: &TheodorsenConfig) -> Result<SurgeryReport> {
    e.validate()?;
    let Shape::Disk { radius } = e.shape else {
        return Err(Error::Parameter("surgery needs a disk-shaped collapsed set".into()));
    };
    let k = e.k_chart;
    let rho = radius / k;
    let j = joukowski_pair(rho)?;
    let (a, b) = j.ellipse();
    let g = theodorsen_map(|phi| a * b / ((b * phi.cos()).hypot(a * phi.sin())), cfg)?;
    let mut slit = 0;
    let mut images = Vec::with_capacity(mesh.vertices.len());
    for z in &mesh.vertices {
        let w = g.eval(C64::new(z[0], z[1]));
        let zeta = match j.inverse(w) {
            Ok(v) => v,
            Err(Error::BranchCut(_)) => {
                slit += 1;
                j.inverse_upper(w.re)
            }
            Err(err) => return Err(err),
        };
        images.push([k * zeta.re, k * zeta.im]);
    }
    let state = MapState::from_images(mesh, k, images)?;
    let energy = discrete_energy(mesh, &state, e, EnergyMode::Reshetnyak)?;
    Ok(SurgeryReport {
        state,
        energy,
        rho,
        scale: g.scale(),
        theodorsen_iterations: g.iterations,
        boundary_residual: g.boundary_residual,
        slit_vertices: slit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn joukowski_identities() {
        let j = joukowski_pair(0.25).unwrap();
        assert_relative_eq!(j.forward(C64::new(0.25, 0.0)).re, 0.5);
        assert_relative_eq!(j.forward(C64::new(1.0, 0.0)).re, 1.0625);
        for k in 0..200 {
            let r = 0.2501 + 3.0 * (k as f64 / 200.0).powi(2);
            let z = C64::from_polar(r, 0.37 + 0.9 * k as f64);
            let back = j.inverse(j.forward(z)).unwrap();
            assert!((back - z).norm() < 1e-12 * r.max(1.0), "{z} -> {back}");
        }
        assert!(matches!(j.inverse(C64::new(0.3, 0.0)), Err(Error::BranchCut(_))));
        let up = j.inverse_upper(0.3);
        assert_relative_eq!(j.forward(up).re, 0.3, epsilon = 1e-15);
        assert!(up.im > 0.0);
        assert!(joukowski_pair(1.0).is_err());
    }

    #[test]
    fn theodorsen_circle_and_ellipse() {
        let cfg = TheodorsenConfig::default();
        let c = theodorsen_map(|_| 0.7, &cfg).unwrap();
        let w = C64::new(0.3, -0.4);
        assert!((c.eval(w) - 0.7 * w).norm() < 1e-15);
        let j = joukowski_pair(0.25).unwrap();
        let (a, b) = j.ellipse();
        let e = theodorsen_map(|p| a * b / ((b * p.cos()).hypot(a * p.sin())), &cfg).unwrap();
        assert!(e.boundary_residual < 1e-8, "{}", e.boundary_residual);
        // symmetric domain: real coefficients
        assert!(e.coeffs.iter().all(|c| c.im.abs() < 1e-14));
    }

    #[test]
    fn theodorsen_matches_perturbation_series() {
        // rho_b = 1 + eps cos(phi): log(g/w) = -3 eps^2/4 + eps w + eps^2 w^2 / 4 + O(eps^3)
        let eps = 0.1;
        let g = theodorsen_map(|p| 1.0 + eps * p.cos(), &TheodorsenConfig::default()).unwrap();
        let mut worst = 0.0_f64;
        for k in 0..64 {
            let w = C64::from_polar(1.0, 2.0 * PI * k as f64 / 64.0);
            let series = w * (-0.75 * eps * eps + eps * w + 0.25 * eps * eps * w * w).exp();
            worst = worst.max((g.eval(w) - series).norm());
        }
        assert!(worst < 1e-3, "{worst}");
        assert!(g.boundary_residual < 1e-10);
    }

    #[test]
    fn non_contracting_boundary_is_rejected() {
        let r = theodorsen_map(|p| 1.0 + 0.9 * (3.0 * p).cos(), &TheodorsenConfig::default());
        assert!(matches!(r, Err(Error::Convergence { .. })));
    }
}
