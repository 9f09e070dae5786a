//! Axis-symmetric regions `{(r, theta) : 0 <= r <= rbar(theta)}` and their measures.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::density::{geoest_check, DensitySpec, GridSpec};
use crate::error::{Error, Result};
use crate::quad::gauss_legendre5;

/// How `rbar` is read between grid points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interp {
    /// `m + 1` node values at `theta_j = j pi / m`, linear in between.
    Linear,
    /// `m` cell values, constant on `(theta_j, theta_{j+1})`; jumps are radial segments.
    Step,
}

/// Half of a symmetrized region on `[0, pi]`; the other half is its mirror image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    /// Scale of the rescaled density the profile lives in.
    pub alpha: f64,
    pub rbar: Vec<f64>,
    pub interp: Interp,
}

/// Piece of the profile on which `rbar` is linear.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Piece {
    pub t0: f64,
    pub t1: f64,
    pub r0: f64,
    pub r1: f64,
}

impl Piece {
    fn at(&self, t: f64) -> f64 {
        if self.t1 == self.t0 {
            return self.r0;
        }
        self.r0 + (self.r1 - self.r0) * (t - self.t0) / (self.t1 - self.t0)
    }

    fn sub(&self, a: f64, b: f64) -> Piece {
        Piece { t0: a, t1: b, r0: self.at(a), r1: self.at(b) }
    }

    fn area(&self, f: &DensitySpec) -> f64 {
        if self.t1 <= self.t0 {
            return 0.0;
        }
        if self.r0 == self.r1 {
            return f.primitive(self.r0) * (self.t1 - self.t0);
        }
        gauss_legendre5(|t| f.primitive(self.at(t)), self.t0, self.t1)
    }

    fn length(&self, f: &DensitySpec) -> f64 {
        let dt = self.t1 - self.t0;
        if dt <= 0.0 {
            return 0.0;
        }
        if self.r0 == self.r1 {
            return f.value(self.r0) * dt;
        }
        let slope = (self.r1 - self.r0) / dt;
        gauss_legendre5(|t| (slope * slope + f.value(self.at(t)).powi(2)).sqrt(), self.t0, self.t1)
    }

    /// Portion of the piece with `rbar < nu`.
    fn below(&self, nu: f64) -> Option<Piece> {
        let (lo_in, hi_in) = (self.r0 < nu, self.r1 < nu);
        match (lo_in, hi_in) {
            (true, true) => Some(*self),
            (false, false) => None,
            _ => {
                let t = self.t0 + (nu - self.r0) / (self.r1 - self.r0) * (self.t1 - self.t0);
                Some(if lo_in { self.sub(self.t0, t) } else { self.sub(t, self.t1) })
            }
        }
    }
}

impl RadialProfile {
    pub fn constant(alpha: f64, value: f64, m: usize) -> Self {
        Self { alpha, rbar: vec![value; m + 1], interp: Interp::Linear }
    }

    /// Linear profile sampled from `g` at the `m + 1` nodes.
    pub fn from_fn<G: Fn(f64) -> f64>(alpha: f64, m: usize, g: G) -> Self {
        let rbar = (0..=m).map(|j| g(PI * j as f64 / m as f64)).collect();
        Self { alpha, rbar, interp: Interp::Linear }
    }

    /// Number of cells on `[0, pi]`.
    pub fn m(&self) -> usize {
        match self.interp {
            Interp::Linear => self.rbar.len().saturating_sub(1),
            Interp::Step => self.rbar.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.m();
        if m == 0 {
            return Err(Error::Parameter("profile needs at least one cell".into()));
        }
        if self.rbar.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::Parameter("profile values must lie in [0, 1]".into()));
        }
        if self.rbar.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::Parameter("profile must be nonincreasing on [0, pi]".into()));
        }
        if self.rbar.iter().all(|&r| r == 0.0) {
            return Err(Error::ZeroRegion("profile is identically zero".into()));
        }
        Ok(())
    }

    /// Value at the symmetry axis, `rbar_0`.
    pub fn axis_value(&self) -> f64 {
        self.rbar[0]
    }

    /// Value at `theta = pi`.
    pub fn far_value(&self) -> f64 {
        self.rbar[self.rbar.len() - 1]
    }

    pub(crate) fn pieces(&self) -> Vec<Piece> {
        let m = self.m();
        let h = PI / m as f64;
        (0..m)
            .map(|j| {
                let (t0, t1) = (j as f64 * h, (j + 1) as f64 * h);
                match self.interp {
                    Interp::Linear => Piece { t0, t1, r0: self.rbar[j], r1: self.rbar[j + 1] },
                    Interp::Step => Piece { t0, t1, r0: self.rbar[j], r1: self.rbar[j] },
                }
            })
            .collect()
    }

    /// Radial jumps `(theta, r_before, r_after)` of a step profile.
    pub(crate) fn jumps(&self) -> Vec<(f64, f64, f64)> {
        match self.interp {
            Interp::Linear => Vec::new(),
            Interp::Step => {
                let h = PI / self.m() as f64;
                self.rbar
                    .windows(2)
                    .enumerate()
                    .filter(|(_, w)| w[0] != w[1])
                    .map(|(j, w)| ((j + 1) as f64 * h, w[0], w[1]))
                    .collect()
            }
        }
    }

    /// `sup {theta : rbar(theta) > level}`, or `0` when the level is never exceeded.
    pub fn last_angle_above(&self, level: f64) -> f64 {
        let mut theta = 0.0;
        for p in self.pieces() {
            if p.r0 <= level {
                break;
            }
            theta = if p.r1 > level { p.t1 } else { p.t0 + (p.r0 - level) / (p.r0 - p.r1) * (p.t1 - p.t0) };
        }
        theta
    }

    /// `sup {theta : rbar(theta) > 0}`.
    pub fn support_end(&self) -> f64 {
        let mut theta = 0.0;
        for p in self.pieces() {
            if p.r0 <= 0.0 {
                break;
            }
            theta = p.t1;
        }
        theta
    }

    /// Half-profile area and boundary length restricted to `theta in [a, b]`.
    fn window(&self, f: &DensitySpec, a: f64, b: f64) -> (f64, f64) {
        let mut area = 0.0;
        let mut length = 0.0;
        for p in self.pieces() {
            let (lo, hi) = (p.t0.max(a), p.t1.min(b));
            if hi > lo {
                let s = p.sub(lo, hi);
                area += s.area(f);
                length += s.length(f);
            }
        }
        for (t, ra, rb) in self.jumps() {
            if t > a && t <= b {
                length += (ra - rb).abs();
            }
        }
        (area, length)
    }
}

/// Area, boundary length and isoperimetric ratio of a region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measures {
    pub area: f64,
    pub boundary_length: f64,
    pub ratio: f64,
}

/// Measures of the full (mirrored) region of `prof` in the surface of `f_alpha`.
pub fn profile_measures(f_alpha: &DensitySpec, prof: &RadialProfile) -> Result<Measures> {
    prof.validate()?;
    let (area, length) = prof.window(f_alpha, 0.0, PI);
    let (area, boundary_length) = (2.0 * area, 2.0 * length);
    if !(boundary_length > 0.0) {
        return Err(Error::ZeroRegion("region has no boundary".into()));
    }
    Ok(Measures { area, boundary_length, ratio: area / (boundary_length * boundary_length) })
}

/// One band `A_n` of the sectorial decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusRecord {
    pub n: usize,
    pub theta_n: f64,
    pub tau_n: f64,
    /// Lower bound `max{(tau_n/pi) l(S(o, 2^{-n-1} rbar_0)), 2^{-n} rbar_0}` for the boundary length in the band.
    pub ell_n: f64,
    /// Boundary length of the region actually lying over the band.
    pub measured_length: f64,
    pub area_n: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusDiagnostics {
    pub records: Vec<AnnulusRecord>,
    pub total_area: f64,
    pub profile_area: f64,
    /// Empirical doubling constant of circle lengths.
    pub c_emp: f64,
    /// `area_n <= c_emp ell_n^2` for every band.
    pub bounded: bool,
}

/// Decomposes the region into bands where `2^{-n-1} rbar_0 <= rbar <= 2^{-n} rbar_0`.
///
/// Bands are indexed by angle: band `n` covers `(theta_n, theta_{n+1}]` with
/// `theta_0 = 0`. Without a truncation index the region must reach the vertex
/// (`rbar_pi = 0`), and bands continue until the level drops below `1e-9 rbar_0`;
/// the final band absorbs the tail so the bands always partition the region.
pub fn annulus_diagnostics(f_alpha: &DensitySpec, prof: &RadialProfile, truncation: Option<usize>) -> Result<AnnulusDiagnostics> {
    prof.validate()?;
    let r0 = prof.axis_value();
    if prof.far_value() > 0.0 && truncation.is_none() {
        return Err(Error::Parameter("the vertex is interior; supply a truncation index".into()));
    }
    let end = if prof.far_value() > 0.0 { PI } else { prof.support_end() };
    let last = truncation.unwrap_or_else(|| (1e9f64.log2().ceil()) as usize);

    let radii = GridSpec { points: 200, decades: 8.0 }.radii(f_alpha.outer * (1.0 - 1e-9));
    let c_emp = geoest_check(f_alpha, &radii)?.doubling_constant;

    let mut records = Vec::new();
    let mut theta_n = 0.0;
    for n in 0..=last {
        let hi_level = r0 * 0.5f64.powi(n as i32);
        let lo_level = 0.5 * hi_level;
        let next = if n == last { end } else { prof.last_angle_above(lo_level).min(end) };
        let (half_area, half_len) = prof.window(f_alpha, theta_n, next);
        let tau_n = next - theta_n;
        let circle = 2.0 * PI * f_alpha.value(lo_level);
        let ell_n = (tau_n / PI * circle).max(hi_level);
        let area_n = 2.0 * half_area;
        records.push(AnnulusRecord {
            n,
            theta_n,
            tau_n,
            ell_n,
            measured_length: 2.0 * half_len,
            area_n,
            ratio: area_n / (ell_n * ell_n),
        });
        theta_n = next;
        if theta_n >= end {
            break;
        }
    }
    let total_area: f64 = records.iter().map(|r| r.area_n).sum();
    let profile_area = 2.0 * prof.window(f_alpha, 0.0, PI).0;
    let bounded = records.iter().all(|r| r.area_n <= c_emp * r.ell_n * r.ell_n * (1.0 + 1e-12));
    Ok(AnnulusDiagnostics { records, total_area, profile_area, c_emp, bounded })
}

/// Boundary length `l^nu` and area `b^nu` of the region inside `B(o, nu)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NearOrigin {
    pub nu: f64,
    pub length: f64,
    pub area: f64,
}

pub fn near_origin_diagnostics(f_alpha: &DensitySpec, prof: &RadialProfile, nus: &[f64]) -> Result<Vec<NearOrigin>> {
    prof.validate()?;
    let pieces = prof.pieces();
    let jumps = prof.jumps();
    nus.iter()
        .map(|&nu| {
            if !(nu > 0.0 && nu <= 1.0) {
                return Err(Error::Parameter(format!("nu must lie in (0, 1], got {nu}")));
            }
            let mut length = 0.0;
            let mut area = 0.0;
            for p in &pieces {
                match p.below(nu) {
                    Some(inside) => {
                        length += inside.length(f_alpha);
                        area += inside.area(f_alpha);
                        // the rest of the piece is cut at radius nu
                        let cut = (p.t1 - p.t0) - (inside.t1 - inside.t0);
                        area += f_alpha.primitive(nu) * cut;
                    }
                    None => area += f_alpha.primitive(nu) * (p.t1 - p.t0),
                }
            }
            for &(_, ra, rb) in &jumps {
                length += (ra.min(nu) - rb.min(nu)).abs();
            }
            Ok(NearOrigin { nu, length: 2.0 * length, area: 2.0 * area })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{ball_area, rescale, QuadSpec};
    use approx::assert_relative_eq;

    #[test]
    fn cone_ball_profile() {
        let beta = 3.0 * PI;
        let f = DensitySpec::cone(beta, 1.0);
        let s = 0.6;
        let m = profile_measures(&f, &RadialProfile::constant(1.0, s, 16)).unwrap();
        assert_relative_eq!(m.area, beta * s * s / 2.0, max_relative = 1e-14);
        assert_relative_eq!(m.boundary_length, beta * s, max_relative = 1e-14);
        assert_relative_eq!(m.ratio, 1.0 / (2.0 * beta), max_relative = 1e-14);
    }

    #[test]
    fn flat_disk_is_euclidean_optimum() {
        let m = profile_measures(&DensitySpec::flat(1.0), &RadialProfile::constant(1.0, 1.0, 64)).unwrap();
        assert_relative_eq!(m.ratio, 1.0 / (4.0 * PI), max_relative = 1e-14);
    }

    #[test]
    fn rescaled_log_ball_matches_density_module() {
        let alpha = (-2f64).exp();
        let fa = rescale(&DensitySpec::log_e0(), alpha).unwrap();
        let m = profile_measures(&fa, &RadialProfile::constant(alpha, 1.0, 32)).unwrap();
        let area = ball_area(&fa, 1.0, QuadSpec::default()).unwrap();
        let length = 2.0 * PI * fa.eval(1.0).unwrap();
        assert_relative_eq!(m.ratio, area / (length * length), max_relative = 1e-9);
    }

    #[test]
    fn zero_profile_rejected() {
        let err = profile_measures(&DensitySpec::flat(1.0), &RadialProfile::constant(1.0, 0.0, 8)).unwrap_err();
        assert!(matches!(err, Error::ZeroRegion(_)));
        let bad = RadialProfile { alpha: 1.0, rbar: vec![0.2, 0.5], interp: Interp::Linear };
        assert!(profile_measures(&DensitySpec::flat(1.0), &bad).is_err());
    }

    #[test]
    fn step_jumps_are_radial_segments() {
        let f = DensitySpec::flat(1.0);
        let prof = RadialProfile { alpha: 1.0, rbar: vec![1.0, 0.5], interp: Interp::Step };
        let m = profile_measures(&f, &prof).unwrap();
        // two quarter-disk sectors per side plus two radial jumps of 1/2
        let length = 2.0 * (PI / 2.0 + 0.5 * PI / 2.0) + 2.0 * 0.5;
        let area = 2.0 * (0.5 * PI / 2.0 + 0.125 * PI / 2.0);
        assert_relative_eq!(m.boundary_length, length, max_relative = 1e-14);
        assert_relative_eq!(m.area, area, max_relative = 1e-14);
    }

    #[test]
    fn flat_linear_profile_annuli_partition_area() {
        let f = DensitySpec::flat(1.0);
        let prof = RadialProfile::from_fn(1.0, 64, |t| 1.0 - t / PI);
        let d = annulus_diagnostics(&f, &prof, None).unwrap();
        assert_relative_eq!(d.total_area, d.profile_area, max_relative = 1e-8);
        assert!(d.bounded);
        let m = profile_measures(&f, &prof).unwrap();
        assert_relative_eq!(d.profile_area, m.area, max_relative = 1e-14);
    }

    #[test]
    fn cone_step_profile_bands_follow_steps() {
        let f = DensitySpec::cone(3.0 * PI, 1.0);
        // halves at every cell boundary: band n is exactly cell n
        let m = 8;
        let mut rbar: Vec<f64> = (0..m).map(|j| 0.8 * 0.5f64.powi(j as i32)).collect();
        rbar[m - 1] = 0.0;
        let prof = RadialProfile { alpha: 1.0, rbar, interp: Interp::Step };
        let d = annulus_diagnostics(&f, &prof, None).unwrap();
        let h = PI / m as f64;
        for rec in d.records.iter().take(m - 2) {
            assert_relative_eq!(rec.tau_n, h, epsilon = 1e-14);
            assert_relative_eq!(rec.theta_n, rec.n as f64 * h, epsilon = 1e-14);
        }
        assert_relative_eq!(d.total_area, d.profile_area, max_relative = 1e-12);
        assert!(d.bounded);
    }

    #[test]
    fn interior_vertex_needs_truncation() {
        let f = DensitySpec::flat(1.0);
        let prof = RadialProfile::from_fn(1.0, 16, |t| 1.0 - 0.5 * t / PI);
        assert!(annulus_diagnostics(&f, &prof, None).is_err());
        let d = annulus_diagnostics(&f, &prof, Some(3)).unwrap();
        assert_relative_eq!(d.total_area, d.profile_area, max_relative = 1e-12);
    }

    #[test]
    fn near_origin_limits() {
        let f = DensitySpec::flat(1.0);
        let prof = RadialProfile::from_fn(1.0, 32, |t| 0.9 * (1.0 - t / PI));
        let full = profile_measures(&f, &prof).unwrap();
        let v = near_origin_diagnostics(&f, &prof, &[1.0]).unwrap()[0];
        assert_relative_eq!(v.length, full.boundary_length, max_relative = 1e-14);
        assert_relative_eq!(v.area, full.area, max_relative = 1e-14);

        let fa = rescale(&DensitySpec::log_e0(), 1e-3).unwrap();
        let prof = RadialProfile::from_fn(1e-3, 32, |t| 0.8 - 0.2 * t / PI);
        let v = near_origin_diagnostics(&fa, &prof, &[0.5]).unwrap()[0];
        assert_eq!(v.length, 0.0);
        assert_relative_eq!(v.area, ball_area(&fa, 0.5, QuadSpec::default()).unwrap(), max_relative = 1e-9);
    }

    #[test]
    fn near_origin_is_monotone_in_nu() {
        let fa = rescale(&DensitySpec::log_e0(), 1e-2).unwrap();
        let prof = RadialProfile::from_fn(1e-2, 48, |t| (0.7 * (1.0 - 2.0 * t / PI)).max(0.0));
        let nus: Vec<f64> = (1..=40).map(|i| i as f64 / 40.0).collect();
        let v = near_origin_diagnostics(&fa, &prof, &nus).unwrap();
        for w in v.windows(2) {
            assert!(w[1].length >= w[0].length && w[1].area >= w[0].area);
        }
    }
}
