//! Geodesic distance on a surface of revolution through the Clairaut relation.
//!
//! Along a unit-speed geodesic `f(r)^2 dtheta/ds = c` is conserved, so a
//! geodesic between two points is determined by `c` alone:
//!
//! ```text
//! dtheta/dr = c / (f sqrt(f^2 - c^2)),   ds/dr = f / sqrt(f^2 - c^2).
//! ```
//!
//! Candidates are parameterised by `s` in `[0, 2)`. For `s <= 1` the geodesic is
//! monotone in `r` with `c = s f(r_lo)`; for `s > 1` it turns at
//! `r_min = (2 - s) r_lo` with `c = f(r_min)`. The swept angle is scanned over
//! `s`, every crossing of the target angle is refined, and the shortest of the
//! resulting geodesics, the radial path and the path through the vertex wins.
//! Confining the search to `r <= max(r1, r2)` is valid because the nearest-point
//! projection onto a ball about `o` is 1-Lipschitz for increasing `f`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{angular_gap, SurfacePoint};
use crate::density::DensitySpec;
use crate::error::{Error, Result};
use crate::quad;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeodesicKind {
    Radial,
    ThroughVertex,
    Clairaut,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodesicResult {
    pub distance: f64,
    pub kind: GeodesicKind,
    /// Clairaut constant, present for `GeodesicKind::Clairaut`.
    pub clairaut_c: Option<f64>,
    pub swept_angle: f64,
    /// `|swept angle - target angle|` at the accepted root.
    pub residual: f64,
}

/// Scan of the swept-angle function between two radii.
struct Branches<'a> {
    f: &'a DensitySpec,
    r1: f64,
    r2: f64,
    lo: f64,
    hi: f64,
    tol: f64,
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    s: f64,
    angle: f64,
    length: f64,
    c: f64,
}

impl<'a> Branches<'a> {
    fn has_monotone_branch(&self) -> bool {
        self.hi - self.lo > 1e-14 * self.hi
    }

    /// `(angle, length)` of the half-geodesic from the radius `a` (where
    /// `f(a) >= c`, equality at a turning point) out to `b`.
    fn half(&self, a: f64, b: f64, c: f64) -> Result<[f64; 2]> {
        if b <= a {
            return Ok([0.0, 0.0]);
        }
        let f = self.f;
        let fa = f.value(a);
        let scale = b;
        // slope of f at a, used when f(a + u^2) - c rounds to zero
        let h = 1e-7 * a.max(1e-300);
        let slope = ((f.value(a + h) - fa) / h).max(1e-300);
        let integrand = |r: f64, u2: f64| -> [f64; 2] {
            let fr = f.value(r);
            let mut gap = fr - c;
            if gap <= 0.0 {
                gap = slope * u2 + (fa - c);
            }
            let root = (gap * (fr + c)).sqrt();
            if root <= 0.0 {
                return [0.0, 0.0];
            }
            [c / (fr * root), fr / root / scale]
        };

        let w = (b - a).min(a.max(1e-300));
        let near = quad::gauss_kronrod(
            |u| {
                let u2 = u * u;
                let v = integrand(a + u2, u2);
                [2.0 * u * v[0], 2.0 * u * v[1]]
            },
            0.0,
            w.sqrt(),
            self.tol,
        )?;
        let mut out = near;
        if a + w < b {
            let far = quad::gauss_kronrod(
                |t| {
                    let r = t.exp();
                    let v = integrand(r, r - a);
                    [r * v[0], r * v[1]]
                },
                (a + w).ln(),
                b.ln(),
                self.tol,
            )?;
            out[0] += far[0];
            out[1] += far[1];
        }
        Ok([out[0], out[1] * scale])
    }

    fn eval(&self, s: f64) -> Result<Sample> {
        if s <= 1.0 {
            let c = s * self.f.value(self.lo);
            let [angle, length] = self.half(self.lo, self.hi, c)?;
            Ok(Sample { s, angle, length, c })
        } else {
            let rmin = (2.0 - s) * self.lo;
            let c = self.f.value(rmin);
            let a = self.half(rmin, self.r1, c)?;
            let b = self.half(rmin, self.r2, c)?;
            Ok(Sample { s, angle: a[0] + b[0], length: a[1] + b[1], c })
        }
    }

    fn scan_points(&self) -> Vec<f64> {
        let mut s = Vec::new();
        if self.has_monotone_branch() {
            s.extend((0..8).map(|i| i as f64 / 8.0));
        }
        s.extend((0..16).map(|i| 1.0 + i as f64 / 16.0));
        s.extend((2..=7).map(|j| 2.0 - 10f64.powi(-j)));
        s
    }

    /// Illinois regula falsi on `angle(s) - target` inside a sign-changing bracket.
    ///
    /// The flag reports a bracket that collapsed to adjacent floats, where the
    /// residual is quadrature noise rather than a missed root.
    fn refine(&self, mut a: Sample, mut b: Sample, target: f64, angle_tol: f64) -> Result<(Sample, bool)> {
        let mut ga = a.angle - target;
        let mut gb = b.angle - target;
        let mut side = 0i8;
        let mut best = if ga.abs() < gb.abs() { a } else { b };
        let mut collapsed = false;
        for _ in 0..200 {
            if (best.angle - target).abs() <= angle_tol {
                break;
            }
            if (b.s - a.s).abs() <= 4.0 * f64::EPSILON * a.s.abs().max(b.s.abs()) {
                collapsed = true;
                break;
            }
            let mut s = (a.s * gb - b.s * ga) / (gb - ga);
            if !(s > a.s.min(b.s) && s < a.s.max(b.s)) {
                s = 0.5 * (a.s + b.s);
            }
            let m = self.eval(s)?;
            let gm = m.angle - target;
            if gm.abs() < (best.angle - target).abs() {
                best = m;
            }
            if (gm > 0.0) == (gb > 0.0) {
                b = m;
                gb = gm;
                if side == 1 {
                    ga *= 0.5;
                }
                side = 1;
            } else {
                a = m;
                ga = gm;
                if side == -1 {
                    gb *= 0.5;
                }
                side = -1;
            }
        }
        Ok((best, collapsed))
    }
}

/// Distance between `p` and `q` on `[0, R] x_f S^1`.
///
/// `tol` bounds the quadrature error and the angle-matching residual.
pub fn clairaut_geodesic(f: &DensitySpec, p: &SurfacePoint, q: &SurfacePoint, tol: f64) -> Result<GeodesicResult> {
    for s in [p, q] {
        if !(s.r >= 0.0 && s.r <= f.outer * (1.0 + 1e-12)) {
            return Err(Error::Domain { r: s.r, outer: f.outer });
        }
    }
    let dtheta = angular_gap(p, q);
    let (lo, hi) = if p.r <= q.r { (p.r, q.r) } else { (q.r, p.r) };
    let radial = GeodesicResult { distance: hi - lo, kind: GeodesicKind::Radial, clairaut_c: None, swept_angle: 0.0, residual: 0.0 };
    if lo == 0.0 || dtheta <= 1e-15 {
        return Ok(GeodesicResult { swept_angle: dtheta, ..radial });
    }
    let mut best = GeodesicResult {
        distance: p.r + q.r,
        kind: GeodesicKind::ThroughVertex,
        clairaut_c: None,
        swept_angle: dtheta,
        residual: 0.0,
    };

    let branches = Branches { f, r1: p.r, r2: q.r, lo, hi, tol: 0.05 * tol };
    let samples = branches
        .scan_points()
        .into_iter()
        .map(|s| branches.eval(s))
        .collect::<Result<Vec<_>>>()?;

    let mut found = false;
    for target in [dtheta, 2.0 * PI - dtheta] {
        for w in samples.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (ga, gb) = (a.angle - target, b.angle - target);
            if ga == 0.0 || (ga < 0.0) != (gb < 0.0) {
                let (root, collapsed) = if ga == 0.0 { (a, false) } else { branches.refine(a, b, target, tol)? };
                let residual = (root.angle - target).abs();
                // the length changes by c per unit of endpoint angle
                let limit = if collapsed { 1e3 * tol } else { 10.0 * tol };
                if residual > limit {
                    continue;
                }
                found = true;
                if root.length < best.distance {
                    best = GeodesicResult {
                        distance: root.length,
                        kind: GeodesicKind::Clairaut,
                        clairaut_c: Some(root.c),
                        swept_angle: target,
                        residual,
                    };
                }
            }
        }
    }
    if !found {
        // no Clairaut geodesic: the target angle lies beyond every turning geodesic,
        // which is only consistent with a vertex-dominated pair
        let max_angle = samples.iter().map(|s| s.angle).fold(0.0, f64::max);
        if max_angle >= dtheta {
            return Err(Error::Bracket { target: dtheta, profile: samples.iter().map(|s| (s.s, s.angle)).collect() });
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::cone_distance;
    use approx::assert_relative_eq;

    #[test]
    fn flat_law_of_cosines() {
        let f = DensitySpec::flat(1.0);
        let g = clairaut_geodesic(&f, &SurfacePoint::new(1.0, 0.0), &SurfacePoint::new(1.0, PI / 2.0), 1e-10).unwrap();
        assert_relative_eq!(g.distance, 2f64.sqrt(), epsilon = 1e-9);
        assert_eq!(g.kind, GeodesicKind::Clairaut);
        assert!(g.residual <= 1e-9);
    }

    #[test]
    fn vertex_and_radial_cases() {
        let f = DensitySpec::cone(3.0 * PI, 1.0);
        let g = clairaut_geodesic(&f, &SurfacePoint::new(1.0, 0.0), &SurfacePoint::new(1.0, PI), 1e-10).unwrap();
        assert_eq!(g.kind, GeodesicKind::ThroughVertex);
        assert_eq!(g.distance, 2.0);
        let g = clairaut_geodesic(&f, &SurfacePoint::new(0.2, 1.0), &SurfacePoint::new(0.7, 1.0), 1e-10).unwrap();
        assert_eq!(g.kind, GeodesicKind::Radial);
        assert_relative_eq!(g.distance, 0.5, epsilon = 1e-15);
        let g = clairaut_geodesic(&f, &SurfacePoint::new(0.0, 1.0), &SurfacePoint::new(0.7, -2.0), 1e-10).unwrap();
        assert_relative_eq!(g.distance, 0.7);
    }

    #[test]
    fn cone_pairs_match_closed_form() {
        for beta in [PI, 2.0 * PI, 3.0 * PI, 4.0 * PI] {
            let f = DensitySpec::cone(beta, 1.0);
            for i in 0..20 {
                let p = SurfacePoint::new(0.05 + 0.9 * (i as f64 * 0.37).fract(), 0.0);
                let q = SurfacePoint::new(0.05 + 0.9 * (i as f64 * 0.61).fract(), PI * (i as f64 * 0.13).fract());
                let g = clairaut_geodesic(&f, &p, &q, 1e-10).unwrap();
                assert!((g.distance - cone_distance(beta, &p, &q)).abs() < 1e-8, "beta {beta} {p:?} {q:?}: {g:?}");
            }
        }
    }

    #[test]
    fn out_of_domain() {
        let f = DensitySpec::log_e0();
        assert!(clairaut_geodesic(&f, &SurfacePoint::new(0.5, 0.0), &SurfacePoint::new(0.1, 0.0), 1e-8).is_err());
    }
}
