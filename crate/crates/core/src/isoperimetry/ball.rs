//! Geodesic balls as candidate regions, measured through a contoured distance field.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Candidate, Family, IsoReport};
use crate::density::DensitySpec;
use crate::error::{Error, Result};
use crate::geometry::{clairaut_geodesic, segment_length, SurfacePoint};
use crate::quad::gauss_legendre5;

/// Resolution of the distance field on the half-window `theta in [0, theta_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BallGrid {
    pub n_r: usize,
    pub n_theta: usize,
}

impl Default for BallGrid {
    fn default() -> Self {
        Self { n_r: 64, n_theta: 64 }
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    r: f64,
    t: f64,
    v: f64,
}

/// `B(center, s)` in the surface of `f_alpha`.
///
/// The centre is rotated onto `theta = 0`; the ball is symmetric about that
/// axis, so only `theta >= 0` is contoured and the measures are doubled.
/// Distances come from exact Clairaut geodesics at the grid nodes and the
/// level set `d = s` is traced cell by cell with linear interpolation. Area
/// is `oint F(r) dtheta` over the traced polygons and the perimeter sums the
/// metric lengths of the contour segments, plus the arc along `r = 1` when the
/// ball reaches the outer boundary.
pub fn geodesic_ball_candidate(f_alpha: &DensitySpec, center: &SurfacePoint, s: f64, grid: BallGrid) -> Result<IsoReport> {
    let rc = center.r;
    let outer = f_alpha.outer;
    if !(s > 0.0) || !(rc >= 0.0 && rc < outer) {
        return Err(Error::Parameter(format!("ball centre {rc} and radius {s} must satisfy 0 <= r_c < R, s > 0")));
    }
    if grid.n_r < 4 || grid.n_theta < 4 {
        return Err(Error::Parameter("ball grid needs at least 4 cells per direction".into()));
    }
    let clipped = rc + s > outer;
    let r_lo = (rc - 1.05 * s).max(0.0);
    let r_hi = (rc + 1.05 * s).min(outer);
    let t_hi = if s >= rc { PI } else { (1.1 * s / f_alpha.value(rc - s)).min(PI) };

    let (nr, nt) = (grid.n_r, grid.n_theta);
    let c = SurfacePoint { r: rc, theta: 0.0 };
    let nodes: Vec<Node> = (0..=nr)
        .flat_map(|i| (0..=nt).map(move |j| (i, j)))
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&(i, j)| {
            let r = if i == nr { r_hi } else { r_lo + (r_hi - r_lo) * i as f64 / nr as f64 };
            let t = t_hi * j as f64 / nt as f64;
            let d = clairaut_geodesic(f_alpha, &c, &SurfacePoint { r, theta: t }, 1e-10)?.distance;
            Ok(Node { r, t, v: d - s })
        })
        .collect::<Result<_>>()?;
    let at = |i: usize, j: usize| nodes[i * (nt + 1) + j];

    // the window must contain the ball except along r = 0, r = R and the symmetry axes
    for i in 0..=nr {
        for j in 0..=nt {
            let n = at(i, j);
            let open_lo = i == 0 && r_lo > 0.0;
            let open_hi = i == nr && r_hi < outer;
            let open_t = j == nt && t_hi < PI;
            if n.v < 0.0 && (open_lo || open_hi || open_t) {
                return Err(Error::Parameter(format!("ball escapes its contour window at ({}, {})", n.r, n.t)));
            }
        }
    }

    let mut area = 0.0;
    let mut length = 0.0;
    for i in 0..nr {
        for j in 0..nt {
            let corners = [at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)];
            if corners.iter().all(|n| n.v >= 0.0) {
                continue;
            }
            // clip the cell to {v < 0}; `true` marks a point where the walk leaves the region
            let mut poly: Vec<((f64, f64), bool)> = Vec::with_capacity(8);
            for k in 0..4 {
                let (a, b) = (corners[k], corners[(k + 1) % 4]);
                if a.v < 0.0 {
                    poly.push(((a.r, a.t), false));
                }
                if (a.v < 0.0) != (b.v < 0.0) {
                    let w = a.v / (a.v - b.v);
                    poly.push(((a.r + w * (b.r - a.r), a.t + w * (b.t - a.t)), a.v < 0.0));
                }
            }
            for k in 0..poly.len() {
                let ((r0, t0), exit) = poly[k];
                let ((r1, t1), _) = poly[(k + 1) % poly.len()];
                if t1 != t0 {
                    area += gauss_legendre5(|u| f_alpha.primitive(r0 + u * (r1 - r0)), 0.0, 1.0) * (t1 - t0);
                }
                if exit {
                    length += segment_length(f_alpha, (r0, t0), (r1, t1), 1e-12)?;
                } else if clipped && r0 == outer && r1 == outer {
                    length += f_alpha.value(outer) * (t1 - t0).abs();
                }
            }
        }
    }
    // corners are walked counterclockwise in (r, theta), so Green's formula gives +area
    let area = 2.0 * area;
    let boundary_length = 2.0 * length;
    if !(boundary_length > 0.0) {
        return Err(Error::ZeroRegion("ball contour is empty".into()));
    }
    Ok(IsoReport {
        area,
        boundary_length,
        ratio: area / (boundary_length * boundary_length),
        alpha: f64::NAN,
        family: Family::GeodesicBall,
        candidate: Candidate::Ball { center: c, radius: s },
        clipped,
        stagnated: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::rescale;
    use approx::assert_relative_eq;

    const EUCLID: f64 = 1.0 / (4.0 * PI);

    #[test]
    fn flat_ball_converges() {
        let f = DensitySpec::flat(1.0);
        let c = SurfacePoint::new(0.5, 0.0);
        let errs: Vec<f64> = [16, 32, 64]
            .iter()
            .map(|&n| {
                let rep = geodesic_ball_candidate(&f, &c, 0.2, BallGrid { n_r: n, n_theta: n }).unwrap();
                assert!(rep.ratio <= EUCLID);
                assert!(!rep.clipped);
                (rep.ratio - EUCLID).abs()
            })
            .collect();
        assert!(errs[2] < errs[0] && errs[2] < 2e-4 * EUCLID, "{errs:?}");
        let rep = geodesic_ball_candidate(&f, &c, 0.2, BallGrid::default()).unwrap();
        assert_relative_eq!(rep.area, PI * 0.04, max_relative = 1e-3);
    }

    #[test]
    fn cone_ball_at_vertex() {
        let beta = 3.0 * PI;
        let f = DensitySpec::cone(beta, 1.0);
        let rep = geodesic_ball_candidate(&f, &SurfacePoint::new(0.0, 0.0), 0.3, BallGrid::default()).unwrap();
        assert_relative_eq!(rep.ratio, 1.0 / (6.0 * PI), max_relative = 1e-10);
        assert_relative_eq!(rep.area, beta * 0.09 / 2.0, max_relative = 1e-10);
    }

    #[test]
    fn positive_curvature_excess() {
        let fa = rescale(&DensitySpec::log_e0(), 1e-3).unwrap();
        let rep = geodesic_ball_candidate(&fa, &SurfacePoint::new(0.3, 0.0), 0.1, BallGrid::default()).unwrap();
        let excess = rep.ratio / EUCLID - 1.0;
        assert!(excess > 0.0 && excess < 0.01, "{excess}");
    }

    #[test]
    fn clipped_flag() {
        let f = DensitySpec::flat(1.0);
        let rep = geodesic_ball_candidate(&f, &SurfacePoint::new(0.9, 0.0), 0.2, BallGrid::default()).unwrap();
        assert!(rep.clipped);
        assert!(rep.ratio < EUCLID);
    }
}
