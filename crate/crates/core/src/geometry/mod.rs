//! Distances on warped surfaces `[0, R] x_f S^1` and on metric cones.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

mod clairaut;
mod grid;

pub use clairaut::{clairaut_geodesic, GeodesicKind, GeodesicResult};
pub use grid::{grid_distance_oracle, PolarGrid};

use crate::density::{cone_angle, rescale, DensitySpec};
use crate::error::{Error, Result};
use crate::quad;

/// A point `(r, theta)` in polar coordinates; every point with `r = 0` is the vertex `o`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub r: f64,
    pub theta: f64,
}

impl SurfacePoint {
    /// Builds a point with `theta` wrapped into `[-pi, pi)`.
    pub fn new(r: f64, theta: f64) -> Self {
        Self { r, theta: wrap_angle(theta) }
    }

    pub fn is_vertex(&self) -> bool {
        self.r == 0.0
    }
}

/// Wraps an angle into `[-pi, pi)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let t = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if t >= PI {
        t - 2.0 * PI
    } else {
        t
    }
}

/// Angular gap between two points, in `[0, pi]`.
pub fn angular_gap(p: &SurfacePoint, q: &SurfacePoint) -> f64 {
    let d = (p.theta - q.theta).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Distance in the Euclidean cone over a circle of length `beta`.
pub fn cone_distance(beta: f64, p: &SurfacePoint, q: &SurfacePoint) -> f64 {
    let gamma = angular_gap(p, q) * beta / (2.0 * PI);
    if gamma >= PI {
        return p.r + q.r;
    }
    let sq = p.r * p.r + q.r * q.r - 2.0 * p.r * q.r * gamma.cos();
    sq.max(0.0).sqrt()
}

/// Length of the coordinate-linear segment from `a` to `b`.
///
/// `b.theta` is taken literally (no wrapping), so callers choose the direction
/// in which the segment sweeps.
pub fn segment_length(f: &DensitySpec, a: (f64, f64), b: (f64, f64), tol: f64) -> Result<f64> {
    let dr = b.0 - a.0;
    let dt = b.1 - a.1;
    if dt == 0.0 {
        return Ok(dr.abs());
    }
    if dr == 0.0 {
        return Ok(f.value(a.0) * dt.abs());
    }
    let scale = dr.abs() + f.value(a.0.max(b.0)) * dt.abs();
    let v = quad::integrate(
        |t| {
            let r = a.0 + t * dr;
            (dr * dr + (f.value(r) * dt).powi(2)).sqrt()
        },
        0.0,
        1.0,
        tol * scale,
    )?;
    Ok(v)
}

/// Metric length of a polyline whose segments are linear in `(r, theta)`.
///
/// Each segment sweeps the shorter way around the circle.
pub fn path_length(f: &DensitySpec, polyline: &[SurfacePoint]) -> Result<f64> {
    let mut total = 0.0;
    for w in polyline.windows(2) {
        let (p, q) = (w[0], w[1]);
        if p == q {
            return Err(Error::Parameter("consecutive polyline points coincide".into()));
        }
        for s in [&p, &q] {
            if s.r < 0.0 || s.r > f.outer * (1.0 + 1e-12) {
                return Err(Error::Domain { r: s.r, outer: f.outer });
            }
        }
        let dt = wrap_angle(q.theta - p.theta);
        // a half-turn is ambiguous after wrapping; keep the sign of the raw difference
        let dt = if dt == -PI && q.theta > p.theta { PI } else { dt };
        total += segment_length(f, (p.r, 0.0), (q.r, dt), 1e-12)?;
    }
    Ok(total)
}

/// Largest observed bi-Lipschitz distortion between a rescaled surface and its comparison cone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distortion {
    pub alpha: f64,
    pub beta: f64,
    /// `max over pairs of max(d_X/d_Y, d_Y/d_X) - 1`.
    pub delta: f64,
    pub worst: (SurfacePoint, SurfacePoint),
}

/// Samples `n` pairs in the annulus `k <= r <= 1` of `rescale(f, alpha)` and
/// compares surface distances with distances in the cone of angle
/// `cone_angle(f, alpha)`.
pub fn distortion_estimate(f: &DensitySpec, alpha: f64, k: f64, n: usize, seed: u64) -> Result<Distortion> {
    use rand::{Rng, SeedableRng};
    use rayon::prelude::*;

    if !(k > 0.0 && k < 1.0) {
        return Err(Error::Parameter(format!("inner cutoff must lie in (0, 1), got {k}")));
    }
    let fa = rescale(f, alpha)?;
    let beta = cone_angle(f, alpha)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut point = || SurfacePoint::new(rng.gen_range(k..=1.0), rng.gen_range(-PI..PI));
    let pairs: Vec<(SurfacePoint, SurfacePoint)> = (0..n).map(|_| (point(), point())).collect();
    let ratios: Vec<Result<(f64, usize)>> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (p, q))| {
            let dx = clairaut_geodesic(&fa, p, q, 1e-10)?.distance;
            let dy = cone_distance(beta, p, q);
            let ratio = if dx == 0.0 && dy == 0.0 { 1.0 } else { (dx / dy).max(dy / dx) };
            Ok((ratio - 1.0, i))
        })
        .collect();
    let mut delta = 0.0_f64;
    let mut worst = 0;
    for r in ratios {
        let (d, i) = r?;
        if d > delta {
            delta = d;
            worst = i;
        }
    }
    Ok(Distortion { alpha, beta, delta, worst: pairs.get(worst).copied().unwrap_or((SurfacePoint::new(1.0, 0.0), SurfacePoint::new(1.0, 0.0))) })
}
