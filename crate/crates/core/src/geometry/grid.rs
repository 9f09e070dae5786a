//! Shortest paths on a polar grid, an upper bound for surface distances.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{segment_length, wrap_angle, SurfacePoint};
use crate::density::DensitySpec;
use crate::error::{Error, Result};

/// Polar grid resolution. `stencil = 1` is the 8-connected graph; larger
/// values add every primitive offset `(di, dj)` with `|di|, |dj| <= stencil`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolarGrid {
    pub n_r: usize,
    pub n_theta: usize,
    #[serde(default = "one")]
    pub stencil: usize,
}

fn one() -> usize {
    1
}

impl PolarGrid {
    pub fn new(n_r: usize, n_theta: usize) -> Self {
        Self { n_r, n_theta, stencil: 1 }
    }

    fn offsets(&self) -> Vec<(i64, i64)> {
        let s = self.stencil.max(1) as i64;
        let mut out = Vec::new();
        for di in -s..=s {
            for dj in -s..=s {
                if (di, dj) != (0, 0) && gcd(di.unsigned_abs(), dj.unsigned_abs()) == 1 {
                    out.push((di, dj));
                }
            }
        }
        out
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| self.1.cmp(&other.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra distance from `p` to `q` over a polar grid on `[0, max(r_p, r_q)]`.
///
/// Rings sit at `r_i = i r_max / n_r`, a vertex node joins the innermost ring
/// radially, and `p`, `q` are attached to the corners of the cells containing
/// them. Every edge is a coordinate-linear segment weighted by its metric
/// length, so the result bounds the true distance from above.
pub fn grid_distance_oracle(f: &DensitySpec, p: &SurfacePoint, q: &SurfacePoint, grid: PolarGrid) -> Result<f64> {
    if grid.n_r < 16 || grid.n_theta < 16 {
        return Err(Error::Parameter("grid resolutions must be at least 16".into()));
    }
    let r_max = p.r.max(q.r);
    if r_max == 0.0 {
        return Ok(0.0);
    }
    if r_max > f.outer * (1.0 + 1e-12) {
        return Err(Error::Domain { r: r_max, outer: f.outer });
    }
    let (nr, nt) = (grid.n_r, grid.n_theta);
    let dr = r_max / nr as f64;
    let dth = 2.0 * PI / nt as f64;
    let radius = |i: usize| i as f64 * dr;
    let tol = 1e-10;

    // node ids: 0 = vertex, 1 + (i - 1) * nt + j for ring i >= 1, then p and q
    let ring_node = |i: usize, j: usize| 1 + (i - 1) * nt + j;
    let n_nodes = 1 + nr * nt + 2;
    let (p_id, q_id) = (n_nodes - 2, n_nodes - 1);

    // edge lengths depend on (ring, offset) only
    let offsets = grid.offsets();
    let mut lengths = vec![f64::INFINITY; (nr + 1) * offsets.len()];
    for i in 1..=nr {
        for (k, &(di, dj)) in offsets.iter().enumerate() {
            let ti = i as i64 + di;
            if ti < 1 || ti > nr as i64 {
                continue;
            }
            lengths[i * offsets.len() + k] =
                segment_length(f, (radius(i), 0.0), (radius(ti as usize), dj as f64 * dth), tol)?;
        }
    }

    // attachments of p and q: corners of their cells (vertex for the innermost cell)
    let attach = |s: &SurfacePoint| -> Result<Vec<(usize, f64)>> {
        let t = (s.theta + PI).rem_euclid(2.0 * PI);
        let j0 = ((t / dth).floor() as usize) % nt;
        let i0 = ((s.r / dr).floor() as usize).min(nr - 1);
        let mut out = Vec::new();
        for i in [i0, i0 + 1] {
            for j in [j0, (j0 + 1) % nt] {
                let (node, rr, th) = if i == 0 { (0, 0.0, s.theta) } else { (ring_node(i, j), radius(i), j as f64 * dth - PI) };
                let dt = wrap_angle(th - s.theta);
                let len = if s.r == rr && dt == 0.0 { 0.0 } else { segment_length(f, (s.r, 0.0), (rr, dt), tol)? };
                out.push((node, len));
            }
        }
        Ok(out)
    };
    let p_edges = attach(p)?;
    let q_edges = attach(q)?;

    let mut dist = vec![f64::INFINITY; n_nodes];
    let mut heap = BinaryHeap::new();
    dist[p_id] = 0.0;
    heap.push(Entry(0.0, p_id));
    while let Some(Entry(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        if u == q_id {
            return Ok(d);
        }
        let mut relax = |v: usize, w: f64, heap: &mut BinaryHeap<Entry>| {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Entry(nd, v));
            }
        };
        if u == p_id {
            for &(v, w) in &p_edges {
                relax(v, w, &mut heap);
            }
            continue;
        }
        // q is reached through its attachment edges
        for &(v, w) in &q_edges {
            if v == u {
                relax(q_id, w, &mut heap);
            }
        }
        if u == 0 {
            for j in 0..nt {
                relax(ring_node(1, j), dr, &mut heap);
            }
            continue;
        }
        let i = (u - 1) / nt + 1;
        let j = (u - 1) % nt;
        if i == 1 {
            relax(0, dr, &mut heap);
        }
        for (k, &(di, dj)) in offsets.iter().enumerate() {
            let w = lengths[i * offsets.len() + k];
            if !w.is_finite() {
                continue;
            }
            let ti = (i as i64 + di) as usize;
            let tj = (j as i64 + dj).rem_euclid(nt as i64) as usize;
            relax(ring_node(ti, tj), w, &mut heap);
        }
    }
    Ok(dist[q_id])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{clairaut_geodesic, cone_distance};

    #[test]
    fn flat_diameter() {
        let f = DensitySpec::flat(1.0);
        let d = grid_distance_oracle(&f, &SurfacePoint::new(1.0, 0.0), &SurfacePoint::new(1.0, PI), PolarGrid::new(256, 512)).unwrap();
        assert!((d - 2.0).abs() < 1e-2, "{d}");
    }

    #[test]
    fn upper_bounds_cone_distance() {
        let beta = 3.0 * PI;
        let f = DensitySpec::cone(beta, 1.0);
        for i in 0..10 {
            let p = SurfacePoint::new(0.1 + 0.8 * (i as f64 * 0.31).fract(), 2.0 * (i as f64 * 0.7).fract());
            let q = SurfacePoint::new(0.1 + 0.8 * (i as f64 * 0.53).fract(), -3.0 * (i as f64 * 0.29).fract());
            let d = grid_distance_oracle(&f, &p, &q, PolarGrid::new(32, 64)).unwrap();
            assert!(d >= cone_distance(beta, &p, &q) - 1e-12);
            let g = clairaut_geodesic(&f, &p, &q, 1e-10).unwrap();
            assert!(g.distance <= d + 1e-9);
        }
    }

    #[test]
    fn rejects_coarse_grids() {
        let f = DensitySpec::flat(1.0);
        let p = SurfacePoint::new(0.5, 0.0);
        assert!(grid_distance_oracle(&f, &p, &p, PolarGrid::new(8, 64)).is_err());
    }
}
