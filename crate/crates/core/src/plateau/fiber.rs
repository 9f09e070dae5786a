//! Preimages of the collapsed set.

use serde::{Deserialize, Serialize};

use super::energy::MapState;
use super::mesh::DiskMesh;
use super::CollapsedSetSpec;
use crate::error::{Error, Result};
use crate::isoperimetry::simplex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberReport {
    pub threshold: f64,
    pub triangles: usize,
    /// Domain area of the selected triangles.
    pub area: f64,
    pub components: usize,
    pub connected: bool,
    /// Radius of the largest disk inside the selected triangles.
    pub inscribed_radius: f64,
    /// Largest distance between two vertices of the selected triangles.
    pub diameter: f64,
}

/// Triangles whose image centroid lies within `threshold` of the set.
///
/// Connectivity counts triangles sharing a vertex as adjacent. The inscribed
/// radius is the largest exact distance to the boundary of the union: a
/// Euclidean distance transform of a `raster x raster` grid on `[-1, 1]^2`
/// picks candidate pixels, and the best few are refined off the grid.
pub fn fiber_region(mesh: &DiskMesh, map: &MapState, e: &CollapsedSetSpec, threshold: f64, raster: usize) -> Result<FiberReport> {
    if !(threshold > 0.0) {
        return Err(Error::Parameter(format!("fiber threshold must be positive, got {threshold}")));
    }
    if map.images.len() != mesh.vertices.len() {
        return Err(Error::Parameter("map state does not match the mesh".into()));
    }
    if raster < 8 {
        return Err(Error::Parameter("raster needs at least 8 pixels per side".into()));
    }
    let selected: Vec<usize> = (0..mesh.triangles.len())
        .filter(|&t| {
            let c = mesh.triangles[t].iter().fold([0.0; 2], |c, &v| [c[0] + map.images[v][0] / 3.0, c[1] + map.images[v][1] / 3.0]);
            e.distance(c).0 <= threshold
        })
        .collect();
    if selected.is_empty() {
        return Ok(FiberReport { threshold, triangles: 0, area: 0.0, components: 0, connected: false, inscribed_radius: 0.0, diameter: 0.0 });
    }
    let elements = mesh.elements()?;
    let area = selected.iter().map(|&t| elements[t].area).sum();

    let mut parent: Vec<usize> = (0..mesh.vertices.len()).collect();
    fn root(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for &t in &selected {
        let [a, b, c] = mesh.triangles[t];
        for (x, y) in [(a, b), (b, c)] {
            let (rx, ry) = (root(&mut parent, x), root(&mut parent, y));
            if rx != ry {
                parent[rx] = ry;
            }
        }
    }
    let mut roots: Vec<usize> = selected.iter().map(|&t| root(&mut parent, mesh.triangles[t][0])).collect();
    roots.sort_unstable();
    roots.dedup();
    let components = roots.len();

    let mut verts: Vec<usize> = selected.iter().flat_map(|&t| mesh.triangles[t]).collect();
    verts.sort_unstable();
    verts.dedup();
    let pts: Vec<[f64; 2]> = verts.iter().map(|&v| mesh.vertices[v]).collect();
    let diameter = point_set_diameter(&pts);

    let inscribed_radius = inscribed_radius(mesh, &selected, raster);
    Ok(FiberReport { threshold, triangles: selected.len(), area, components, connected: components == 1, inscribed_radius, diameter })
}

fn point_set_diameter(pts: &[[f64; 2]]) -> f64 {
    let mut best = 0.0_f64;
    for (i, p) in pts.iter().enumerate() {
        for q in &pts[i + 1..] {
            best = best.max((p[0] - q[0]).hypot(p[1] - q[1]));
        }
    }
    best
}

fn inscribed_radius(mesh: &DiskMesh, selected: &[usize], n: usize) -> f64 {
    let px = 2.0 / n as f64;
    let center = |i: usize| -1.0 + (i as f64 + 0.5) * px;
    let mut inside = vec![false; n * n];
    for &t in selected {
        let [a, b, c] = mesh.triangles[t].map(|v| mesh.vertices[v]);
        let lo = |k: usize| a[k].min(b[k]).min(c[k]);
        let hi = |k: usize| a[k].max(b[k]).max(c[k]);
        let cell = |x: f64| ((x + 1.0) / px - 0.5).floor().clamp(0.0, (n - 1) as f64) as usize;
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        for j in cell(lo(1))..=cell(hi(1)) {
            for i in cell(lo(0))..=cell(hi(0)) {
                let p = [center(i), center(j)];
                let l1 = ((b[0] - p[0]) * (c[1] - p[1]) - (c[0] - p[0]) * (b[1] - p[1])) / det;
                let l2 = ((c[0] - p[0]) * (a[1] - p[1]) - (a[0] - p[0]) * (c[1] - p[1])) / det;
                let l3 = 1.0 - l1 - l2;
                if l1 >= 0.0 && l2 >= 0.0 && l3 >= 0.0 {
                    inside[j * n + i] = true;
                }
            }
        }
    }
    // squared distance (in pixels) to the nearest outside pixel
    let big = (8 * n * n) as f64;
    let mut g: Vec<f64> = inside.iter().map(|&b| if b { big } else { 0.0 }).collect();
    let mut line = vec![0.0; n];
    for j in 0..n {
        line.copy_from_slice(&g[j * n..(j + 1) * n]);
        let out = edt_1d(&line);
        g[j * n..(j + 1) * n].copy_from_slice(&out);
    }
    for i in 0..n {
        for j in 0..n {
            line[j] = g[j * n + i];
        }
        let out = edt_1d(&line);
        for j in 0..n {
            g[j * n + i] = out[j];
        }
    }
    let best = g.iter().zip(&inside).filter(|(_, &b)| b).map(|(&d, _)| d).fold(0.0, f64::max);
    if best == 0.0 {
        return 0.0;
    }
    // exact distance to the boundary edges of the union, at the pixels the raster ranks near the top
    let mut count = std::collections::HashMap::new();
    for &t in selected {
        let tri = mesh.triangles[t];
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            *count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    let edges: Vec<([f64; 2], [f64; 2])> =
        count.into_iter().filter(|&(_, c)| c == 1).map(|((a, b), _)| (mesh.vertices[a], mesh.vertices[b])).collect();
    let boundary = |p: [f64; 2]| edges.iter().map(|&(a, b)| segment_distance(p, a, b)).fold(f64::INFINITY, f64::min);
    let cut = (best.sqrt() - 2.0).max(0.0).powi(2);
    let mut candidates: Vec<([f64; 2], f64)> = Vec::new();
    for j in 0..n {
        for i in 0..n {
            if inside[j * n + i] && g[j * n + i] >= cut {
                let p = [center(i), center(j)];
                candidates.push((p, boundary(p)));
            }
        }
    }
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1));
    // polish the best pixels off the grid; signed so that leaving the union is never rewarded
    let tris: Vec<[[f64; 2]; 3]> = selected.iter().map(|&t| mesh.triangles[t].map(|v| mesh.vertices[v])).collect();
    let signed = |x: &[f64]| {
        let p = [x[0], x[1]];
        let d = boundary(p);
        if tris.iter().any(|t| contains(t, p)) {
            -d
        } else {
            d
        }
    };
    let mut radius = candidates.first().map_or(0.0, |c| c.1);
    for &(p, _) in candidates.iter().take(4) {
        let r = simplex::minimize(signed, &p, px, 1e-12, 400);
        radius = radius.max(-r.value);
    }
    radius
}

fn contains(t: &[[f64; 2]; 3], p: [f64; 2]) -> bool {
    let [a, b, c] = *t;
    let cross = |u: [f64; 2], v: [f64; 2]| (u[0] - p[0]) * (v[1] - p[1]) - (v[0] - p[0]) * (u[1] - p[1]);
    let (s1, s2, s3) = (cross(a, b), cross(b, c), cross(c, a));
    (s1 >= 0.0 && s2 >= 0.0 && s3 >= 0.0) || (s1 <= 0.0 && s2 <= 0.0 && s3 <= 0.0)
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let e = [b[0] - a[0], b[1] - a[1]];
    let t = (((p[0] - a[0]) * e[0] + (p[1] - a[1]) * e[1]) / (e[0] * e[0] + e[1] * e[1])).clamp(0.0, 1.0);
    (p[0] - a[0] - t * e[0]).hypot(p[1] - a[1] - t * e[1])
}

/// One-dimensional squared distance transform of a sampled function (lower envelope of parabolas).
fn edt_1d(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];
    let mut k = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let s = loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s > z[k] {
                break s;
            }
            k -= 1;
        };
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    let mut d = vec![0.0; n];
    k = 0;
    for (q, out) in d.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        *out = (q as f64 - p as f64).powi(2) + f[p];
    }
    d
}
