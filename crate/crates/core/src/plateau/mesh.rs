//! Triangulations of the closed unit disk.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiskMesh {
    pub vertices: Vec<[f64; 2]>,
    /// Counterclockwise triangles.
    pub triangles: Vec<[usize; 3]>,
    /// Boundary vertices in counterclockwise order, starting at angle 0.
    pub boundary: Vec<usize>,
    pub h: f64,
}

/// Per-triangle data used by the energy kernels.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Element {
    pub v: [usize; 3],
    /// Gradients of the three barycentric basis functions.
    pub grad: [[f64; 2]; 3],
    pub area: f64,
}

impl DiskMesh {
    /// Concentric rings `r_j = j / J`, `J = ceil(1/h)`, each carrying about
    /// `2 pi r_j / h` equally spaced vertices (a multiple of 3 on the boundary),
    /// zipped together ring by ring.
    pub fn rings(h: f64) -> Result<Self> {
        if !(h > 0.0 && h <= 0.5) {
            return Err(Error::Parameter(format!("mesh size must lie in (0, 0.5], got {h}")));
        }
        let rings = (1.0 / h).ceil() as usize;
        let mut vertices = vec![[0.0, 0.0]];
        let mut starts = vec![0usize];
        let mut counts = vec![1usize];
        let mut offsets = vec![0.0];
        for j in 1..=rings {
            let r = j as f64 / rings as f64;
            let mut n = ((2.0 * PI * r / h).round() as usize).max(6);
            let off = if j == rings {
                n = n.div_ceil(3) * 3;
                0.0
            } else if j % 2 == 1 {
                0.5
            } else {
                0.0
            };
            starts.push(vertices.len());
            counts.push(n);
            offsets.push(off);
            for i in 0..n {
                let t = 2.0 * PI * (i as f64 + off) / n as f64;
                let p = if j == rings { [t.cos(), t.sin()] } else { [r * t.cos(), r * t.sin()] };
                vertices.push(p);
            }
        }
        let mut triangles = Vec::new();
        for k in 0..counts[1] {
            triangles.push([0, starts[1] + k, starts[1] + (k + 1) % counts[1]]);
        }
        for j in 1..rings {
            let (sa, na, oa) = (starts[j], counts[j], offsets[j]);
            let (sb, nb, ob) = (starts[j + 1], counts[j + 1], offsets[j + 1]);
            let angle_a = |i: usize| 2.0 * PI * (i as f64 + oa) / na as f64;
            // outer index whose angle is closest below the first inner vertex
            let k0 = ((angle_a(0) / (2.0 * PI) * nb as f64 - ob).floor().max(0.0)) as usize;
            let angle_b = |k: usize| 2.0 * PI * (k as f64 + ob) / nb as f64;
            let (mut i, mut k) = (0usize, k0);
            while i < na || k < k0 + nb {
                let advance_inner = k >= k0 + nb || (i < na && angle_a(i + 1) <= angle_b(k + 1));
                let (a0, b0) = (sa + i % na, sb + k % nb);
                if advance_inner {
                    triangles.push([a0, b0, sa + (i + 1) % na]);
                    i += 1;
                } else {
                    triangles.push([a0, b0, sb + (k + 1) % nb]);
                    k += 1;
                }
            }
        }
        let boundary = (starts[rings]..starts[rings] + counts[rings]).collect();
        let mesh = DiskMesh { vertices, triangles, boundary, h };
        mesh.check()?;
        Ok(mesh)
    }

    /// Verifies orientation, nondegeneracy and that the triangles tile the disk polygon.
    pub fn check(&self) -> Result<()> {
        let mut total = 0.0;
        for (t, tri) in self.triangles.iter().enumerate() {
            let a = signed_area(self, tri);
            if !(a > 0.0) {
                return Err(Error::Mesh(t));
            }
            total += a;
        }
        let n = self.boundary.len();
        let poly: f64 = (0..n)
            .map(|i| {
                let (p, q) = (self.vertices[self.boundary[i]], self.vertices[self.boundary[(i + 1) % n]]);
                0.5 * (p[0] * q[1] - p[1] * q[0])
            })
            .sum();
        if (total - poly).abs() > 1e-9 * poly {
            return Err(Error::Parameter(format!("triangles cover {total}, boundary polygon encloses {poly}")));
        }
        Ok(())
    }

    pub(crate) fn elements(&self) -> Result<Vec<Element>> {
        self.triangles
            .iter()
            .enumerate()
            .map(|(t, tri)| {
                let [p0, p1, p2] = tri.map(|i| self.vertices[i]);
                let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
                if !(det > 0.0) {
                    return Err(Error::Mesh(t));
                }
                // gradient of the basis function of vertex i is the rotated opposite edge over 2|T|
                let g = |a: [f64; 2], b: [f64; 2]| [(a[1] - b[1]) / det, (b[0] - a[0]) / det];
                Ok(Element { v: *tri, grad: [g(p1, p2), g(p2, p0), g(p0, p1)], area: 0.5 * det })
            })
            .collect()
    }

    /// Indices of the boundary vertices closest to angles `0`, `2pi/3`, `4pi/3` in the loop.
    pub fn anchors(&self) -> [usize; 3] {
        let n = self.boundary.len();
        [0, n / 3, 2 * n / 3]
    }

    pub fn is_boundary(&self) -> Vec<bool> {
        let mut b = vec![false; self.vertices.len()];
        for &i in &self.boundary {
            b[i] = true;
        }
        b
    }

    /// Flat text format:
    ///
    /// ```text
    /// # warpdisk disk mesh
    /// h <mesh size>
    /// vertices <N>
    /// <x> <y>            (N lines)
    /// triangles <M>
    /// <i> <j> <k>        (M lines, counterclockwise, 0-based)
    /// boundary <B>
    /// <i>                (B lines, counterclockwise loop)
    /// ```
    pub fn to_text(&self) -> String {
        let mut s = String::from("# warpdisk disk mesh\n");
        let _ = writeln!(s, "h {:e}", self.h);
        let _ = writeln!(s, "vertices {}", self.vertices.len());
        for v in &self.vertices {
            let _ = writeln!(s, "{:e} {:e}", v[0], v[1]);
        }
        let _ = writeln!(s, "triangles {}", self.triangles.len());
        for t in &self.triangles {
            let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
        }
        let _ = writeln!(s, "boundary {}", self.boundary.len());
        for b in &self.boundary {
            let _ = writeln!(s, "{b}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::Parameter(format!("mesh text: {m}"));
        let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).collect();
        let mut it = lines.into_iter();
        let count = |l: Option<&str>, key: &str| -> Result<String> {
            l.and_then(|l| l.strip_prefix(key)).map(|v| v.trim().to_string()).ok_or_else(|| bad(&format!("expected `{key}`")))
        };
        let h: f64 = count(it.next(), "h")?.parse().map_err(|_| bad("h"))?;
        let n: usize = count(it.next(), "vertices")?.parse().map_err(|_| bad("vertex count"))?;
        let nums = |l: &str| -> Result<Vec<f64>> { l.split_whitespace().map(|x| x.parse::<f64>().map_err(|_| bad(l))).collect() };
        let mut vertices = Vec::with_capacity(n);
        for _ in 0..n {
            let v = nums(it.next().ok_or_else(|| bad("missing vertex"))?)?;
            if v.len() != 2 {
                return Err(bad("vertex needs two coordinates"));
            }
            vertices.push([v[0], v[1]]);
        }
        let m: usize = count(it.next(), "triangles")?.parse().map_err(|_| bad("triangle count"))?;
        let mut triangles = Vec::with_capacity(m);
        for _ in 0..m {
            let l = it.next().ok_or_else(|| bad("missing triangle"))?;
            let t: Vec<usize> = l.split_whitespace().map(|x| x.parse().map_err(|_| bad(l))).collect::<Result<_>>()?;
            if t.len() != 3 || t.iter().any(|&i| i >= n) {
                return Err(bad(l));
            }
            triangles.push([t[0], t[1], t[2]]);
        }
        let b: usize = count(it.next(), "boundary")?.parse().map_err(|_| bad("boundary count"))?;
        let mut boundary = Vec::with_capacity(b);
        for _ in 0..b {
            let l = it.next().ok_or_else(|| bad("missing boundary index"))?;
            let i: usize = l.parse().map_err(|_| bad(l))?;
            if i >= n {
                return Err(bad(l));
            }
            boundary.push(i);
        }
        let mesh = DiskMesh { vertices, triangles, boundary, h };
        mesh.check()?;
        Ok(mesh)
    }
}

fn signed_area(mesh: &DiskMesh, t: &[usize; 3]) -> f64 {
    let [a, b, c] = t.map(|i| mesh.vertices[i]);
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}
