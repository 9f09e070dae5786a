//! Chord-arc tests for planar Jordan polygons and the isoperimetric threshold
//! that forces them.
//!
//! In the plane the filling area of a Jordan curve is its enclosed area and the
//! sharp quadratic isoperimetric constant is `1/(4 pi)`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed simple polygon, positively oriented. The closing edge is implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct PlanarJordanCurve {
    vertices: Vec<[f64; 2]>,
    /// `cumulative[i]` is the arc length from vertex 0 to vertex `i`; the last entry is the total length.
    cumulative: Vec<f64>,
}

impl TryFrom<Vec<[f64; 2]>> for PlanarJordanCurve {
    type Error = Error;

    fn try_from(v: Vec<[f64; 2]>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PlanarJordanCurve> for Vec<[f64; 2]> {
    fn from(c: PlanarJordanCurve) -> Self {
        c.vertices
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn on_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

/// Closed segments `ab` and `cd` share a point.
fn segments_meet(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(a, c, d))
        || (d2 == 0.0 && on_segment(b, c, d))
        || (d3 == 0.0 && on_segment(c, a, b))
        || (d4 == 0.0 && on_segment(d, a, b))
}

/// Twice the signed shoelace area.
fn signed_area2(v: &[[f64; 2]]) -> f64 {
    let n = v.len();
    (0..n).map(|i| {
        let (p, q) = (v[i], v[(i + 1) % n]);
        p[0] * q[1] - p[1] * q[0]
    })
    .sum()
}

impl PlanarJordanCurve {
    /// Validates simplicity (all pairs of non-adjacent edges), at least 8
    /// vertices and counterclockwise orientation.
    pub fn new(vertices: Vec<[f64; 2]>) -> Result<Self> {
        let n = vertices.len();
        if n < 8 {
            return Err(Error::InvalidCurve(format!("need at least 8 vertices, got {n}")));
        }
        if vertices.iter().any(|v| !v[0].is_finite() || !v[1].is_finite()) {
            return Err(Error::InvalidCurve("non-finite vertex".into()));
        }
        for i in 0..n {
            if vertices[i] == vertices[(i + 1) % n] {
                return Err(Error::InvalidCurve(format!("repeated vertex {i}")));
            }
        }
        for i in 0..n {
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (c, d) = (vertices[j], vertices[(j + 1) % n]);
                if segments_meet(a, b, c, d) {
                    return Err(Error::InvalidCurve(format!("edges {i} and {j} intersect")));
                }
            }
        }
        if signed_area2(&vertices) <= 0.0 {
            return Err(Error::InvalidCurve("curve is not positively oriented".into()));
        }
        let mut cumulative = Vec::with_capacity(n + 1);
        let mut s = 0.0;
        cumulative.push(0.0);
        for i in 0..n {
            s += dist(vertices[i], vertices[(i + 1) % n]);
            cumulative.push(s);
        }
        Ok(Self { vertices, cumulative })
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn length(&self) -> f64 {
        self.cumulative[self.vertices.len()]
    }

    pub fn area(&self) -> f64 {
        0.5 * signed_area2(&self.vertices)
    }

    /// Applies `x -> s R(phi) x + t`.
    pub fn similar(&self, scale: f64, angle: f64, shift: [f64; 2]) -> Result<Self> {
        let (sn, cs) = angle.sin_cos();
        Self::new(
            self.vertices
                .iter()
                .map(|v| [scale * (cs * v[0] - sn * v[1]) + shift[0], scale * (sn * v[0] + cs * v[1]) + shift[1]])
                .collect(),
        )
    }
}

/// `epsilon = (delta + 1)^2 / (delta^2 + K_ca delta + 1) - 1` with `K_ca = 4/lambda + 2/lambda^2`.
pub fn epsilon_for(delta: f64, lambda: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Parameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(lambda > 1.0 + 2f64.sqrt()) {
        return Err(Error::Parameter(format!("lambda must exceed 1 + sqrt 2, got {lambda}")));
    }
    let k_ca = 4.0 / lambda + 2.0 / (lambda * lambda);
    Ok((delta + 1.0).powi(2) / (delta * delta + k_ca * delta + 1.0) - 1.0)
}

/// Pair of vertices whose shorter arc is too long for their chord.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub i: usize,
    pub j: usize,
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub l1: f64,
    pub l2: f64,
    pub chord: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChordArcReport {
    pub delta: f64,
    pub lambda: f64,
    pub pass: bool,
    pub witness: Option<Witness>,
}

/// Scans all vertex pairs in lexicographic order and returns the first violation.
pub fn check_chord_arc(curve: &PlanarJordanCurve, delta: f64, lambda: f64) -> ChordArcReport {
    let v = &curve.vertices;
    let cum = &curve.cumulative;
    let total = curve.length();
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            let a = cum[j] - cum[i];
            let (l1, l2) = if a <= total - a { (a, total - a) } else { (total - a, a) };
            if delta * l2 > l1 {
                continue;
            }
            let chord = dist(v[i], v[j]);
            if l1 > lambda * chord {
                let witness = Witness { i, j, x: v[i], y: v[j], l1, l2, chord };
                return ChordArcReport { delta, lambda, pass: false, witness: Some(witness) };
            }
        }
    }
    ChordArcReport { delta, lambda, pass: true, witness: None }
}

/// Enclosed area over squared length.
pub fn planar_iso_ratio(curve: &PlanarJordanCurve) -> f64 {
    curve.area() / curve.length().powi(2)
}

/// Random curve families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CurveFamily {
    /// Circles of random radius and centre.
    Circle,
    /// `r(phi) = 1 + sum_k a_k cos(k phi + phase_k)` with `sum |a_k| <= max_amplitude < 1`.
    Fourier { modes: usize, max_amplitude: f64 },
    /// Two disks joined by a straight neck of half-width down to `min_neck`.
    Barbell { min_neck: f64 },
    /// Stadium whose straight sides are pinched towards each other by a smooth bump.
    PinchedStadium { max_pinch: f64 },
}

impl CurveFamily {
    pub fn name(&self) -> &'static str {
        match self {
            CurveFamily::Circle => "circle",
            CurveFamily::Fourier { .. } => "fourier",
            CurveFamily::Barbell { .. } => "barbell",
            CurveFamily::PinchedStadium { .. } => "pinched-stadium",
        }
    }

    /// The three default random families.
    pub fn defaults() -> Vec<CurveFamily> {
        vec![
            CurveFamily::Fourier { modes: 8, max_amplitude: 0.95 },
            CurveFamily::Barbell { min_neck: 0.005 },
            CurveFamily::PinchedStadium { max_pinch: 0.995 },
        ]
    }

    /// Draws one curve with roughly `n` vertices.
    pub fn sample<R: Rng>(&self, rng: &mut R, n: usize) -> Result<PlanarJordanCurve> {
        let n = n.max(8);
        match *self {
            CurveFamily::Circle => {
                let r = rng.gen_range(0.1..10.0);
                let c = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
                PlanarJordanCurve::new(
                    (0..n)
                        .map(|k| {
                            let t = 2.0 * PI * k as f64 / n as f64;
                            [c[0] + r * t.cos(), c[1] + r * t.sin()]
                        })
                        .collect(),
                )
            }
            CurveFamily::Fourier { modes, max_amplitude } => {
                if !(0.0..1.0).contains(&max_amplitude) || modes < 2 {
                    return Err(Error::Parameter("fourier family needs modes >= 2 and amplitude in [0, 1)".into()));
                }
                let total = rng.gen_range(0.0..=max_amplitude);
                let raw: Vec<f64> = (2..=modes).map(|_| rng.gen_range(0.0..1.0f64)).collect();
                let norm: f64 = raw.iter().sum::<f64>().max(1e-300);
                let coef: Vec<(usize, f64, f64)> = raw
                    .iter()
                    .enumerate()
                    .map(|(i, a)| (i + 2, total * a / norm, rng.gen_range(0.0..2.0 * PI)))
                    .collect();
                PlanarJordanCurve::new(
                    (0..n)
                        .map(|k| {
                            let t = 2.0 * PI * k as f64 / n as f64;
                            let r = 1.0 + coef.iter().map(|&(m, a, ph)| a * (m as f64 * t + ph).cos()).sum::<f64>();
                            [r * t.cos(), r * t.sin()]
                        })
                        .collect(),
                )
            }
            CurveFamily::Barbell { min_neck } => {
                let a: f64 = rng.gen_range(0.5..1.5);
                let b = rng.gen_range(0.5..1.5);
                let h = rng.gen_range(min_neck..0.45) * f64::min(a, b);
                let g = rng.gen_range(0.0..2.0);
                Ok(barbell(a, b, h, g, n)?)
            }
            CurveFamily::PinchedStadium { max_pinch } => {
                let half = rng.gen_range(0.5..2.5);
                let pinch = rng.gen_range(0.0..max_pinch);
                let sigma = rng.gen_range(0.1..1.0) * half;
                let x0 = rng.gen_range(-0.5..0.5) * half;
                pinched_stadium(half, pinch, sigma, x0, n)
            }
        }
    }
}

/// Samples a closed piecewise curve: each piece is a map `[0, 1] -> R^2` with
/// its length; vertices are spread proportionally to length, endpoints of a
/// piece being the start of the next.
fn polyline(pieces: &[(f64, &dyn Fn(f64) -> [f64; 2])], n: usize) -> Result<PlanarJordanCurve> {
    let total: f64 = pieces.iter().map(|p| p.0).sum();
    let mut out = Vec::with_capacity(n + pieces.len());
    for (len, g) in pieces {
        if *len <= 0.0 {
            continue;
        }
        let k = ((n as f64 * len / total).round() as usize).max(1);
        out.extend((0..k).map(|i| g(i as f64 / k as f64)));
    }
    PlanarJordanCurve::new(out)
}

/// Disks of radii `a`, `b` joined by a neck `[-g/2, g/2] x [-h, h]`.
pub fn barbell(a: f64, b: f64, h: f64, g: f64, n: usize) -> Result<PlanarJordanCurve> {
    if !(h > 0.0 && h < a.min(b) && g >= 0.0) {
        return Err(Error::Parameter("barbell needs 0 < h < min(a, b) and g >= 0".into()));
    }
    let (pl, pr) = ((h / a).asin(), (h / b).asin());
    let (xl, xr) = (-0.5 * g - a * pl.cos(), 0.5 * g + b * pr.cos());
    let bottom = |t: f64| [-0.5 * g + t * g, -h];
    let right = |t: f64| {
        let p = -PI + pr + t * (2.0 * PI - 2.0 * pr);
        [xr + b * p.cos(), b * p.sin()]
    };
    let top = |t: f64| [0.5 * g - t * g, h];
    let left = |t: f64| {
        let p = pl + t * (2.0 * PI - 2.0 * pl);
        [xl + a * p.cos(), a * p.sin()]
    };
    polyline(
        &[(g, &bottom), (b * (2.0 * PI - 2.0 * pr), &right), (g, &top), (a * (2.0 * PI - 2.0 * pl), &left)],
        n,
    )
}

/// Stadium `[-half, half] x [-1, 1]` with unit caps; the sides are pushed to
/// `|y| = 1 - pinch * exp(-((x - x0)/sigma)^2) cos^2(pi x / (2 half))`.
pub fn pinched_stadium(half: f64, pinch: f64, sigma: f64, x0: f64, n: usize) -> Result<PlanarJordanCurve> {
    if !(half > 0.0 && (0.0..1.0).contains(&pinch) && sigma > 0.0) {
        return Err(Error::Parameter("stadium needs half > 0, pinch in [0, 1), sigma > 0".into()));
    }
    let side = move |x: f64| 1.0 - pinch * (-((x - x0) / sigma).powi(2)).exp() * (PI * x / (2.0 * half)).cos().powi(2);
    let bottom = |t: f64| {
        let x = -half + 2.0 * half * t;
        [x, -side(x)]
    };
    let right = |t: f64| {
        let p = -PI / 2.0 + PI * t;
        [half + p.cos(), p.sin()]
    };
    let top = |t: f64| {
        let x = half - 2.0 * half * t;
        [x, side(x)]
    };
    let left = |t: f64| {
        let p = PI / 2.0 + PI * t;
        [-half + p.cos(), p.sin()]
    };
    // side lengths are only used to distribute vertices
    let s = 2.0 * half * (1.0 + pinch);
    polyline(&[(s, &bottom), (PI, &right), (s, &top), (PI, &left)], n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub family: String,
    pub delta: f64,
    pub lambda: f64,
    pub epsilon: f64,
    /// `(1/(4 pi)) / (1 + epsilon)`.
    pub threshold: f64,
    pub checked: usize,
    /// Curves that are not `(delta, lambda)`-chord-arc.
    pub chord_arc_failures: usize,
    /// Non-chord-arc curves at or above the threshold.
    pub failures: usize,
    /// Smallest `threshold - ratio` over non-chord-arc curves.
    pub tightest_margin: Option<f64>,
    pub seed: u64,
}

/// Checks that every sampled curve failing the chord-arc test has ratio below
/// the threshold. A violating curve is a hard error carrying the curve.
pub fn verify_lemma31(family: &CurveFamily, delta: f64, lambda: f64, n_samples: usize, seed: u64, n_vertices: usize) -> Result<VerificationReport> {
    let epsilon = epsilon_for(delta, lambda)?;
    let threshold = 1.0 / (4.0 * PI) / (1.0 + epsilon);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let curves = (0..n_samples).map(|_| family.sample(&mut rng, n_vertices)).collect::<Result<Vec<_>>>()?;
    let outcomes: Vec<Option<f64>> = curves
        .par_iter()
        .map(|c| if check_chord_arc(c, delta, lambda).pass { None } else { Some(planar_iso_ratio(c)) })
        .collect();
    let mut report = VerificationReport {
        family: family.name().into(),
        delta,
        lambda,
        epsilon,
        threshold,
        checked: n_samples,
        chord_arc_failures: 0,
        failures: 0,
        tightest_margin: None,
        seed,
    };
    for (c, ratio) in curves.iter().zip(outcomes) {
        let Some(ratio) = ratio else { continue };
        report.chord_arc_failures += 1;
        let margin = threshold - ratio;
        report.tightest_margin = Some(report.tightest_margin.map_or(margin, |m: f64| m.min(margin)));
        if margin <= 0.0 {
            let curve = serde_json::to_string(c.vertices()).unwrap_or_default();
            return Err(Error::Violation { ratio, threshold, curve });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn circle(n: usize) -> PlanarJordanCurve {
        PlanarJordanCurve::new((0..n).map(|k| [(2.0 * PI * k as f64 / n as f64).cos(), (2.0 * PI * k as f64 / n as f64).sin()]).collect()).unwrap()
    }

    fn square() -> PlanarJordanCurve {
        let mut v = Vec::new();
        for k in 0..4 {
            v.push([k as f64 / 4.0, 0.0]);
        }
        for k in 0..4 {
            v.push([1.0, k as f64 / 4.0]);
        }
        for k in 0..4 {
            v.push([1.0 - k as f64 / 4.0, 1.0]);
        }
        for k in 0..4 {
            v.push([0.0, 1.0 - k as f64 / 4.0]);
        }
        PlanarJordanCurve::new(v).unwrap()
    }

    #[test]
    fn epsilon_values_and_limits() {
        // K_ca = 14/9 at lambda = 3
        let e = epsilon_for(0.5, 3.0).unwrap();
        assert_relative_eq!(e, 2.25 / (1.25 + 14.0 / 18.0) - 1.0, epsilon = 1e-15);
        assert!((e - 0.1096).abs() < 1e-4);
        assert!(epsilon_for(1e-9, 3.0).unwrap() < 1e-8);
        assert!((epsilon_for(1.0 - 1e-9, 1e9).unwrap() - 1.0).abs() < 1e-8);
        assert!(epsilon_for(0.5, 2.4).is_err());
        assert!(epsilon_for(1.0, 3.0).is_err());
        assert!(epsilon_for(0.0, 3.0).is_err());
    }

    #[test]
    fn epsilon_is_increasing_in_both_arguments() {
        let deltas: Vec<f64> = (1..50).map(|i| i as f64 / 50.0).collect();
        let lambdas: Vec<f64> = (0..40).map(|i| 2.5 + 0.25 * i as f64).collect();
        for &l in &lambdas {
            for w in deltas.windows(2) {
                assert!(epsilon_for(w[1], l).unwrap() > epsilon_for(w[0], l).unwrap());
            }
        }
        for &d in &deltas {
            for w in lambdas.windows(2) {
                assert!(epsilon_for(d, w[1]).unwrap() > epsilon_for(d, w[0]).unwrap());
            }
        }
    }

    #[test]
    fn reference_ratios() {
        let c = circle(4096);
        assert_relative_eq!(planar_iso_ratio(&c), 1.0 / (4.0 * PI), max_relative = 1e-6);
        assert_relative_eq!(planar_iso_ratio(&square()), 0.0625, epsilon = 1e-15);
    }

    /// Ellipse perimeter by the arithmetic-geometric mean, independent of any quadrature.
    fn ellipse_perimeter_agm(a: f64, b: f64) -> f64 {
        let (mut x, mut y) = (a, b);
        let mut sum = 0.5 * (a * a - b * b);
        let mut pow = 0.5;
        for _ in 0..40 {
            let c = 0.5 * (x - y);
            let (nx, ny) = (0.5 * (x + y), (x * y).sqrt());
            pow *= 2.0;
            sum += pow * c * c;
            x = nx;
            y = ny;
        }
        2.0 * PI * (a * a - sum) / x
    }

    #[test]
    fn two_to_one_ellipse() {
        let p = ellipse_perimeter_agm(2.0, 1.0);
        assert_relative_eq!(p, 9.688448220547675, max_relative = 1e-14);
        let expected = 2.0 * PI / (p * p);
        assert_relative_eq!(expected, 0.066938, epsilon = 1e-6);
        let quad = crate::quad::simpson(|t: f64| (4.0 * t.sin().powi(2) + t.cos().powi(2)).sqrt(), 0.0, 2.0 * PI, 1e-12).unwrap();
        assert_relative_eq!(quad, p, max_relative = 1e-10);
        let n = 4096;
        let e = PlanarJordanCurve::new((0..n).map(|k| {
            let t = 2.0 * PI * k as f64 / n as f64;
            [2.0 * t.cos(), t.sin()]
        }).collect()).unwrap();
        assert_relative_eq!(planar_iso_ratio(&e), expected, max_relative = 1e-6);
    }

    #[test]
    fn circle_is_chord_arc() {
        let r = check_chord_arc(&circle(512), 0.9, 2.0);
        assert!(r.pass);
    }

    #[test]
    fn narrow_barbell_fails_across_the_neck() {
        let c = barbell(1.0, 1.0, 0.005, 0.5, 512).unwrap();
        let r = check_chord_arc(&c, 0.9, 3.0);
        let w = r.witness.expect("barbell must fail");
        assert!(!r.pass);
        // the scan starts at the neck corner, whose first violating partner is on the far lobe
        assert_eq!(w.x, [-0.25, -0.005]);
        assert!(0.9 * w.l2 <= w.l1 && w.l1 <= w.l2 && w.l1 > 3.0 * w.chord);
        // the pair straight across the middle of the neck
        let v = c.vertices();
        let nearest = |y: f64| (0..v.len()).filter(|&i| v[i][1] == y).min_by(|&i, &j| v[i][0].abs().total_cmp(&v[j][0].abs())).unwrap();
        let (bottom, top) = (nearest(-0.005), nearest(0.005));
        assert!(dist(v[bottom], v[top]) < 0.05);
        let (a, total) = (c.cumulative()[top] - c.cumulative()[bottom], c.length());
        let l1 = a.min(total - a);
        assert!(0.9 * (total - l1) <= l1 && l1 > 3.0 * dist(v[bottom], v[top]));
    }

    #[test]
    fn large_lambda_always_passes() {
        let c = barbell(1.0, 0.7, 0.02, 1.0, 300).unwrap();
        let v = c.vertices();
        let mut min_chord = f64::INFINITY;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                min_chord = min_chord.min(dist(v[i], v[j]));
            }
        }
        assert!(check_chord_arc(&c, 0.1, c.length() / (2.0 * min_chord)).pass);
    }

    #[test]
    fn invalid_curves() {
        assert!(PlanarJordanCurve::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).is_err());
        let mut v: Vec<[f64; 2]> = circle(16).vertices().to_vec();
        v.reverse();
        assert!(PlanarJordanCurve::new(v).is_err());
        // figure eight
        let eight: Vec<[f64; 2]> = (0..32)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / 32.0;
                [t.sin(), (2.0 * t).sin()]
            })
            .collect();
        assert!(matches!(PlanarJordanCurve::new(eight), Err(Error::InvalidCurve(_))));
    }

    #[test]
    fn generators_emit_valid_curves() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for fam in CurveFamily::defaults().iter().chain([&CurveFamily::Circle]) {
            for _ in 0..50 {
                let c = fam.sample(&mut rng, 128).unwrap();
                assert!(planar_iso_ratio(&c) <= 1.0 / (4.0 * PI));
            }
        }
    }

    #[test]
    fn circles_pass_vacuously() {
        let r = verify_lemma31(&CurveFamily::Circle, 0.5, 3.0, 20, 1, 128).unwrap();
        assert_eq!(r.chord_arc_failures, 0);
        assert_eq!(r.tightest_margin, None);
    }

    #[test]
    fn report_serializes_with_required_keys() {
        let r = verify_lemma31(&CurveFamily::Barbell { min_neck: 0.005 }, 0.5, 3.0, 20, 2, 128).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        for k in ["checked", "failures", "tightest_margin"] {
            assert!(v.get(k).is_some());
        }
    }

    #[test]
    fn curves_round_trip_through_json() {
        let c = barbell(1.0, 0.8, 0.1, 0.3, 64).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        let back: PlanarJordanCurve = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<PlanarJordanCurve>("[[0,0],[1,0],[0,1]]").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn chord_arc_is_similarity_invariant(seed in 0u64..1000, scale in 0.01f64..100.0, angle in -PI..PI, tx in -10.0f64..10.0, ty in -10.0f64..10.0) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let fam = &CurveFamily::defaults()[(seed % 3) as usize];
            let c = fam.sample(&mut rng, 96).unwrap();
            let d = c.similar(scale, angle, [tx, ty]).unwrap();
            let (a, b) = (check_chord_arc(&c, 0.5, 3.0), check_chord_arc(&d, 0.5, 3.0));
            prop_assert_eq!(a.pass, b.pass);
            prop_assert_eq!(a.witness.map(|w| (w.i, w.j)), b.witness.map(|w| (w.i, w.j)));
            prop_assert!((planar_iso_ratio(&c) - planar_iso_ratio(&d)).abs() < 1e-12);
        }

        #[test]
        fn ratio_never_beats_the_disk(seed in 0u64..5000) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let fam = &CurveFamily::defaults()[(seed % 3) as usize];
            let c = fam.sample(&mut rng, 64).unwrap();
            prop_assert!(planar_iso_ratio(&c) <= 1.0 / (4.0 * PI) + 1e-12);
        }
    }
}
