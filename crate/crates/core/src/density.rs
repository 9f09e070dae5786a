//! Warping densities `f` of the surfaces `[0, R] x_f S^1`.
//!
//! A [`DensitySpec`] is a base profile (`kind`) together with an outer radius
//! and a scale `s`, read as `f(r) = base(s r) / s`. Rescaling by `alpha` only
//! multiplies the scale, so the rescaled densities `f_alpha` keep the closed
//! forms of their base kind.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

/// Base profile of a density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DensityKind {
    /// `f(r) = r`, the Euclidean disk.
    Flat,
    /// `f(r) = r log(1/r)`.
    LogE0,
    /// `f(r) = r log(1/r) (1 + log(1/r))`.
    LogLogE1,
    /// Euclidean cone over a circle of length `beta`: `f(r) = beta r / (2 pi)`.
    Cone { beta: f64 },
    /// Piecewise-linear interpolation of `(r, f(r))` samples.
    Table { samples: Vec<(f64, f64)> },
}

/// A warping density on `[0, R]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySpec {
    #[serde(flatten)]
    pub kind: DensityKind,
    /// Outer radius `R`.
    #[serde(rename = "R")]
    pub outer: f64,
    /// Rescaling factor; `1` for an unscaled density.
    #[serde(default = "unit_scale")]
    pub scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

/// Largest outer radius for which `LogLogE1` is admissible, `e^{-(1+sqrt 5)/2}`.
pub fn loglog_e1_outer() -> f64 {
    (-(1.0 + 5f64.sqrt()) / 2.0).exp()
}

impl DensitySpec {
    pub fn flat(outer: f64) -> Self {
        Self { kind: DensityKind::Flat, outer, scale: 1.0 }
    }

    /// `r log(1/r)` on `[0, 1/e]`.
    pub fn log_e0() -> Self {
        Self { kind: DensityKind::LogE0, outer: 1.0 / E, scale: 1.0 }
    }

    /// `r log(1/r)(1 + log(1/r))` on `[0, e^{-(1+sqrt 5)/2}]`.
    pub fn loglog_e1() -> Self {
        Self { kind: DensityKind::LogLogE1, outer: loglog_e1_outer(), scale: 1.0 }
    }

    pub fn cone(beta: f64, outer: f64) -> Self {
        Self { kind: DensityKind::Cone { beta }, outer, scale: 1.0 }
    }

    pub fn table(samples: Vec<(f64, f64)>) -> Result<Self> {
        let outer = samples.last().map(|s| s.0).unwrap_or(0.0);
        let spec = Self { kind: DensityKind::Table { samples }, outer, scale: 1.0 };
        spec.validate()?;
        Ok(spec)
    }

    /// Tabulates `g` on `points` log-uniform radii spanning `decades` below `outer`, plus `r = 0`.
    pub fn tabulate<G: Fn(f64) -> f64>(g: G, outer: f64, points: usize, decades: f64) -> Result<Self> {
        let mut samples = vec![(0.0, g(0.0))];
        for i in 0..points {
            let t = i as f64 / (points - 1) as f64;
            let r = outer * 10f64.powf(-decades * (1.0 - t));
            samples.push((r, g(r)));
        }
        Self::table(samples)
    }

    /// Checks the structural invariants of the spec.
    pub fn validate(&self) -> Result<()> {
        if !(self.outer > 0.0 && self.outer.is_finite()) {
            return Err(Error::Parameter(format!("outer radius must be positive, got {}", self.outer)));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::Parameter(format!("scale must be positive, got {}", self.scale)));
        }
        let reach = self.outer * self.scale;
        match &self.kind {
            DensityKind::Flat => {}
            DensityKind::LogE0 => {
                if reach > 1.0 / E * (1.0 + 1e-12) {
                    return Err(Error::Parameter("log-e0 requires R <= 1/e".into()));
                }
            }
            DensityKind::LogLogE1 => {
                if reach > loglog_e1_outer() * (1.0 + 1e-12) {
                    return Err(Error::Parameter("loglog-e1 requires R <= e^{-(1+sqrt 5)/2}".into()));
                }
            }
            DensityKind::Cone { beta } => {
                if !(*beta > 0.0) {
                    return Err(Error::Parameter(format!("cone angle must be positive, got {beta}")));
                }
            }
            DensityKind::Table { samples } => {
                if samples.len() < 2 {
                    return Err(Error::Parameter("table needs at least two samples".into()));
                }
                if samples[0] != (0.0, 0.0) {
                    return Err(Error::Parameter("table must start at (0, 0)".into()));
                }
                if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                    return Err(Error::Parameter("table radii must be strictly increasing".into()));
                }
                if samples.iter().any(|s| !s.1.is_finite()) {
                    return Err(Error::Parameter("table values must be finite".into()));
                }
                let last = samples[samples.len() - 1].0;
                if reach > last * (1.0 + 1e-12) {
                    return Err(Error::Parameter(format!("table ends at {last}, below R = {reach}")));
                }
            }
        }
        Ok(())
    }

    fn check_domain(&self, r: f64) -> Result<()> {
        if !(r >= 0.0 && r <= self.outer * (1.0 + 1e-12)) {
            return Err(Error::Domain { r, outer: self.outer });
        }
        Ok(())
    }

    /// `f(r)` with a domain check.
    pub fn eval(&self, r: f64) -> Result<f64> {
        self.check_domain(r)?;
        let v = self.value(r);
        if !v.is_finite() {
            return Err(Error::Evaluation { r, value: v });
        }
        Ok(v)
    }

    /// `f(r)` without a domain check, for inner loops that already respect `[0, R]`.
    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let s = self.scale;
        match &self.kind {
            DensityKind::Flat => r,
            DensityKind::Cone { beta } => beta * r / (2.0 * PI),
            DensityKind::LogE0 => r * -(s * r).ln(),
            DensityKind::LogLogE1 => {
                let l = -(s * r).ln();
                r * l * (1.0 + l)
            }
            DensityKind::Table { samples } => interpolate(samples, s * r) / s,
        }
    }

    /// Closed-form primitive `F(r) = int_0^r f(s) ds`.
    pub fn primitive(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let s = self.scale;
        match &self.kind {
            DensityKind::Flat => 0.5 * r * r,
            DensityKind::Cone { beta } => beta * r * r / (4.0 * PI),
            DensityKind::LogE0 => {
                let x = s * r;
                let l = -x.ln();
                (0.25 * x * x + 0.5 * x * x * l) / (s * s)
            }
            DensityKind::LogLogE1 => {
                let x = s * r;
                let l = -x.ln();
                x * x * (0.5 * l * l + l + 0.5) / (s * s)
            }
            DensityKind::Table { samples } => table_primitive(samples, s * r) / (s * s),
        }
    }

    /// Radius at which `f` reaches `c` (bisection; `f` increasing).
    pub fn inverse(&self, c: f64) -> f64 {
        if c <= 0.0 {
            return 0.0;
        }
        if let DensityKind::Flat = self.kind {
            return c.min(self.outer);
        }
        if let DensityKind::Cone { beta } = self.kind {
            return (2.0 * PI * c / beta).min(self.outer);
        }
        let (mut lo, mut hi) = (0.0, self.outer);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.value(mid) < c {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-16 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// True for kinds whose scale is irrelevant.
    fn scale_free(&self) -> bool {
        matches!(self.kind, DensityKind::Flat | DensityKind::Cone { .. })
    }
}

fn interpolate(samples: &[(f64, f64)], x: f64) -> f64 {
    let idx = samples.partition_point(|s| s.0 <= x);
    if idx == 0 {
        return samples[0].1;
    }
    if idx >= samples.len() {
        return samples[samples.len() - 1].1;
    }
    let (r0, f0) = samples[idx - 1];
    let (r1, f1) = samples[idx];
    f0 + (f1 - f0) * (x - r0) / (r1 - r0)
}

fn table_primitive(samples: &[(f64, f64)], x: f64) -> f64 {
    let mut acc = 0.0;
    for w in samples.windows(2) {
        let (r0, f0) = w[0];
        let (r1, f1) = w[1];
        if x <= r0 {
            break;
        }
        let hi = x.min(r1);
        let fh = f0 + (f1 - f0) * (hi - r0) / (r1 - r0);
        acc += 0.5 * (f0 + fh) * (hi - r0);
    }
    acc
}

/// `f(r)`, failing outside `[0, R]`.
pub fn eval_density(f: &DensitySpec, r: f64) -> Result<f64> {
    f.eval(r)
}

/// Length of the circle `S(o, r)`, `2 pi f(r)`.
pub fn circle_length(f: &DensitySpec, r: f64) -> Result<f64> {
    Ok(2.0 * PI * f.eval(r)?)
}

/// Tolerances for [`ball_area`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self { abs_tol: 1e-10, rel_tol: 1e-11 }
    }
}

/// Area of the closed ball `B(o, r)`, `2 pi int_0^r f`.
///
/// Flat and cone densities use their closed forms; every other kind goes
/// through adaptive Simpson with the first decade `[0, r/10]` split off.
pub fn ball_area(f: &DensitySpec, r: f64, quad: QuadSpec) -> Result<f64> {
    f.check_domain(r)?;
    if r == 0.0 {
        return Ok(0.0);
    }
    match f.kind {
        DensityKind::Flat => return Ok(PI * r * r),
        DensityKind::Cone { beta } => return Ok(0.5 * beta * r * r),
        _ => {}
    }
    // int_0^r f <= r f(r) for increasing f; use it to scale the tolerance.
    let bound = (r * f.value(r)).max(f64::MIN_POSITIVE);
    let tol = quad.abs_tol.min(quad.rel_tol * bound);
    let g = |s: f64| f.value(s);
    let split = 0.1 * r;
    let head = quad::simpson(g, 0.0, split, 0.5 * tol)?;
    let tail = quad::simpson(g, split, r, 0.5 * tol)?;
    Ok(2.0 * PI * (head + tail))
}

/// Rescaled density `f_alpha(r) = f(alpha r) / alpha` on `[0, 1]`.
pub fn rescale(f: &DensitySpec, alpha: f64) -> Result<DensitySpec> {
    if !(alpha > 0.0 && alpha < f.outer) {
        return Err(Error::Parameter(format!("rescale needs 0 < alpha < R = {}, got {alpha}", f.outer)));
    }
    let scale = if f.scale_free() { 1.0 } else { f.scale * alpha };
    Ok(DensitySpec { kind: f.kind.clone(), outer: 1.0, scale })
}

/// Angle `beta = 2 pi f(alpha) / alpha` of the comparison cone at scale `alpha`.
pub fn cone_angle(f: &DensitySpec, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= f.outer * (1.0 + 1e-12)) {
        return Err(Error::Parameter(format!("cone angle needs 0 < alpha <= R, got {alpha}")));
    }
    Ok(2.0 * PI * f.value(alpha) / alpha)
}

/// Log-uniform radii grid on `(0, R]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub points: usize,
    pub decades: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { points: 400, decades: 12.0 }
    }
}

impl GridSpec {
    pub fn radii(&self, outer: f64) -> Vec<f64> {
        let n = self.points.max(2);
        (0..n)
            .map(|i| outer * 10f64.powf(-self.decades * (1.0 - i as f64 / (n - 1) as f64)))
            .collect()
    }
}

/// Outcome of one admissibility condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult<W> {
    pub pass: bool,
    pub witness: Option<W>,
}

/// Witness for a violation of the asymptotic cone condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeWitness {
    pub alpha: f64,
    pub r: f64,
    /// `f(alpha r) / (r f(alpha))`.
    pub ratio: f64,
}

/// Sup-defect of the cone condition at one scale and one compact `[k, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefectSample {
    pub alpha: f64,
    pub k: f64,
    pub defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    /// Increasing with `f(0) = 0`; witness is a non-increasing radius pair.
    pub cond_a: ConditionResult<(f64, f64)>,
    /// `f(r) >= r`; witness is a radius where it fails.
    pub cond_b: ConditionResult<f64>,
    /// `f(alpha r) / (r f(alpha)) -> 1` uniformly on compacts.
    pub cond_c: ConditionResult<ConeWitness>,
    pub defects: Vec<DefectSample>,
    pub grid: GridSpec,
    pub tol: f64,
}

impl AdmissibilityReport {
    pub fn admissible(&self) -> bool {
        self.cond_a.pass && self.cond_b.pass && self.cond_c.pass
    }
}

/// Scales at which the cone condition is sampled: `10^{-1}, 10^{-2}, 10^{-4}, ..., 10^{-256}`.
///
/// The defect of logarithmic densities decays like `1/log(1/alpha)`, so the
/// exponent doubles at every step.
pub fn cone_condition_scales() -> Vec<f64> {
    let mut out = vec![1e-1];
    let mut e = 1;
    while e < 256 {
        e *= 2;
        out.push(10f64.powi(-e));
    }
    out
}

/// Compacts `[k, 1]` on which the cone condition is sampled.
pub const CONE_CONDITION_CUTOFFS: [f64; 2] = [0.1, 0.5];

/// Checks the three admissibility conditions on a log-uniform grid.
pub fn check_admissibility(f: &DensitySpec, grid: GridSpec, tol: f64) -> Result<AdmissibilityReport> {
    if !(tol > 0.0) {
        return Err(Error::Parameter("tolerance must be positive".into()));
    }
    let radii = grid.radii(f.outer);
    let mut values = Vec::with_capacity(radii.len());
    for &r in &radii {
        values.push(f.eval(r)?);
    }
    let f0 = f.eval(0.0)?;

    let mut cond_a = ConditionResult { pass: f0 == 0.0, witness: None };
    if f0 != 0.0 {
        cond_a.witness = Some((0.0, 0.0));
    }
    if cond_a.pass {
        if let Some(i) = (1..radii.len()).find(|&i| values[i] <= values[i - 1]) {
            cond_a = ConditionResult { pass: false, witness: Some((radii[i - 1], radii[i])) };
        }
    }

    let cond_b = match radii.iter().zip(&values).find(|(&r, &v)| v < r - tol * r) {
        Some((&r, _)) => ConditionResult { pass: false, witness: Some(r) },
        None => ConditionResult { pass: true, witness: None },
    };

    let scales: Vec<f64> = cone_condition_scales().into_iter().filter(|&a| a < f.outer).collect();
    let mut defects = Vec::new();
    let mut pass_c = !scales.is_empty();
    let mut witness = None;
    for &k in &CONE_CONDITION_CUTOFFS {
        let rs: Vec<f64> = (0..=64).map(|i| k + (1.0 - k) * i as f64 / 64.0).collect();
        let mut previous = f64::INFINITY;
        let mut worst_last = None;
        for &alpha in &scales {
            let fa = f.value(alpha);
            let mut sup = 0.0_f64;
            let mut at = ConeWitness { alpha, r: 1.0, ratio: 1.0 };
            for &r in &rs {
                let ratio = f.value(alpha * r) / (r * fa);
                if !ratio.is_finite() {
                    return Err(Error::Evaluation { r: alpha * r, value: ratio });
                }
                if (ratio - 1.0).abs() > sup {
                    sup = (ratio - 1.0).abs();
                    at = ConeWitness { alpha, r, ratio };
                }
            }
            defects.push(DefectSample { alpha, k, defect: sup });
            if sup > previous * (1.0 + 1e-9) + 1e-12 {
                pass_c = false;
                witness.get_or_insert(at);
            }
            previous = sup;
            worst_last = Some((sup, at));
        }
        if let Some((sup, at)) = worst_last {
            if sup >= tol {
                pass_c = false;
                witness.get_or_insert(at);
            }
        }
    }
    let cond_c = ConditionResult { pass: pass_c, witness: if pass_c { None } else { witness } };
    Ok(AdmissibilityReport { cond_a, cond_b, cond_c, defects, grid, tol })
}

/// Failure of one of the ball/circle estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GeoestViolation {
    /// `|B(o, r)| > r l(S(o, r))`.
    Sector { r: f64, area: f64, bound: f64 },
    /// `2 pi r > l(S(o, r))`.
    Circle { r: f64, length: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoestReport {
    pub violations: Vec<GeoestViolation>,
    /// Smallest `C` with `l(S(o, r)) <= C l(S(o, r/2))` over the grid.
    pub doubling_constant: f64,
}

impl GeoestReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Evaluates the ball and circle estimates of an admissible density on `r_grid`.
pub fn geoest_check(f: &DensitySpec, r_grid: &[f64]) -> Result<GeoestReport> {
    let mut violations = Vec::new();
    let mut doubling = 0.0_f64;
    for &r in r_grid {
        if !(r > 0.0 && r < f.outer) {
            return Err(Error::Domain { r, outer: f.outer });
        }
        let length = circle_length(f, r)?;
        let area = 2.0 * PI * f.primitive(r);
        if area > r * length * (1.0 + 1e-12) {
            violations.push(GeoestViolation::Sector { r, area, bound: r * length });
        }
        if 2.0 * PI * r > length * (1.0 + 1e-12) {
            violations.push(GeoestViolation::Circle { r, length });
        }
        doubling = doubling.max(length / circle_length(f, 0.5 * r)?);
    }
    Ok(GeoestReport { violations, doubling_constant: doubling })
}
