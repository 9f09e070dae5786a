//! Candidate isoperimetric regions in rescaled surfaces and lower bounds for `C_alpha`.
//!
//! Regions are either symmetrized radial profiles or geodesic balls. The best
//! ratio found is a certified lower bound for the isoperimetric constant of the
//! unit ball of `f_alpha`, relative to the documented search family.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

mod ball;
mod profile;
pub mod simplex;

pub use ball::{geodesic_ball_candidate, BallGrid};
pub use profile::{
    annulus_diagnostics, near_origin_diagnostics, profile_measures, AnnulusDiagnostics, AnnulusRecord, Interp, Measures,
    NearOrigin, RadialProfile,
};

use crate::density::{cone_angle, rescale, DensitySpec};
use crate::error::{Error, Result};
use crate::geometry::SurfacePoint;

/// Search family that produced a candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// `rbar = const`, a ball about the vertex.
    ConstantProfile,
    /// `rbar = s cos(theta beta_s / 2pi)`, a disk with the vertex on its boundary in the tangent cone.
    VertexDisk,
    /// Simplex-optimised monotone profile.
    Profile,
    GeodesicBall,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::ConstantProfile => "constant-profile",
            Family::VertexDisk => "vertex-disk",
            Family::Profile => "profile",
            Family::GeodesicBall => "geodesic-ball",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Candidate {
    Profile(RadialProfile),
    Ball { center: SurfacePoint, radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoReport {
    pub area: f64,
    pub boundary_length: f64,
    pub ratio: f64,
    pub alpha: f64,
    pub family: Family,
    pub candidate: Candidate,
    /// The region meets the outer boundary `r = 1`.
    pub clipped: bool,
    /// The winning simplex run hit its iteration cap before its tolerance.
    pub stagnated: bool,
}

impl IsoReport {
    fn from_profile(m: Measures, prof: RadialProfile, family: Family) -> Self {
        IsoReport {
            area: m.area,
            boundary_length: m.boundary_length,
            ratio: m.ratio,
            alpha: prof.alpha,
            family,
            candidate: Candidate::Profile(prof),
            clipped: false,
            stagnated: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    /// Profile half-resolution.
    pub m: usize,
    pub restarts: usize,
    pub max_iter: usize,
    /// Simplex stopping tolerance on the ratio.
    pub tol: f64,
    /// Number of levels in the constant and vertex-disk scans.
    pub s_grid: usize,
    /// Ball centres `(r_c, 0)`.
    pub ball_centers: Vec<f64>,
    /// Ball radii as fractions of `r_c`; a fraction of 1 puts the vertex on the sphere.
    pub ball_fractions: Vec<f64>,
    pub ball_grid: BallGrid,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            m: 64,
            restarts: 8,
            max_iter: 2000,
            tol: 1e-9,
            s_grid: 32,
            ball_centers: vec![0.25, 0.4, 0.5],
            ball_fractions: vec![0.5, 0.8, 1.0],
            ball_grid: BallGrid::default(),
            seed: 0x5eed,
        }
    }
}

/// Clamps into `[0, 1]` and enforces monotonicity by a running minimum.
fn project(x: &[f64]) -> Vec<f64> {
    let mut run = 1.0f64;
    x.iter()
        .map(|&v| {
            run = run.min(v.clamp(0.0, 1.0));
            run
        })
        .collect()
}

fn profile_report(fa: &DensitySpec, prof: RadialProfile, family: Family) -> Option<IsoReport> {
    profile_measures(fa, &prof).ok().map(|m| IsoReport::from_profile(m, prof, family))
}

fn better(a: IsoReport, b: IsoReport) -> IsoReport {
    if b.ratio > a.ratio {
        b
    } else {
        a
    }
}

/// Vertex-touching disk of diameter `s` in the tangent cone at scale `s`.
pub fn vertex_disk_profile(fa: &DensitySpec, alpha: f64, s: f64, m: usize) -> RadialProfile {
    let beta = 2.0 * PI * fa.value(s) / s;
    RadialProfile::from_fn(alpha, m, |t| {
        let phi = t * beta / (2.0 * PI);
        if phi < PI / 2.0 {
            s * phi.cos()
        } else {
            0.0
        }
    })
}

/// Best ratio over the documented search families for `rescale(f, alpha)`.
pub fn maximize_ratio(f: &DensitySpec, alpha: f64, cfg: &OptimizerConfig) -> Result<IsoReport> {
    if cfg.m < 2 || cfg.s_grid < 1 {
        return Err(Error::Parameter("optimizer needs m >= 2 and a nonempty s-grid".into()));
    }
    let fa = if alpha == 1.0 && f.outer == 1.0 { f.clone() } else { rescale(f, alpha)? };
    let levels: Vec<f64> = (1..=cfg.s_grid).map(|i| i as f64 / cfg.s_grid as f64).collect();

    let constant = levels
        .iter()
        .filter_map(|&s| profile_report(&fa, RadialProfile::constant(alpha, s, cfg.m), Family::ConstantProfile))
        .reduce(better)
        .ok_or_else(|| Error::ZeroRegion("no constant profile has positive length".into()))?;
    let disks: Vec<IsoReport> = levels
        .iter()
        .filter_map(|&s| profile_report(&fa, vertex_disk_profile(&fa, alpha, s, cfg.m), Family::VertexDisk))
        .collect();
    let mut best = constant.clone();
    for d in &disks {
        best = better(best, d.clone());
    }

    // starts: best constant, best vertex disk, then seeded perturbations of either
    let mut starts: Vec<Vec<f64>> = vec![];
    if let Candidate::Profile(p) = &constant.candidate {
        starts.push(p.rbar.clone());
    }
    if let Some(Candidate::Profile(p)) = disks.iter().cloned().reduce(better).map(|r| r.candidate) {
        starts.push(p.rbar.clone());
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    while starts.len() < cfg.restarts.max(1) {
        let base = starts[rng.gen_range(0..starts.len().min(2))].clone();
        let amp = rng.gen_range(0.02..0.2);
        let x: Vec<f64> = base.iter().map(|&v| v * (1.0 + amp * rng.gen_range(-1.0..1.0))).collect();
        starts.push(project(&x));
    }
    starts.truncate(cfg.restarts.max(1));

    let runs: Vec<(IsoReport, bool)> = starts
        .par_iter()
        .filter_map(|x0| {
            let objective = |x: &[f64]| {
                let prof = RadialProfile { alpha, rbar: project(x), interp: Interp::Linear };
                profile_measures(&fa, &prof).map(|m| -m.ratio).unwrap_or(0.0)
            };
            let res = simplex::minimize(objective, x0, 0.05, cfg.tol, cfg.max_iter);
            let prof = RadialProfile { alpha, rbar: project(&res.x), interp: Interp::Linear };
            profile_report(&fa, prof, Family::Profile).map(|r| (r, !res.converged))
        })
        .collect();
    for (r, stagnated) in runs {
        if r.ratio > best.ratio {
            best = IsoReport { stagnated, ..r };
        }
    }

    let balls: Vec<(f64, f64)> = cfg
        .ball_centers
        .iter()
        .flat_map(|&c| cfg.ball_fractions.iter().map(move |&q| (c, q * c)))
        .filter(|&(c, s)| c > 0.0 && s > 0.0 && c + s <= 1.0)
        .collect();
    let ball_reports: Vec<IsoReport> = balls
        .par_iter()
        .map(|&(c, s)| geodesic_ball_candidate(&fa, &SurfacePoint::new(c, 0.0), s, cfg.ball_grid).map(|r| IsoReport { alpha, ..r }))
        .collect::<Result<_>>()?;
    for r in ball_reports {
        best = better(best, r);
    }
    Ok(best)
}

/// One row of an alpha scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub alpha: f64,
    pub beta: f64,
    pub c_hat: f64,
    pub family: Family,
    pub area: f64,
    pub length: f64,
    /// `C_ref / ratio - 1` with `C_ref` the largest `c_hat` of the scan.
    pub epsilon_hat: f64,
    pub seed: u64,
    /// Some larger alpha has a smaller `c_hat` by more than the monotonicity tolerance.
    pub flagged: bool,
    pub report: IsoReport,
}

/// Seed of row `i` derived from the root seed.
pub fn row_seed(root: u64, i: usize) -> u64 {
    let mut z = root.wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(i as u64 + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Runs [`maximize_ratio`] for each alpha (strictly decreasing) and flags rows
/// that break monotonicity `C_{alpha_i} <= C_{alpha_j} + mono_tol` for `alpha_i < alpha_j`.
pub fn scan_alpha(f: &DensitySpec, alphas: &[f64], cfg: &OptimizerConfig, mono_tol: f64) -> Result<Vec<ScanRow>> {
    if alphas.is_empty() || alphas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Parameter("alphas must be a nonempty strictly decreasing list".into()));
    }
    let reports: Vec<(IsoReport, f64, u64)> = alphas
        .par_iter()
        .enumerate()
        .map(|(i, &alpha)| {
            let seed = row_seed(cfg.seed, i);
            let row_cfg = OptimizerConfig { seed, ..cfg.clone() };
            let rep = maximize_ratio(f, alpha, &row_cfg)?;
            Ok((rep, cone_angle(f, alpha)?, seed))
        })
        .collect::<Result<_>>()?;
    let c_ref = reports.iter().map(|r| r.0.ratio).fold(f64::NEG_INFINITY, f64::max);
    let rows = reports
        .iter()
        .enumerate()
        .map(|(i, (rep, beta, seed))| {
            let flagged = reports[..i].iter().any(|(larger, _, _)| rep.ratio > larger.ratio + mono_tol);
            ScanRow {
                alpha: rep.alpha,
                beta: *beta,
                c_hat: rep.ratio,
                family: rep.family,
                area: rep.area,
                length: rep.boundary_length,
                epsilon_hat: c_ref / rep.ratio - 1.0,
                seed: *seed,
                flagged,
                report: rep.clone(),
            }
        })
        .collect();
    Ok(rows)
}

/// CSV with columns `alpha,beta,C_hat,family,area,length,epsilon_hat,seed`.
pub fn scan_csv(rows: &[ScanRow]) -> String {
    let mut out = String::from("alpha,beta,C_hat,family,area,length,epsilon_hat,seed\n");
    for r in rows {
        out.push_str(&format!(
            "{:e},{:.12},{:.12},{},{:.12e},{:.12e},{:.12e},{}\n",
            r.alpha,
            r.beta,
            r.c_hat,
            r.family.as_str(),
            r.area,
            r.length,
            r.epsilon_hat,
            r.seed
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const EUCLID: f64 = 1.0 / (4.0 * PI);

    fn quick() -> OptimizerConfig {
        OptimizerConfig { m: 16, restarts: 3, max_iter: 300, s_grid: 8, ball_grid: BallGrid { n_r: 24, n_theta: 24 }, ..Default::default() }
    }

    #[test]
    fn flat_optimum_is_euclidean() {
        let rep = maximize_ratio(&DensitySpec::flat(1.0), 0.1, &quick()).unwrap();
        assert!((rep.ratio - EUCLID).abs() < 1e-4, "{}", rep.ratio);
        assert!(rep.ratio <= EUCLID + 1e-12);
    }

    #[test]
    fn never_loses_to_constant_profiles() {
        let f = DensitySpec::log_e0();
        let cfg = quick();
        let rep = maximize_ratio(&f, 1e-2, &cfg).unwrap();
        let fa = rescale(&f, 1e-2).unwrap();
        for i in 1..=cfg.s_grid {
            let s = i as f64 / cfg.s_grid as f64;
            let m = profile_measures(&fa, &RadialProfile::constant(1e-2, s, cfg.m)).unwrap();
            assert!(rep.ratio >= m.ratio);
        }
    }

    #[test]
    fn scale_invariance_of_ratio() {
        let f = DensitySpec::log_e0();
        let alpha = 0.05;
        let fa = rescale(&f, alpha).unwrap();
        let prof = RadialProfile::from_fn(alpha, 32, |t| 0.8 - 0.5 * t / PI);
        let small = profile_measures(&fa, &prof).unwrap();
        let unscaled = RadialProfile { alpha: 1.0, rbar: prof.rbar.iter().map(|r| alpha * r).collect(), interp: Interp::Linear };
        let big = profile_measures(&f, &unscaled).unwrap();
        assert_relative_eq!(big.area, alpha * alpha * small.area, max_relative = 1e-9);
        assert_relative_eq!(big.boundary_length, alpha * small.boundary_length, max_relative = 1e-9);
        assert_relative_eq!(big.ratio, small.ratio, max_relative = 1e-9);
    }

    #[test]
    fn scan_rejects_unsorted_alphas() {
        assert!(scan_alpha(&DensitySpec::flat(1.0), &[0.1, 0.2], &quick(), 1e-3).is_err());
    }

    #[test]
    fn scan_flat_constant_column_and_csv() {
        let rows = scan_alpha(&DensitySpec::flat(1.0), &[0.5, 0.1], &quick(), 1e-3).unwrap();
        for r in &rows {
            assert!((r.c_hat - EUCLID).abs() < 1e-4);
            assert!(!r.flagged);
            assert_relative_eq!(r.beta, 2.0 * PI, epsilon = 1e-12);
        }
        assert_ne!(rows[0].seed, rows[1].seed);
        let csv = scan_csv(&rows);
        assert!(csv.starts_with("alpha,beta,C_hat,family,area,length,epsilon_hat,seed\n"));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn projection_is_monotone_and_clamped() {
        assert_eq!(project(&[1.5, 0.4, 0.6, -0.1, 0.2]), vec![1.0, 0.4, 0.4, 0.0, 0.0]);
    }
}
