//! One function per subcommand. Each writes its artifacts and returns a verdict
//! against the documented acceptance threshold.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use warpdisk::chordarc::verify_lemma31;
use warpdisk::density::{check_admissibility, DensityKind, QuadSpec};
use warpdisk::geometry::{clairaut_geodesic, cone_distance, distortion_estimate, grid_distance_oracle, PolarGrid, SurfacePoint};
use warpdisk::isoperimetry::{scan_alpha, scan_csv, OptimizerConfig};
use warpdisk::plateau::{fiber_region, minimize_energy, reference_map_energy, surgery_segment, DiskMesh, Shape};
use warpdisk::Error;

use crate::config::RunConfig;

const EUCLID: f64 = 1.0 / (4.0 * PI);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

/// Output directory; files are created on first write.
pub struct Out {
    dir: PathBuf,
}

impl Out {
    pub fn new(dir: PathBuf) -> Self {
        Self { dir }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn text(&self, name: &str, contents: &str) -> anyhow::Result<PathBuf> {
        fs::create_dir_all(&self.dir).with_context(|| format!("creating {}", self.dir.display()))?;
        let path = self.path(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> anyhow::Result<PathBuf> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.text(name, &s)
    }
}

pub fn density_check(cfg: &RunConfig, out: &Out) -> anyhow::Result<Verdict> {
    let f = cfg.density.build()?;
    let rep = check_admissibility(&f, cfg.density.grid(), cfg.density.tol)?;
    out.json("density_check.json", &json!({ "density": f, "report": rep }))?;
    let detail = format!(
        "(a) {} (b) {} (c) {}",
        pass_word(rep.cond_a.pass),
        pass_word(rep.cond_b.pass),
        pass_word(rep.cond_c.pass)
    );
    Ok(Verdict::new(rep.admissible(), detail))
}

fn pass_word(b: bool) -> &'static str {
    if b {
        "pass"
    } else {
        "fail"
    }
}

pub fn distance_table(cfg: &RunConfig, out: &Out) -> anyhow::Result<Verdict> {
    let f = cfg.density.build()?;
    let d = &cfg.distance;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut point = || SurfacePoint::new(rng.gen_range(0.0..=f.outer), rng.gen_range(-PI..PI));
    let pairs: Vec<(SurfacePoint, SurfacePoint)> = (0..d.pairs).map(|_| (point(), point())).collect();
    let beta = match f.kind {
        DensityKind::Cone { beta } => Some(beta),
        _ => None,
    };
    let grid = d.oracle_grid.map(|[n_r, n_t]| PolarGrid::new(n_r, n_t));
    let rows = pairs
        .par_iter()
        .map(|(p, q)| {
            let g = clairaut_geodesic(&f, p, q, d.tol)?;
            let upper = grid.map(|grid| grid_distance_oracle(&f, p, q, grid)).transpose()?;
            Ok((g, upper))
        })
        .collect::<Result<Vec<_>, Error>>()?;

    let mut csv = String::from("r1,theta1,r2,theta2,distance,kind,clairaut_c,residual");
    if beta.is_some() {
        csv.push_str(",cone_distance");
    }
    if grid.is_some() {
        csv.push_str(",grid_upper");
    }
    csv.push('\n');
    let (mut bounds, mut cone_err, mut above_grid) = (0usize, 0.0_f64, 0usize);
    for ((p, q), (g, upper)) in pairs.iter().zip(&rows) {
        let kind = serde_json::to_value(g.kind)?;
        let c = g.clairaut_c.map(|c| format!("{c:.15e}")).unwrap_or_default();
        write!(csv, "{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{},{c},{:.3e}", p.r, p.theta, q.r, q.theta, g.distance, kind.as_str().unwrap_or(""), g.residual)?;
        let slack = 1e-12 * (p.r + q.r).max(1.0);
        if g.distance < (p.r - q.r).abs() - slack || g.distance > p.r + q.r + slack {
            bounds += 1;
        }
        if let Some(beta) = beta {
            let y = cone_distance(beta, p, q);
            cone_err = cone_err.max((g.distance - y).abs());
            write!(csv, ",{y:.15e}")?;
        }
        if let Some(u) = upper {
            if g.distance > u + 1e-9 {
                above_grid += 1;
            }
            write!(csv, ",{u:.15e}")?;
        }
        csv.push('\n');
    }
    out.text("distance_table.csv", &csv)?;
    let mut detail = format!("{} pairs, {bounds} outside |r1 - r2| <= d <= r1 + r2", d.pairs);
    if beta.is_some() {
        write!(detail, ", max |d - cone| {cone_err:.2e} (limit 1e-6)")?;
    }
    if grid.is_some() {
        write!(detail, ", {above_grid} above the grid upper bound")?;
    }
    Ok(Verdict::new(bounds == 0 && cone_err <= 1e-6 && above_grid == 0, detail))
}

pub fn distortion(cfg: &RunConfig, out: &Out) -> anyhow::Result<Verdict> {
    let f = cfg.density.build()?;
    let c = &cfg.distortion;
    let rows = c.alphas.iter().map(|&a| distortion_estimate(&f, a, c.k, c.pairs, cfg.seed)).collect::<Result<Vec<_>, Error>>()?;
    let mut csv = String::from("alpha,beta,delta_hat,worst_r1,worst_theta1,worst_r2,worst_theta2\n");
    for r in &rows {
        let (p, q) = r.worst;
        writeln!(csv, "{:e},{:.12},{:.12e},{:.12},{:.12},{:.12},{:.12}", r.alpha, r.beta, r.delta, p.r, p.theta, q.r, q.theta)?;
    }
    out.text("distortion.csv", &csv)?;
    let deltas: Vec<f64> = rows.iter().map(|r| r.delta).collect();
    let decreasing = deltas.windows(2).all(|w| w[1] < w[0]);
    let last = deltas.last().copied().unwrap_or(f64::NAN);
    let detail = format!(
        "delta_hat {:?}, strictly decreasing {decreasing}, last {last:.4} (limit {})",
        deltas.iter().map(|d| format!("{d:.4}")).collect::<Vec<_>>(),
        c.max_delta
    );
    Ok(Verdict::new(decreasing && last < c.max_delta, detail))
}

pub fn iso_scan(cfg: &RunConfig, out: &Out) -> anyhow::Result<Verdict> {
    let f = cfg.density.build()?;
    let c = &cfg.iso;
    let opt = OptimizerConfig { seed: cfg.seed, ..c.optimizer.clone() };
    let rows = scan_alpha(&f, &c.alphas, &opt, c.mono_tol)?;
    out.text("iso_scan.csv", &scan_csv(&rows))?;
    out.json("iso_scan.json", &rows)?;
    let comparison = match f.kind {
        DensityKind::Flat => true,
        DensityKind::Cone { beta } => beta >= 2.0 * PI,
        _ => false,
    };
    let scaled: Vec<String> = rows.iter().map(|r| format!("{:.4}", r.c_hat / EUCLID)).collect();
    if comparison {
        let worst = rows.iter().map(|r| r.c_hat).fold(f64::NEG_INFINITY, f64::max);
        let detail = format!("C_hat * 4 pi {scaled:?}, max excess over 1/(4 pi) {:.2e} (limit {:e})", worst - EUCLID, c.upper_slack);
        Ok(Verdict::new(worst <= EUCLID + c.upper_slack, detail))
    } else {
        let monotone = rows.iter().all(|r| !r.flagged);
        let last = rows.last().map_or(f64::NAN, |r| r.c_hat);
        let gap = (last / EUCLID - 1.0).abs();
        let detail = format!("C_hat * 4 pi {scaled:?}, monotone {monotone}, last within {gap:.4} of 1/(4 pi) (limit {})", c.rel_tol);
        Ok(Verdict::new(monotone && gap <= c.rel_tol, detail))
    }
}

pub fn chordarc_verify(cfg: &RunConfig, out: &Out) -> anyhow::Result<Verdict> {
    let c = &cfg.chordarc;
    let mut reports = Vec::new();
    let mut violations = Vec::new();
    for (i, fam) in c.families.iter().enumerate() {
        match verify_lemma31(fam, c.delta, c.lambda, c.samples, cfg.seed.wrapping_add(i as u64), c.vertices) {
            Ok(r) => reports.push(r),
            Err(Error::Violation { ratio, threshold, curve }) => {
                let curve: serde_json::Value = serde_json::from_str(&curve).unwrap_or(serde_json::Value::String(curve));
                violations.push(json!({ "family": fam, "ratio": ratio, "threshold": threshold, "curve": curve }));
            }
            Err(e) => return Err(e.into()),
        }
    }
    out.json("chordarc_verify.json", &json!({ "reports": reports, "violations": violations }))?;
    let checked: usize = reports.iter().map(|r| r.checked).sum();
    let failing: usize = reports.iter().map(|r| r.chord_arc_failures).sum();
    let detail = format!("{checked} curves, {failing} not chord-arc, {} violation(s)", violations.len());
    Ok(Verdict::new(violations.is_empty(), detail))
}

fn mesh_for(h: f64, file: Option<&Path>) -> anyhow::Result<DiskMesh> {
    match file {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(DiskMesh::from_text(&text)?)
        }
        None => Ok(DiskMesh::rings(h)?),
    }
}

pub fn plateau_solve(cfg: &RunConfig, out: &Out) -> anyhow::Result<Verdict> {
    let c = &cfg.plateau;
    let e = c.set()?;
    let mesh = mesh_for(c.h, c.mesh.as_deref())?;
    let init = c.init.build(&mesh, c.k_chart)?;
    let rep = minimize_energy(&mesh, &e, &init, &c.solver)?;
    let fiber = fiber_region(&mesh, &rep.state, &e, c.threshold, c.raster)?;
    let reference = reference_map_energy(&e, QuadSpec::default())?;
    out.text("plateau_mesh.txt", &mesh.to_text())?;
    out.json("plateau_state.json", &rep.state)?;
    out.text("plateau_trace.csv", &rep.trace_csv())?;
    out.json(
        "plateau_report.json",
        &json!({
            "set": e,
            "reference_energy": reference,
            "energy": rep.energy,
            "centroid_energy": rep.centroid_energy,
            "initial": rep.initial,
            "centroid_initial": rep.centroid_initial,
            "iterations": rep.iterations,
            "converged": rep.converged,
            "stagnated": rep.stagnated,
            "fiber": fiber,
        }),
    )?;
    let gap = rep.centroid_energy.reshetnyak / reference - 1.0;
    let mut pass = gap.abs() <= c.energy_tol;
    let mut detail = format!("reshetnyak {:+.3}% of reference (limit {}%)", 100.0 * gap, 100.0 * c.energy_tol);
    match c.shape {
        Shape::Disk { radius } => {
            let target = PI * (radius / c.k_chart).powi(2);
            let area_gap = fiber.area / target - 1.0;
            pass &= area_gap.abs() <= c.area_tol && fiber.connected;
            write!(
                detail,
                ", fiber area {:+.1}% of {target:.4} (limit {}%), connected {}, inscribed radius {:.4}",
                100.0 * area_gap,
                100.0 * c.area_tol,
                fiber.connected,
                fiber.inscribed_radius
            )?;
        }
        Shape::Point => {
            pass &= fiber.area < c.point_area;
            write!(detail, ", fiber area {:.2e} (limit {:e})", fiber.area, c.point_area)?;
        }
        Shape::Segment { .. } => {}
    }
    Ok(Verdict::new(pass, detail))
}

pub fn surgery(cfg: &RunConfig, out: &Out) -> anyhow::Result<Verdict> {
    let c = &cfg.surgery;
    let e = c.set()?;
    let mesh = DiskMesh::rings(c.h)?;
    let s = surgery_segment(&e, &mesh, &c.theodorsen)?;
    let fiber = fiber_region(&mesh, &s.state, &e, c.threshold, c.raster)?;
    let reference = reference_map_energy(&e, QuadSpec::default())?;
    out.json("surgery_state.json", &s.state)?;
    out.json(
        "surgery_report.json",
        &json!({
            "set": e,
            "h": c.h,
            "reference_energy": reference,
            "energy": s.energy,
            "rho": s.rho,
            "scale": s.scale,
            "theodorsen_iterations": s.theodorsen_iterations,
            "boundary_residual": s.boundary_residual,
            "slit_vertices": s.slit_vertices,
            "fiber": fiber,
        }),
    )?;
    let gap = s.energy.reshetnyak / reference - 1.0;
    let pass = gap.abs() <= c.energy_tol && fiber.connected && fiber.inscribed_radius < c.max_inscribed;
    let detail = format!(
        "reshetnyak {:+.3}% of reference (limit {}%), fiber connected {}, inscribed radius {:.4} (limit {}), diameter {:.3}",
        100.0 * gap,
        100.0 * c.energy_tol,
        fiber.connected,
        fiber.inscribed_radius,
        c.max_inscribed,
        fiber.diameter
    );
    Ok(Verdict::new(pass, detail))
}

