//! `warpdisk`: command-line driver for the warped-disk experiments.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use commands::{Out, Verdict};
use config::{ConfigError, Kind, RunConfig};
use warpdisk::plateau::{InitialMap, Shape};

/// Numerical experiments on singular warped-product disks.
///
/// Settings are resolved from built-in defaults, then the `--config` TOML
/// file, then command-line flags. The resolved configuration is echoed to
/// stderr and written next to the outputs as `<command>.config.toml`.
///
/// Exit status: 0 on success, 1 when `--assert` is given and the threshold
/// documented for the subcommand is missed (or the run itself fails), 2 on a
/// configuration error.
#[derive(Debug, Parser)]
#[command(name = "warpdisk", version)]
struct Cli {
    /// TOML configuration with sections [density], [distance], [distortion], [iso], [chordarc], [plateau], [surgery].
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output directory [default: $WARPDISK_OUT, else the config's `out`, else .].
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads [default: logical cores].
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Exit with status 1 when the subcommand's threshold is missed.
    #[arg(long, global = true)]
    assert: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Default)]
struct DensityArgs {
    #[arg(long, value_enum)]
    kind: Option<Kind>,
    /// Cone angle for `--kind cone`.
    #[arg(long)]
    beta: Option<f64>,
    /// Outer radius R.
    #[arg(long)]
    outer: Option<f64>,
    /// Two-column `r,f` file for `--kind table`.
    #[arg(long, value_name = "FILE")]
    table: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Admissibility checks (a) monotone with f(0) = 0, (b) f(r) >= r, (c) asymptotic cone condition.
    ///
    /// Writes density_check.json. Assert: all three conditions pass.
    DensityCheck {
        #[command(flatten)]
        density: DensityArgs,
        /// Relative tolerance of the checks.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Geodesic distances between seeded random point pairs.
    ///
    /// Writes distance_table.csv. Assert: |r1 - r2| <= d <= r1 + r2 for every pair;
    /// for cones |d - cone_distance| <= 1e-6; with --grid, d never exceeds the grid upper bound by more than 1e-9.
    DistanceTable {
        #[command(flatten)]
        density: DensityArgs,
        #[arg(long)]
        pairs: Option<usize>,
        /// Polar grid for the upper-bound column.
        #[arg(long, num_args = 2, value_names = ["N_R", "N_THETA"])]
        grid: Option<Vec<usize>>,
    },
    /// Bi-Lipschitz distortion between rescaled surfaces and their comparison cones.
    ///
    /// Writes distortion.csv. Assert: delta_hat strictly decreasing along the alphas and below --max-delta (default 0.05) at the last one.
    Distortion {
        #[command(flatten)]
        density: DensityArgs,
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
        /// Inner cutoff of the sampled annulus k <= r <= 1.
        #[arg(long)]
        k: Option<f64>,
        #[arg(long)]
        pairs: Option<usize>,
        #[arg(long)]
        max_delta: Option<f64>,
    },
    /// Isoperimetric constants C_alpha over a decreasing list of scales.
    ///
    /// Writes iso_scan.csv and iso_scan.json. Assert: for flat densities and cones with beta >= 2 pi,
    /// every C_hat <= 1/(4 pi) + 1e-4; otherwise C_hat nondecreasing in alpha within --mono-tol (default 1e-3)
    /// and the last C_hat within 10% of 1/(4 pi).
    IsoScan {
        #[command(flatten)]
        density: DensityArgs,
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
        #[arg(long)]
        mono_tol: Option<f64>,
    },
    /// Random planar curves: non-chord-arc curves must stay below the isoperimetric threshold.
    ///
    /// Writes chordarc_verify.json. Assert: zero violations over all families.
    ChordarcVerify {
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        /// Curves per family.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        vertices: Option<usize>,
    },
    /// Discrete energy minimization into the chart of a collapsed set.
    ///
    /// Writes plateau_mesh.txt, plateau_state.json, plateau_trace.csv and plateau_report.json.
    /// Assert: final Reshetnyak energy within 2% of the reference energy; for a disk, fiber area within 20% of
    /// pi (radius / K)^2 and fiber connected; for a point, fiber area below 1e-2.
    PlateauSolve {
        #[arg(long, value_enum)]
        shape: Option<ShapeArg>,
        /// Radius for `--shape disk`.
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        k_chart: Option<f64>,
        /// Mesh size.
        #[arg(long)]
        h: Option<f64>,
        /// Mesh file in the text format of plateau_mesh.txt.
        #[arg(long, value_name = "FILE")]
        mesh: Option<PathBuf>,
        /// Initial map; `distorted` takes --gamma, `mobius` takes --mobius-a.
        #[arg(long, value_enum)]
        init: Option<InitArg>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        mobius_a: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        /// Relative energy decrease at which the solver stops.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Conformal surgery turning the disk fiber into a slit.
    ///
    /// Writes surgery_state.json and surgery_report.json. Assert: Reshetnyak energy within 1% of the reference
    /// energy, fiber connected, fiber inscribed radius below 0.02.
    Surgery {
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        k_chart: Option<f64>,
        #[arg(long)]
        h: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum ShapeArg {
    Point,
    Disk,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum InitArg {
    Reference,
    Distorted,
    Mobius,
}

fn apply_density(cfg: &mut RunConfig, a: &DensityArgs) {
    let d = &mut cfg.density;
    if let Some(k) = a.kind {
        d.kind = k;
    }
    if let Some(b) = a.beta {
        d.beta = b;
    }
    if a.outer.is_some() {
        d.outer = a.outer;
    }
    if a.table.is_some() {
        d.table = a.table.clone();
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn resolve(cli: &Cli) -> anyhow::Result<(RunConfig, &'static str)> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    set(&mut cfg.seed, cli.seed);
    let name = match &cli.command {
        Command::DensityCheck { density, tol } => {
            apply_density(&mut cfg, density);
            set(&mut cfg.density.tol, *tol);
            "density_check"
        }
        Command::DistanceTable { density, pairs, grid } => {
            apply_density(&mut cfg, density);
            set(&mut cfg.distance.pairs, *pairs);
            if let Some(g) = grid {
                cfg.distance.oracle_grid = Some([g[0], g[1]]);
            }
            "distance_table"
        }
        Command::Distortion { density, alphas, k, pairs, max_delta } => {
            apply_density(&mut cfg, density);
            let c = &mut cfg.distortion;
            set(&mut c.alphas, alphas.clone());
            set(&mut c.k, *k);
            set(&mut c.pairs, *pairs);
            set(&mut c.max_delta, *max_delta);
            "distortion"
        }
        Command::IsoScan { density, alphas, mono_tol } => {
            apply_density(&mut cfg, density);
            set(&mut cfg.iso.alphas, alphas.clone());
            set(&mut cfg.iso.mono_tol, *mono_tol);
            "iso_scan"
        }
        Command::ChordarcVerify { delta, lambda, samples, vertices } => {
            let c = &mut cfg.chordarc;
            set(&mut c.delta, *delta);
            set(&mut c.lambda, *lambda);
            set(&mut c.samples, *samples);
            set(&mut c.vertices, *vertices);
            "chordarc_verify"
        }
        Command::PlateauSolve { shape, radius, k_chart, h, mesh, init, gamma, mobius_a, max_iter, tol } => {
            let c = &mut cfg.plateau;
            match (shape, radius) {
                (Some(ShapeArg::Point), None) => c.shape = Shape::Point,
                (Some(ShapeArg::Point), Some(_)) => anyhow::bail!("--radius does not apply to --shape point"),
                (Some(ShapeArg::Disk), r) => c.shape = Shape::Disk { radius: r.unwrap_or(1.0) },
                (None, Some(r)) => match &mut c.shape {
                    Shape::Disk { radius } => *radius = *r,
                    _ => anyhow::bail!("--radius needs a disk shape"),
                },
                (None, None) => {}
            }
            set(&mut c.k_chart, *k_chart);
            set(&mut c.h, *h);
            if mesh.is_some() {
                c.mesh = mesh.clone();
            }
            match init {
                Some(InitArg::Reference) => c.init = InitialMap::Reference,
                Some(InitArg::Distorted) => c.init = InitialMap::Distorted { gamma: gamma.unwrap_or(0.8) },
                Some(InitArg::Mobius) => c.init = InitialMap::Mobius { a: mobius_a.unwrap_or(0.5) },
                None => match (&mut c.init, gamma, mobius_a) {
                    (InitialMap::Distorted { gamma: g }, Some(v), None) => *g = *v,
                    (InitialMap::Mobius { a }, None, Some(v)) => *a = *v,
                    (_, None, None) => {}
                    _ => anyhow::bail!("--gamma goes with a distorted init and --mobius-a with a Mobius init"),
                },
            }
            set(&mut c.solver.max_iter, *max_iter);
            set(&mut c.solver.tol, *tol);
            "plateau"
        }
        Command::Surgery { radius, k_chart, h } => {
            let c = &mut cfg.surgery;
            set(&mut c.radius, *radius);
            set(&mut c.k_chart, *k_chart);
            set(&mut c.h, *h);
            "surgery"
        }
    };
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    } else if let Some(env) = std::env::var_os("WARPDISK_OUT") {
        cfg.out = Some(PathBuf::from(env));
    }
    Ok((cfg, name))
}

fn execute(cli: &Cli, cfg: &RunConfig, name: &str) -> anyhow::Result<Verdict> {
    let out = Out::new(cfg.out.clone().unwrap_or_else(|| PathBuf::from(".")));
    let echo = toml::to_string(cfg)?;
    eprintln!("# resolved configuration\n{echo}");
    out.text(&format!("{name}.config.toml"), &echo)?;
    let verdict = match cli.command {
        Command::DensityCheck { .. } => commands::density_check(cfg, &out),
        Command::DistanceTable { .. } => commands::distance_table(cfg, &out),
        Command::Distortion { .. } => commands::distortion(cfg, &out),
        Command::IsoScan { .. } => commands::iso_scan(cfg, &out),
        Command::ChordarcVerify { .. } => commands::chordarc_verify(cfg, &out),
        Command::PlateauSolve { .. } => commands::plateau_solve(cfg, &out),
        Command::Surgery { .. } => commands::surgery(cfg, &out),
    }?;
    out.json(&format!("{name}.verdict.json"), &verdict)?;
    Ok(verdict)
}

/// Parameter errors raised by the kernels count as configuration errors.
fn is_config_error(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.is::<ConfigError>()
            || c.is::<toml::de::Error>()
            || matches!(c.downcast_ref::<warpdisk::Error>(), Some(warpdisk::Error::Parameter(_) | warpdisk::Error::Domain { .. }))
    })
}

fn fail(e: &anyhow::Error) -> ExitCode {
    let config = is_config_error(e);
    let diag = json!({ "error": if config { "config" } else { "run" }, "message": format!("{e:#}") });
    eprintln!("{diag}");
    ExitCode::from(if config { 2 } else { 1 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail(&anyhow::Error::new(ConfigError(e.into())));
        }
    }
    let (cfg, name) = match resolve(&cli) {
        Ok(r) => r,
        Err(e) => return fail(&anyhow::Error::new(ConfigError(e))),
    };
    let start = Instant::now();
    let verdict = match execute(&cli, &cfg, name) {
        Ok(v) => v,
        Err(e) => return fail(&e),
    };
    let status = if verdict.pass { "pass" } else { "FAIL" };
    println!("{name}: {status}: {}", verdict.detail);
    eprintln!("# finished in {:.1?}", start.elapsed());
    if cli.assert && !verdict.pass {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}
