//! Run configuration: a TOML document with one section per module.
//!
//! Every key has a default, unknown keys are rejected, and command-line flags
//! override the file.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use warpdisk::chordarc::CurveFamily;
use warpdisk::density::{DensitySpec, GridSpec};
use warpdisk::isoperimetry::OptimizerConfig;
use warpdisk::plateau::{CollapsedSetSpec, InitialMap, Shape, SolverConfig, TheodorsenConfig};

/// A problem with the configuration rather than with the run.
#[derive(Debug)]
pub struct ConfigError(pub anyhow::Error);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Flat,
    LogE0,
    LoglogE1,
    Cone,
    /// Samples read from a two-column `r,f` file.
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DensitySection {
    pub kind: Kind,
    /// Outer radius; defaults to the admissible radius of the kind (1 for flat, cone and table).
    pub outer: Option<f64>,
    /// Cone angle.
    pub beta: f64,
    pub table: Option<PathBuf>,
    pub grid_points: usize,
    pub grid_decades: f64,
    /// Tolerance of the admissibility checks.
    pub tol: f64,
}

impl Default for DensitySection {
    fn default() -> Self {
        let g = GridSpec::default();
        Self { kind: Kind::LogE0, outer: None, beta: 3.0 * PI, table: None, grid_points: g.points, grid_decades: g.decades, tol: 1e-2 }
    }
}

impl DensitySection {
    pub fn grid(&self) -> GridSpec {
        GridSpec { points: self.grid_points, decades: self.grid_decades }
    }

    pub fn build(&self) -> anyhow::Result<DensitySpec> {
        self.try_build().map_err(|e| ConfigError(e).into())
    }

    fn try_build(&self) -> anyhow::Result<DensitySpec> {
        let mut f = match self.kind {
            Kind::Flat => DensitySpec::flat(1.0),
            Kind::LogE0 => DensitySpec::log_e0(),
            Kind::LoglogE1 => DensitySpec::loglog_e1(),
            Kind::Cone => DensitySpec::cone(self.beta, 1.0),
            Kind::Table => {
                let path = self.table.as_ref().context("density kind `table` needs `table = <file>`")?;
                DensitySpec::table(read_table(path)?)?
            }
        };
        if let Some(outer) = self.outer {
            f.outer = outer;
        }
        f.validate()?;
        Ok(f)
    }
}

fn read_table(path: &Path) -> anyhow::Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('r') {
            continue;
        }
        let mut cols = line.split([',', ' ', '\t']).filter(|s| !s.is_empty()).map(str::parse::<f64>);
        match (cols.next(), cols.next(), cols.next()) {
            (Some(Ok(r)), Some(Ok(f)), None) => out.push((r, f)),
            _ => bail!("{}:{}: expected two numbers", path.display(), i + 1),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DistanceSection {
    pub pairs: usize,
    pub tol: f64,
    /// Polar grid `[n_r, n_theta]` for the upper-bound column; omitted when absent.
    pub oracle_grid: Option<[usize; 2]>,
}

impl Default for DistanceSection {
    fn default() -> Self {
        Self { pairs: 1000, tol: 1e-10, oracle_grid: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DistortionSection {
    pub alphas: Vec<f64>,
    pub k: f64,
    pub pairs: usize,
    pub max_delta: f64,
}

impl Default for DistortionSection {
    fn default() -> Self {
        Self { alphas: vec![1e-1, 1e-2, 1e-3, 1e-4], k: 0.5, pairs: 1000, max_delta: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IsoSection {
    pub alphas: Vec<f64>,
    pub mono_tol: f64,
    /// Allowed relative distance of the last `C_hat` from `1/(4 pi)`.
    pub rel_tol: f64,
    /// Slack above `1/(4 pi)` for flat and cone densities.
    pub upper_slack: f64,
    pub optimizer: OptimizerConfig,
}

impl Default for IsoSection {
    fn default() -> Self {
        Self { alphas: vec![1e-1, 1e-2, 1e-3, 1e-4], mono_tol: 1e-3, rel_tol: 0.1, upper_slack: 1e-4, optimizer: OptimizerConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChordArcSection {
    pub delta: f64,
    pub lambda: f64,
    pub samples: usize,
    pub vertices: usize,
    pub families: Vec<CurveFamily>,
}

impl Default for ChordArcSection {
    fn default() -> Self {
        Self { delta: 0.5, lambda: 3.0, samples: 1000, vertices: 256, families: CurveFamily::defaults() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlateauSection {
    pub shape: Shape,
    pub k_chart: f64,
    pub h: f64,
    /// Mesh file in the text format written by `plateau-solve`; overrides `h`.
    pub mesh: Option<PathBuf>,
    pub init: InitialMap,
    pub threshold: f64,
    pub raster: usize,
    pub energy_tol: f64,
    pub area_tol: f64,
    /// Largest fiber area accepted for a point.
    pub point_area: f64,
    pub solver: SolverConfig,
}

impl Default for PlateauSection {
    fn default() -> Self {
        Self {
            shape: Shape::Disk { radius: 1.0 },
            k_chart: 2.0,
            h: 0.02,
            mesh: None,
            init: InitialMap::Distorted { gamma: 0.8 },
            threshold: 0.01,
            raster: 400,
            energy_tol: 0.02,
            area_tol: 0.2,
            point_area: 1e-2,
            solver: SolverConfig::default(),
        }
    }
}

impl PlateauSection {
    pub fn set(&self) -> anyhow::Result<CollapsedSetSpec> {
        Ok(CollapsedSetSpec::new(self.shape, self.k_chart)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurgerySection {
    /// Radius of the collapsed disk; the slit has half-length `2 radius / k_chart`.
    pub radius: f64,
    pub k_chart: f64,
    pub h: f64,
    pub threshold: f64,
    pub raster: usize,
    pub energy_tol: f64,
    pub max_inscribed: f64,
    pub theodorsen: TheodorsenConfig,
}

impl Default for SurgerySection {
    fn default() -> Self {
        Self {
            radius: 1.0,
            k_chart: 2.0,
            h: 0.004,
            threshold: 0.01,
            raster: 1600,
            energy_tol: 0.01,
            max_inscribed: 0.02,
            theodorsen: TheodorsenConfig::default(),
        }
    }
}

impl SurgerySection {
    pub fn set(&self) -> anyhow::Result<CollapsedSetSpec> {
        Ok(CollapsedSetSpec::disk(self.radius, self.k_chart)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// Output directory; the `WARPDISK_OUT` variable and `--out` take precedence in that order.
    pub out: Option<PathBuf>,
    pub density: DensitySection,
    pub distance: DistanceSection,
    pub distortion: DistortionSection,
    pub iso: IsoSection,
    pub chordarc: ChordArcSection,
    pub plateau: PlateauSection,
    pub surgery: SurgerySection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0x5eed,
            out: None,
            density: DensitySection::default(),
            distance: DistanceSection::default(),
            distortion: DistortionSection::default(),
            iso: IsoSection::default(),
            chordarc: ChordArcSection::default(),
            plateau: PlateauSection::default(),
            surgery: SurgerySection::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        let text = toml::to_string(&c).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("seed = 1\n[density]\nkind = \"flat\"\n").is_ok());
        assert!(toml::from_str::<RunConfig>("sed = 1\n").is_err());
        assert!(toml::from_str::<RunConfig>("[density]\nknd = \"flat\"\n").is_err());
        assert!(toml::from_str::<RunConfig>("[plateau.solver]\ntoll = 1e-3\n").is_err());
    }

    #[test]
    fn sections_fill_in_defaults() {
        let c: RunConfig = toml::from_str("[plateau]\nh = 0.05\ninit = { kind = \"mobius\", a = 0.3 }\n").unwrap();
        assert_eq!(c.plateau.h, 0.05);
        assert_eq!(c.plateau.init, InitialMap::Mobius { a: 0.3 });
        assert_eq!(c.plateau.k_chart, 2.0);
        assert_eq!(c.iso, IsoSection::default());
    }
}
