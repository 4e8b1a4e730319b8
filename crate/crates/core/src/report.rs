//! Experiment configuration, the command layer behind the CLI, and the CSV
//! and JSON artefacts it writes. Column orders and JSON shapes are listed in
//! `docs/formats.md`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Rect;
use crate::matrix::{
    attouch_wets, discretize, eigs_in_rect_with, pseudospectrum_with, AttouchWets, PseudospectrumGrid, SminOptions,
};
use crate::contour::ContourOptions;
use crate::potentials::{infer_case, verify_assumptions, AssumptionCase, AssumptionReport, PotentialSpec, SampleBox};
use crate::separable::{cube_modes, radial_modes, Geometry, Level, ModeTable};
use crate::shooting::{find_eigenvalues, BoundaryCondition, EigenRecord, TruncatedProblem};
use crate::sweep::{fit_rate, log_residuals, run_sweep, track, Classification, RateFit, SizeSlice, SweepPlan, Trajectory};

/// A potential given by built-in name or spelled out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PotentialRef {
    Builtin(String),
    Spec(PotentialSpec),
}

impl PotentialRef {
    pub fn resolve(&self) -> Result<PotentialSpec> {
        match self {
            PotentialRef::Builtin(name) => PotentialSpec::builtin(name),
            PotentialRef::Spec(s) => {
                s.validate()?;
                Ok(s.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeometryConfig {
    /// `(−s, s)`.
    #[default]
    Interval,
    Cube {
        d: usize,
    },
    Ball3d,
    Annulus2d {
        r_in: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputTarget {
    pub format: OutputFormat,
    pub path: PathBuf,
}

fn default_bc() -> BoundaryCondition {
    BoundaryCondition::Dirichlet
}
fn default_tol() -> f64 {
    1e-8
}
fn default_n() -> usize {
    800
}
fn default_grid() -> [usize; 2] {
    [65, 49]
}
fn default_eps() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3]
}
fn default_samples() -> SampleBox {
    SampleBox::new(10.0, 201)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub potential: PotentialRef,
    #[serde(default)]
    pub geometry: GeometryConfig,
    /// Outer (and, for intervals, both) endpoint condition.
    #[serde(default = "default_bc")]
    pub bc: BoundaryCondition,
    /// Truncation size for single solves.
    pub s: f64,
    #[serde(default)]
    pub sizes: Vec<f64>,
    pub window: Rect,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Assumption family for `check`; inferred when absent.
    #[serde(default)]
    pub case: Option<AssumptionCase>,
    #[serde(default = "default_samples")]
    pub sample_box: SampleBox,
    /// Matrix size for the finite-difference backend.
    #[serde(default = "default_n")]
    pub matrix_n: usize,
    #[serde(default = "default_grid")]
    pub grid: [usize; 2],
    #[serde(default = "default_eps")]
    pub eps_levels: Vec<f64>,
    #[serde(default)]
    pub outputs: Vec<OutputTarget>,
    /// Seed of the random starts in the singular-value iteration.
    #[serde(default)]
    pub seed: u64,
}

/// Names accepted by [`ExperimentConfig::builtin`].
pub const EXPERIMENTS: &[&str] =
    &["ix", "ix3", "harmonic", "harmonic_cube", "harmonic_ball", "exterior", "ix3_minus_x2", "complex_harmonic_delta"];

/// `a:step:b` inclusive, with the count rounded so float steps land on `b`.
pub fn parse_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad number '{t}' in '{s}'")));
    match parts.as_slice() {
        [a, step, b] => {
            let (a, step, b) = (num(a)?, num(step)?, num(b)?);
            if !(step > 0.0 && b >= a) {
                return Err(Error::Config(format!("bad range '{s}'")));
            }
            let n = ((b - a) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|k| a + k as f64 * step).collect())
        }
        _ => s.split(',').map(num).collect(),
    }
}

impl ExperimentConfig {
    fn base(name: &str, potential: &str, s: f64, window: Rect) -> Self {
        ExperimentConfig {
            name: name.into(),
            potential: PotentialRef::Builtin(potential.into()),
            geometry: GeometryConfig::Interval,
            bc: BoundaryCondition::Dirichlet,
            s,
            sizes: Vec::new(),
            window,
            tol: default_tol(),
            case: None,
            sample_box: default_samples(),
            matrix_n: default_n(),
            grid: default_grid(),
            eps_levels: default_eps(),
            outputs: Vec::new(),
            seed: 0,
        }
    }

    /// The experiments of the examples section, ready to run.
    pub fn builtin(name: &str) -> Result<Self> {
        let r = |a, b, c, d| Rect::new(a, b, c, d);
        let cfg = match name {
            "ix" => ExperimentConfig {
                sizes: parse_range("0.05:0.05:10")?,
                ..Self::base("ix", "ix", 10.0, r(0.0, 10.0, -10.0, 10.0)?)
            },
            "ix3" => ExperimentConfig {
                sizes: parse_range("3:0.5:10")?,
                case: Some(AssumptionCase::Accretive),
                ..Self::base("ix3", "ix3", 10.0, r(0.0, 20.0, -2.0, 2.0)?)
            },
            "harmonic" => ExperimentConfig {
                sizes: vec![4.0, 6.0, 8.0],
                case: Some(AssumptionCase::Sectorial),
                ..Self::base("harmonic", "harmonic", 8.0, r(0.0, 6.0, -1.0, 1.0)?)
            },
            "harmonic_cube" => ExperimentConfig {
                geometry: GeometryConfig::Cube { d: 3 },
                ..Self::base("harmonic_cube", "harmonic", 8.0, r(0.0, 8.0, -1.0, 1.0)?)
            },
            "harmonic_ball" => ExperimentConfig {
                geometry: GeometryConfig::Ball3d,
                potential: PotentialRef::Spec(PotentialSpec::new("r^2", "0", crate::potentials::SingularPart::None, 3)?),
                ..Self::base("harmonic_ball", "harmonic", 8.0, r(0.0, 8.0, -1.0, 1.0)?)
            },
            "exterior" => ExperimentConfig {
                geometry: GeometryConfig::Annulus2d { r_in: 1.0 },
                sizes: parse_range("5:1:10")?,
                ..Self::base("exterior", "rotated_harmonic(1+3i)", 10.0, r(0.0, 20.0, 0.0, 15.0)?)
            },
            "ix3_minus_x2" => ExperimentConfig {
                case: Some(AssumptionCase::Accretive),
                ..Self::base("ix3_minus_x2", "ix3_minus_x2", 6.0, r(-10.0, 20.0, -10.0, 10.0)?)
            },
            "complex_harmonic_delta" => ExperimentConfig {
                sizes: vec![4.0, 6.0, 8.0],
                ..Self::base("complex_harmonic_delta", "shifted_complex_harmonic_delta", 8.0, r(0.0, 10.0, -1.0, 6.0)?)
            },
            other => {
                return Err(Error::Config(format!(
                    "unknown experiment '{other}' (known: {})",
                    EXPERIMENTS.join(", ")
                )))
            }
        };
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let spec = self.potential.resolve()?;
        let dim = match self.geometry {
            GeometryConfig::Interval => 1,
            GeometryConfig::Cube { d } => d,
            GeometryConfig::Ball3d => 3,
            GeometryConfig::Annulus2d { .. } => 2,
        };
        if !(1..=3).contains(&dim) {
            return Err(Error::Config(format!("cube dimension {dim} not in 1..=3")));
        }
        if matches!(self.geometry, GeometryConfig::Interval | GeometryConfig::Cube { .. }) && spec.dimension != 1 {
            // cubes separate into 1-D factors
            return Err(Error::Config(format!("interval and cube solves need a 1-D potential, got d = {}", spec.dimension)));
        }
        if !(self.s > 0.0 && self.tol > 0.0) {
            return Err(Error::Config(format!("s = {} and tol = {} must be positive", self.s, self.tol)));
        }
        if let GeometryConfig::Annulus2d { r_in } = self.geometry {
            if !(r_in > 0.0 && r_in < self.s) {
                return Err(Error::Config(format!("inner radius {r_in} must lie in (0, s)")));
            }
        }
        if self.sizes.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("sizes must be strictly increasing".into()));
        }
        for o in &self.outputs {
            if let Some(dir) = o.path.parent().filter(|d| !d.as_os_str().is_empty()) {
                if !dir.is_dir() {
                    return Err(Error::Config(format!("output directory {} does not exist", dir.display())));
                }
            }
        }
        Ok(())
    }

    pub fn spec(&self) -> Result<PotentialSpec> {
        self.potential.resolve()
    }

    /// The one-dimensional problem at size `s` (interval and cube factors).
    pub fn problem(&self, s: f64) -> Result<TruncatedProblem> {
        let spec = self.spec()?;
        match self.geometry {
            GeometryConfig::Interval | GeometryConfig::Cube { .. } => TruncatedProblem::symmetric(spec, s, self.bc),
            GeometryConfig::Ball3d | GeometryConfig::Annulus2d { .. } => crate::separable::radial_problem(
                &self.separable_geometry(s).expect("radial geometry"),
                &spec,
                0,
                self.bc,
            ),
        }
    }

    fn separable_geometry(&self, s: f64) -> Option<Geometry> {
        match self.geometry {
            GeometryConfig::Interval => None,
            GeometryConfig::Cube { d } => Some(Geometry::Cube { d, s }),
            GeometryConfig::Ball3d => Some(Geometry::Ball3d { s }),
            GeometryConfig::Annulus2d { r_in } => Some(Geometry::Annulus2d { r_in, s }),
        }
    }
}

// ---- artefact writing ----

/// Writes `bytes` to `path` through a temporary file in the same directory
/// followed by a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, to_json(value)?.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

fn num(x: f64) -> String {
    // shortest representation that round-trips
    format!("{x:?}")
}

/// A table of rows written as CSV.
pub trait CsvTable {
    fn header(&self) -> Vec<&'static str>;
    fn rows(&self) -> Vec<Vec<String>>;

    fn to_csv(&self) -> Result<Vec<u8>> {
        csv_bytes(&self.header(), self.rows())
    }
}

/// Writes `value` to every target of `outputs`.
pub fn emit<T: Serialize + CsvTable>(value: &T, outputs: &[OutputTarget]) -> Result<()> {
    for o in outputs {
        match o.format {
            OutputFormat::Json => write_json(&o.path, value)?,
            OutputFormat::Csv => write_atomic(&o.path, &value.to_csv()?)?,
        }
    }
    Ok(())
}

/// The value as CSV or pretty JSON text.
pub fn render<T: Serialize + CsvTable>(value: &T, as_csv: bool) -> Result<String> {
    if as_csv {
        String::from_utf8(value.to_csv()?).map_err(|e| Error::Io(e.to_string()))
    } else {
        to_json(value)
    }
}

// ---- commands ----

pub fn cmd_check(cfg: &ExperimentConfig) -> Result<AssumptionReport> {
    let spec = cfg.spec()?;
    let case = match cfg.case {
        Some(c) => c,
        None => infer_case(&spec, &cfg.sample_box)?,
    };
    verify_assumptions(&spec, case, &cfg.sample_box)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    #[default]
    Shooting,
    Matrix,
}

/// Result of a single-size solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EigsOutput {
    Interval { s: f64, window: Rect, backend: Backend, records: Vec<EigenRecord> },
    Separable { table: ModeTable, levels: Vec<Level> },
}

impl CsvTable for EigsOutput {
    fn header(&self) -> Vec<&'static str> {
        match self {
            EigsOutput::Interval { .. } => vec!["s", "re", "im", "multiplicity", "residual"],
            EigsOutput::Separable { table, .. } if table.l_max.is_some() => vec!["l", "re", "im"],
            EigsOutput::Separable { .. } => vec!["re", "im", "multiplicity"],
        }
    }

    fn rows(&self) -> Vec<Vec<String>> {
        match self {
            EigsOutput::Interval { records, .. } => records
                .iter()
                .map(|r| vec![num(r.s), num(r.lambda.re), num(r.lambda.im), r.multiplicity.to_string(), num(r.residual)])
                .collect(),
            EigsOutput::Separable { table, .. } if table.l_max.is_some() => table
                .modes
                .iter()
                .flat_map(|m| {
                    let l = m.l.unwrap_or(0).to_string();
                    m.eigenvalues.iter().map(move |e| vec![l.clone(), num(e.lambda.re), num(e.lambda.im)])
                })
                .collect(),
            EigsOutput::Separable { levels, .. } => levels
                .iter()
                .map(|l| vec![num(l.lambda.re), num(l.lambda.im), l.multiplicity.to_string()])
                .collect(),
        }
    }
}

/// Eigenvalues at size `s` (defaults to the configured one) in the window.
pub fn cmd_eigs(cfg: &ExperimentConfig, s: Option<f64>, backend: Backend) -> Result<EigsOutput> {
    let s = s.unwrap_or(cfg.s);
    let out = match cfg.separable_geometry(s) {
        None => {
            let p = cfg.problem(s)?;
            let records = match backend {
                Backend::Shooting => find_eigenvalues(&p, &cfg.window, cfg.tol)?,
                Backend::Matrix => {
                    let a = discretize(&p, cfg.matrix_n)?;
                    eigs_in_rect_with(&a, &cfg.window, 1e-12, &ContourOptions::default())?
                        .into_iter()
                        .map(|e| EigenRecord { lambda: e.lambda, multiplicity: e.multiplicity, residual: 0.0, s })
                        .collect()
                }
            };
            EigsOutput::Interval { s, window: cfg.window, backend, records }
        }
        Some(Geometry::Cube { d, .. }) => {
            let p = cfg.problem(s)?;
            // every factor must be known up to Re_max − (d−1)·Re μ_min
            let probe = find_eigenvalues(&p, &cfg.window, cfg.tol)?;
            let mu_min = probe.iter().map(|r| r.lambda.re).fold(cfg.window.re_max, f64::min);
            let top = cfg.window.re_max - (d as f64 - 1.0) * mu_min.min(cfg.window.re_max);
            let search = Rect::new(cfg.window.re_min.min(0.0) - 1.0, top + 0.5, cfg.window.im_min, cfg.window.im_max)?;
            let table = cube_modes(&p, d, &search, &cfg.window, cfg.tol)?;
            let levels = table.levels(crate::separable::MERGE_TOL.max(10.0 * cfg.tol));
            EigsOutput::Separable { table, levels }
        }
        Some(g) => {
            let table = radial_modes(&g, &cfg.spec()?, &cfg.window, cfg.bc, cfg.tol)?;
            let levels = table.levels(1e-6);
            EigsOutput::Separable { table, levels }
        }
    };
    emit(&out, &cfg.outputs)?;
    Ok(out)
}

/// Sweep data: raw slices and classified trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub name: String,
    pub window: Rect,
    pub tol: f64,
    pub slices: Vec<SizeSlice>,
    pub trajectories: Vec<Trajectory>,
}

impl CsvTable for SweepOutput {
    fn header(&self) -> Vec<&'static str> {
        vec!["s", "re", "im", "mult", "traj", "class"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        let mut rows: Vec<(f64, usize, Vec<String>)> = self
            .trajectories
            .iter()
            .flat_map(|t| {
                t.records.iter().map(move |r| {
                    (
                        r.s,
                        t.id,
                        vec![
                            num(r.s),
                            num(r.lambda.re),
                            num(r.lambda.im),
                            r.multiplicity.to_string(),
                            t.id.to_string(),
                            t.classification.label().to_string(),
                        ],
                    )
                })
            })
            .collect();
        rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        rows.into_iter().map(|r| r.2).collect()
    }
}

pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    if cfg.separable_geometry(cfg.s).is_some_and(|g| !matches!(g, Geometry::Cube { .. })) {
        return Err(Error::Config("sweeps run on interval problems".into()));
    }
    if cfg.sizes.len() < 2 {
        return Err(Error::Config("a sweep needs at least two sizes".into()));
    }
    let plan = SweepPlan::new(cfg.problem(cfg.sizes[0])?, cfg.sizes.clone(), cfg.window, cfg.tol)?;
    let slices = run_sweep(&plan)?;
    let trajectories = track(&slices, cfg.tol)?;
    let out = SweepOutput { name: cfg.name.clone(), window: cfg.window, tol: cfg.tol, slices, trajectories };
    emit(&out, &cfg.outputs)?;
    Ok(out)
}

impl CsvTable for PseudospectrumGrid {
    fn header(&self) -> Vec<&'static str> {
        vec!["re", "im", "smin"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        let mut rows = Vec::with_capacity(self.nx * self.ny);
        for j in 0..self.ny {
            for i in 0..self.nx {
                let z = self.point(i, j);
                rows.push(vec![num(z.re), num(z.im), num(self.smin(i, j))]);
            }
        }
        rows
    }
}

/// `smin(A − λI)` of the discretised problem at size `s` on the grid.
pub fn cmd_pseudo(
    cfg: &ExperimentConfig,
    s: Option<f64>,
    n: Option<usize>,
    rect: Option<Rect>,
    eps: Option<&[f64]>,
) -> Result<PseudospectrumGrid> {
    let p = cfg.problem(s.unwrap_or(cfg.s))?;
    let a = discretize(&p, n.unwrap_or(cfg.matrix_n))?;
    let opts = SminOptions { seed: cfg.seed, ..Default::default() };
    let [nx, ny] = cfg.grid;
    let grid =
        pseudospectrum_with(&a, &rect.unwrap_or(cfg.window), nx, ny, eps.unwrap_or(&cfg.eps_levels), &opts)?;
    emit(&grid, &cfg.outputs)?;
    Ok(grid)
}

/// A point cloud: a pseudospectrum file (one of its level sets) or a JSON
/// list of `[re, im]` pairs.
pub fn load_point_cloud(path: &Path, level: usize) -> Result<Vec<Complex64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    if let Ok(grid) = serde_json::from_str::<PseudospectrumGrid>(&text) {
        return grid.level_sets.get(level).cloned().ok_or_else(|| {
            Error::Config(format!("{} has {} level sets, asked for {level}", path.display(), grid.level_sets.len()))
        });
    }
    Ok(serde_json::from_str::<Vec<Complex64>>(&text)?)
}

impl CsvTable for AttouchWets {
    fn header(&self) -> Vec<&'static str> {
        vec!["rho", "value"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.radii.iter().zip(&self.per_rho).map(|(r, v)| vec![num(*r), num(*v)]).collect()
    }
}

pub fn cmd_daw(file_a: &Path, file_b: &Path, radii: &[f64], level: usize) -> Result<AttouchWets> {
    let a = load_point_cloud(file_a, level)?;
    let b = load_point_cloud(file_b, level)?;
    attouch_wets(&a, &b, radii)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub trajectory: usize,
    pub limit: Complex64,
    pub fit: RateFit,
    /// `(s, ln|λ(s) − limit|)`.
    pub log_residuals: Vec<(f64, f64)>,
}

impl CsvTable for RateReport {
    fn header(&self) -> Vec<&'static str> {
        vec!["s", "log_residual"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.log_residuals.iter().map(|(s, y)| vec![num(*s), num(*y)]).collect()
    }
}

/// Rate fit of trajectory `id` of a sweep file against its converged limit.
pub fn cmd_rate(sweep: &SweepOutput, id: usize) -> Result<RateReport> {
    let t = sweep.trajectories.iter().find(|t| t.id == id).ok_or(Error::UnknownTrajectory(id))?;
    let limit = match &t.classification {
        Classification::Converged { limit, .. } => *limit,
        other => {
            return Err(Error::InvalidParameter(format!("trajectory {id} is {}, not converged", other.label())))
        }
    };
    let fit = fit_rate(t, limit)?;
    Ok(RateReport { trajectory: id, limit, fit, log_residuals: log_residuals(t, limit) })
}
