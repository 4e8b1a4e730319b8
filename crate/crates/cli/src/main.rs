use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use spexact::potentials::AssumptionCase;
use spexact::report::{
    cmd_check, cmd_daw, cmd_eigs, cmd_pseudo, cmd_rate, cmd_sweep, emit, parse_range, read_json, render, to_json,
    Backend, ExperimentConfig, OutputFormat, OutputTarget, SweepOutput,
};
use spexact::shooting::BoundaryCondition;
use spexact::{Complex64, Error, Rect};

#[derive(Parser)]
#[command(name = "spexact", version, about = "Spectra of truncated non-selfadjoint Schrödinger operators")]
struct Cli {
    /// Experiment config (JSON). Used when no built-in experiment is named.
    #[arg(long, global = true, env = "SPEXACT_CONFIG")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test the potential against its assumption family.
    Check {
        experiment: Option<String>,
        #[arg(long, value_enum)]
        case: Option<CaseArg>,
    },
    /// Eigenvalues in the window at one truncation size.
    Eigs {
        experiment: Option<String>,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long, value_enum, default_value_t = BackendArg::Shooting)]
        backend: BackendArg,
        /// Matrix size for the matrix backend.
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Track eigenvalues over a range of truncation sizes.
    Sweep {
        experiment: Option<String>,
        /// `a:step:b` or a comma list.
        #[arg(long)]
        sizes: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Smallest singular values of the discretised operator on a grid.
    Pseudo {
        experiment: Option<String>,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        /// `nx,ny`.
        #[arg(long)]
        grid: Option<String>,
        /// Comma list of ε levels.
        #[arg(long)]
        eps: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Attouch–Wets surrogate between two point clouds.
    Daw {
        file_a: PathBuf,
        file_b: PathBuf,
        #[arg(long, default_value = "5,10,20")]
        radii: String,
        /// Level set to read from pseudospectrum files.
        #[arg(long, default_value_t = 0)]
        level: usize,
        #[command(flatten)]
        out: Outputs,
    },
    /// Convergence-rate fit for one converged trajectory of a sweep file.
    Rate {
        sweep_file: PathBuf,
        trajectory: usize,
        #[command(flatten)]
        out: Outputs,
    },
}

#[derive(Args)]
struct Common {
    /// `re_min,re_max,im_min,im_max`.
    #[arg(long, allow_hyphen_values = true)]
    window: Option<String>,
    /// `dirichlet`, `neumann` or `robin:<a>`.
    #[arg(long)]
    bc: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[command(flatten)]
    out: Outputs,
}

#[derive(Args)]
struct Outputs {
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
    /// Print CSV instead of JSON on stdout.
    #[arg(long)]
    stdout_csv: bool,
}

impl Outputs {
    fn targets(&self) -> Vec<OutputTarget> {
        let mut v = Vec::new();
        if let Some(p) = &self.csv {
            v.push(OutputTarget { format: OutputFormat::Csv, path: p.clone() });
        }
        if let Some(p) = &self.json {
            v.push(OutputTarget { format: OutputFormat::Json, path: p.clone() });
        }
        v
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseArg {
    #[value(name = "I", alias = "sectorial")]
    I,
    #[value(name = "II", alias = "accretive")]
    II,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Shooting,
    Matrix,
}

const EXIT_RUNTIME: u8 = 1;
const EXIT_CHECK_FAILED: u8 = 2;
const EXIT_CONFIG: u8 = 3;

fn parse_bc(s: &str) -> Result<BoundaryCondition, Error> {
    match s.trim().to_ascii_lowercase().as_str() {
        "dirichlet" => Ok(BoundaryCondition::Dirichlet),
        "neumann" => Ok(BoundaryCondition::neumann()),
        other => match other.strip_prefix("robin:") {
            Some(a) => a
                .parse::<Complex64>()
                .map(|a| BoundaryCondition::Robin { a })
                .map_err(|_| Error::Config(format!("bad Robin coefficient '{a}'"))),
            None => Err(Error::Config(format!("unknown boundary condition '{s}'"))),
        },
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>, Error> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad number '{t}' in '{s}'"))))
        .collect()
}

fn load_config(config: Option<&Path>, experiment: Option<&str>) -> Result<ExperimentConfig, Error> {
    match (experiment, config) {
        (Some(name), _) => ExperimentConfig::builtin(name),
        (None, Some(path)) => ExperimentConfig::load(path),
        (None, None) => Err(Error::Config("name a built-in experiment or pass --config".into())),
    }
}

fn apply_common(cfg: &mut ExperimentConfig, c: &Common) -> Result<(), Error> {
    if let Some(w) = &c.window {
        cfg.window = w.parse::<Rect>()?;
    }
    if let Some(bc) = &c.bc {
        cfg.bc = parse_bc(bc)?;
    }
    if let Some(t) = c.tol {
        cfg.tol = t;
    }
    let targets = c.out.targets();
    if !targets.is_empty() {
        cfg.outputs = targets;
    }
    cfg.validate()
}

fn is_config_error(e: &Error) -> bool {
    matches!(e, Error::Config(_) | Error::InvalidParameter(_) | Error::UnknownTrajectory(_))
}

fn run(cli: Cli) -> Result<u8, Error> {
    let config = cli.config.as_deref();
    match cli.command {
        Command::Check { experiment, case } => {
            let mut cfg = load_config(config, experiment.as_deref())?;
            if let Some(c) = case {
                cfg.case = Some(match c {
                    CaseArg::I => AssumptionCase::Sectorial,
                    CaseArg::II => AssumptionCase::Accretive,
                });
            }
            let report = cmd_check(&cfg)?;
            print!("{}", to_json(&report)?);
            Ok(if report.passed { 0 } else { EXIT_CHECK_FAILED })
        }
        Command::Eigs { experiment, s, backend, n, common } => {
            let mut cfg = load_config(config, experiment.as_deref())?;
            apply_common(&mut cfg, &common)?;
            if let Some(n) = n {
                cfg.matrix_n = n;
            }
            let backend = match backend {
                BackendArg::Shooting => Backend::Shooting,
                BackendArg::Matrix => Backend::Matrix,
            };
            let out = cmd_eigs(&cfg, s, backend)?;
            print!("{}", render(&out, common.out.stdout_csv)?);
            Ok(0)
        }
        Command::Sweep { experiment, sizes, common } => {
            let mut cfg = load_config(config, experiment.as_deref())?;
            if let Some(s) = sizes {
                cfg.sizes = parse_range(&s)?;
            }
            apply_common(&mut cfg, &common)?;
            let out = cmd_sweep(&cfg)?;
            print!("{}", render(&out, common.out.stdout_csv)?);
            Ok(0)
        }
        Command::Pseudo { experiment, s, n, grid, eps, seed, common } => {
            let mut cfg = load_config(config, experiment.as_deref())?;
            if let Some(g) = grid {
                let v = parse_list(&g)?;
                match v.as_slice() {
                    [nx, ny] if *nx >= 2.0 && *ny >= 2.0 && nx.fract() == 0.0 && ny.fract() == 0.0 => {
                        cfg.grid = [*nx as usize, *ny as usize]
                    }
                    _ => return Err(Error::Config(format!("bad grid '{g}'"))),
                }
            }
            if let Some(e) = eps {
                cfg.eps_levels = parse_list(&e)?;
            }
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            apply_common(&mut cfg, &common)?;
            let out = cmd_pseudo(&cfg, s, n, None, None)?;
            print!("{}", render(&out, common.out.stdout_csv)?);
            Ok(0)
        }
        Command::Daw { file_a, file_b, radii, level, out } => {
            let radii = parse_list(&radii)?;
            let r = cmd_daw(&file_a, &file_b, &radii, level)?;
            emit(&r, &out.targets())?;
            print!("{}", render(&r, out.stdout_csv)?);
            Ok(0)
        }
        Command::Rate { sweep_file, trajectory, out } => {
            let sweep: SweepOutput = read_json(&sweep_file)?;
            let r = cmd_rate(&sweep, trajectory)?;
            emit(&r, &out.targets())?;
            print!("{}", render(&r, out.stdout_csv)?);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let code = if is_config_error(&e) { EXIT_CONFIG } else { EXIT_RUNTIME };
            let kind = format!("{e:?}");
            let kind = kind.split(['(', ' ', '{']).next().unwrap_or("Error");
            eprintln!("{}", json!({ "error": { "kind": kind, "message": e.to_string(), "exit_code": code } }));
            ExitCode::from(code)
        }
    }
}

