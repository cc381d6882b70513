//! The `gmmot` command-line interface.
//!
//! Exit codes: 0 success, 1 solver failure, 2 unreadable or malformed input,
//! 3 domain or usage error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::format::fmt12;
use crate::gmm_ot::{mixture_barycenter, mixture_distance, Geodesic, SupportMode};
use crate::mixture::GaussianMixture;
use crate::oracle::{default_sweep_deltas, split_normal_sweep, sweep_csv};
use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_SOLVER: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;

const LAMBDA_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(
    name = "gmmot",
    version,
    about = "Optimal transport between Gaussian mixture models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Mixture transport distance d between two model files.
    Distance {
        model_a: PathBuf,
        model_b: PathBuf,
        /// Also print the optimal coupling and the component cost matrix.
        #[arg(long)]
        coupling: bool,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Points on the mixture geodesic, one model file per time.
    Interpolate {
        model_a: PathBuf,
        model_b: PathBuf,
        #[arg(long = "t", num_args = 1.., required = true, allow_negative_numbers = true)]
        times: Vec<f64>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[arg(long, default_value = "interp")]
        prefix: String,
    },
    /// Weighted barycenter of several model files.
    Barycenter {
        #[arg(required = true)]
        models: Vec<PathBuf>,
        #[arg(long = "lambda", num_args = 1.., required = true, allow_negative_numbers = true)]
        lambda: Vec<f64>,
        /// Model file whose components are used as a fixed support (weights ignored).
        #[arg(long)]
        support: Option<PathBuf>,
        /// Output model path; standard output when omitted.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// d versus the quantile W2 for N(0,1) against ½N(−Δ,1)+½N(Δ,1).
    Sweep {
        #[arg(long, num_args = 1.., allow_negative_numbers = true)]
        deltas: Option<Vec<f64>>,
        #[arg(long, default_value_t = 100_000)]
        resolution: usize,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Check that a model file parses and is a valid mixture.
    Validate { model: PathBuf },
}

#[derive(Debug)]
enum CliError {
    Core(Error),
    Io(PathBuf, std::io::Error, bool),
    Usage(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => match e {
                Error::Parse { .. }
                | Error::InvalidModel(_)
                | Error::NotPsd { .. }
                | Error::InvalidMatrix(_) => EXIT_PARSE,
                Error::Dim { .. } | Error::Domain(_) | Error::SingularDensity { .. } => EXIT_DOMAIN,
                Error::Convergence { .. }
                | Error::InfeasibleMarginals(_)
                | Error::Solver(_)
                | Error::Resource(_) => EXIT_SOLVER,
            },
            CliError::Io(_, _, reading) => {
                if *reading {
                    EXIT_PARSE
                } else {
                    EXIT_SOLVER
                }
            }
            CliError::Usage(_) => EXIT_DOMAIN,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(path, e, _) => write!(f, "{}: {e}", path.display()),
            CliError::Usage(msg) => write!(f, "{msg}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_DOMAIN } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Distance {
            model_a,
            model_b,
            coupling,
            format,
        } => cmd_distance(&model_a, &model_b, coupling, format),
        Command::Interpolate {
            model_a,
            model_b,
            times,
            out_dir,
            prefix,
        } => cmd_interpolate(&model_a, &model_b, &times, &out_dir, &prefix),
        Command::Barycenter {
            models,
            lambda,
            support,
            output,
        } => cmd_barycenter(&models, &lambda, support.as_deref(), output.as_deref()),
        Command::Sweep {
            deltas,
            resolution,
            format,
            output,
        } => cmd_sweep(deltas, resolution, format, output.as_deref()),
        Command::Validate { model } => cmd_validate(&model),
    }
}

fn read_model(path: &Path) -> CliResult<GaussianMixture> {
    let bytes = fs::read(path).map_err(|e| CliError::Io(path.to_path_buf(), e, true))?;
    GaussianMixture::read_model(&bytes).map_err(|e| match e {
        Error::Parse { location, message } => CliError::Core(Error::Parse {
            location: format!("{} {location}", path.display()),
            message,
        }),
        other => CliError::Core(other),
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::Io(path.to_path_buf(), e, false))
}

// Rounds to 12 significant digits so JSON output matches the text output.
fn round12(x: f64) -> f64 {
    fmt12(x).parse().unwrap_or(x)
}

fn matrix_json(m: &nalgebra::DMatrix<f64>) -> serde_json::Value {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| round12(m[(i, j)]))
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into()
}

fn cmd_distance(a: &Path, b: &Path, with_coupling: bool, format: Format) -> CliResult<()> {
    let mu0 = read_model(a)?;
    let mu1 = read_model(b)?;
    let r = mixture_distance(&mu0, &mu1)?;
    match format {
        Format::Csv => {
            println!("{}", fmt12(r.distance));
            if with_coupling {
                let doc = json!({
                    "plan": matrix_json(&r.coupling.plan),
                    "cost": matrix_json(&r.cost_matrix),
                });
                println!("{doc}");
            }
        }
        Format::Json => {
            let mut doc = json!({ "distance": round12(r.distance) });
            if with_coupling {
                doc["plan"] = matrix_json(&r.coupling.plan);
                doc["cost"] = matrix_json(&r.cost_matrix);
            }
            println!("{doc}");
        }
    }
    Ok(())
}

fn cmd_interpolate(
    a: &Path,
    b: &Path,
    times: &[f64],
    out_dir: &Path,
    prefix: &str,
) -> CliResult<()> {
    if let Some(t) = times.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::Domain(format!("interpolation time {t} outside [0, 1]")).into());
    }
    let mu0 = read_model(a)?;
    let mu1 = read_model(b)?;
    let geodesic = Geodesic::new(&mu0, &mu1)?;
    fs::create_dir_all(out_dir).map_err(|e| CliError::Io(out_dir.to_path_buf(), e, false))?;
    for &t in times {
        let mixture = geodesic.at(t)?;
        let path = out_dir.join(format!("{prefix}_t{}.json", fmt12(t)));
        write_file(&path, &mixture.write_model())?;
        println!("{}", path.display());
    }
    Ok(())
}

fn cmd_barycenter(
    models: &[PathBuf],
    lambda: &[f64],
    support: Option<&Path>,
    output: Option<&Path>,
) -> CliResult<()> {
    if lambda.len() != models.len() {
        return Err(CliError::Usage(format!(
            "{} weights given for {} models",
            lambda.len(),
            models.len()
        )));
    }
    if lambda.iter().any(|w| w.is_nan() || *w < 0.0) {
        return Err(CliError::Usage("weights must be nonnegative".into()));
    }
    let sum: f64 = lambda.iter().sum();
    if (sum - 1.0).abs() > LAMBDA_SUM_TOL {
        return Err(CliError::Usage(format!("weights sum to {sum}, expected 1")));
    }
    let mixtures = models
        .iter()
        .map(|p| read_model(p))
        .collect::<CliResult<Vec<_>>>()?;
    let mode = match support {
        Some(path) => SupportMode::Fixed(read_model(path)?.components().to_vec()),
        None => SupportMode::Derived,
    };
    let bary = mixture_barycenter(&mixtures, lambda, &mode)?;
    let model = bary.mixture.write_model();
    match output {
        Some(path) => {
            write_file(path, &model)?;
            println!("objective {}", fmt12(bary.objective()));
        }
        None => {
            print!("{}", String::from_utf8_lossy(&model));
            eprintln!("objective {}", fmt12(bary.objective()));
        }
    }
    Ok(())
}

fn cmd_sweep(
    deltas: Option<Vec<f64>>,
    resolution: usize,
    format: Format,
    output: Option<&Path>,
) -> CliResult<()> {
    let deltas = deltas.unwrap_or_else(default_sweep_deltas);
    if let Some(d) = deltas.iter().find(|d| d.is_nan() || **d < 0.0) {
        return Err(CliError::Usage(format!("Δ must be nonnegative, got {d}")));
    }
    if resolution == 0 {
        return Err(CliError::Usage("resolution must be positive".into()));
    }
    let rows = split_normal_sweep(&deltas, resolution)?;
    let text = match format {
        Format::Csv => sweep_csv(&rows),
        Format::Json => {
            let rows: Vec<_> = rows
                .iter()
                .map(|r| json!({"delta": round12(r.delta), "d": round12(r.d), "w2": round12(r.w2)}))
                .collect();
            format!("{}\n", serde_json::Value::from(rows))
        }
    };
    match output {
        Some(path) => write_file(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_validate(path: &Path) -> CliResult<()> {
    let m = read_model(path)?;
    println!("ok: dim {} with {} components", m.dim(), m.len());
    Ok(())
}
