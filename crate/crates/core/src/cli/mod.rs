//! The `corotcalc` command line.
//!
//! Exit codes: 0 success, 1 failed verification or other runtime failure,
//! 2 malformed input (bad JSON, wrong shapes, unreadable input file, bad
//! flags), 3 a `B` that is not positive definite, 4 integrator abort.

mod config;

pub use config::{ConfigError, RunConfig, SpinMethod};

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::calculus::{f_of_ad_series, PowerSeriesSpec};
use crate::error::Error;
use crate::kinematics::{hencky, integrate_motion, log_spin_commutator, log_spin_spectral, MotionKind, MotionSample, DEFAULT_CLUSTER_TOL};
use crate::matcore::{Matrix, SkewMatrix, SpdMatrix, SymMatrix};
use crate::sample::TrialRng;
use crate::verify::{run_suite, Suite, VerifyContext};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    ReadInput { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    WriteOutput { path: PathBuf, source: std::io::Error },
    #[error("malformed JSON input: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid input: {0}")]
    Input(Error),
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("verification failed: {0}")]
    VerifyFailed(String),
    #[error("{0}")]
    Numeric(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Numeric(Error::NotPositiveDefinite { .. }) | Self::Input(Error::NotPositiveDefinite { .. }) => 3,
            Self::ReadInput { .. } | Self::Json(_) | Self::Input(_) | Self::Config(_) => 2,
            Self::Numeric(Error::IntegratorAbort { .. }) => 4,
            _ => 1,
        }
    }
}

/// Commutator calculus for symmetric matrices and the logarithmic spin.
#[derive(Parser, Debug)]
#[command(name = "corotcalc", version)]
pub struct Cli {
    /// key=value file with default settings
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// tolerance for default-level thresholds
    #[arg(long, global = true, env = "COROTCALC_TOL")]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Logarithmic spin of a JSON {B, D, W} triple
    Spin(SpinArgs),
    /// Run verification suites and print one row per identity
    Verify(VerifyArgs),
    /// Integrate a preset motion and write the residual trajectory as CSV
    Simulate(SimulateArgs),
    /// Time the projection and commutator spin forms
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct SpinArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    method: Option<SpinMethod>,
    /// write the JSON here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    suite: Option<Suite>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    motion: Option<MotionKind>,
    /// rate parameter: shear rate, stretch rate or angular rate
    #[arg(long, alias = "rate")]
    kappa: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    #[arg(long = "record-every")]
    record_every: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// initial deformation gradient as a matrix JSON object (default I)
    #[arg(long)]
    f0: Option<PathBuf>,
    /// CSV destination; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "3,5,8")]
    dims: Vec<usize>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::ReadInput { path: path.to_path_buf(), source })
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::WriteOutput { path: path.to_path_buf(), source })
}

#[derive(Deserialize)]
struct SpinInput {
    #[serde(rename = "B")]
    b: Matrix,
    #[serde(rename = "D")]
    d: Matrix,
    #[serde(rename = "W")]
    w: Matrix,
}

/// Parses `{"B", "D", "W"}` and evaluates the spin with `method`.
pub fn cmd_spin(json: &str, method: SpinMethod) -> Result<String, CliError> {
    let input: SpinInput = serde_json::from_str(json)?;
    let b_sym = SymMatrix::new(input.b).map_err(CliError::Input)?;
    let b = SpdMatrix::new(b_sym).map_err(CliError::Input)?;
    let d = SymMatrix::new(input.d).map_err(CliError::Input)?;
    let w = SkewMatrix::new(input.w).map_err(CliError::Input)?;
    for m in [d.dim(), w.dim()] {
        if m != b.dim() {
            return Err(CliError::Input(Error::DimensionMismatch { expected: b.dim(), found: m }));
        }
    }
    let mut out = serde_json::Map::new();
    out.insert("method".into(), method.to_string().into());
    let omega = match method {
        SpinMethod::Spectral => log_spin_spectral(&b, &d, &w, DEFAULT_CLUSTER_TOL)?,
        SpinMethod::Commutator => log_spin_commutator(&b, &d, &w)?,
        SpinMethod::Series => {
            let correction = f_of_ad_series(&PowerSeriesSpec::sigma(), &hencky(&b), &d)?.value;
            SkewMatrix::new(w.as_matrix().try_sub(&correction)?)?
        }
        SpinMethod::Both => {
            let c = log_spin_commutator(&b, &d, &w)?;
            let p = log_spin_spectral(&b, &d, &w, DEFAULT_CLUSTER_TOL)?;
            out.insert("method_discrepancy".into(), p.try_sub(&c)?.frobenius_norm().into());
            c
        }
    };
    out.insert("omega_log".into(), serde_json::to_value(omega.as_matrix())?);
    let mut text = serde_json::to_string_pretty(&out)?;
    text.push('\n');
    Ok(text)
}

/// Runs the configured suite; returns the table and whether every row passed.
pub fn cmd_verify(cfg: &RunConfig) -> Result<(String, Vec<String>), CliError> {
    let ctx = VerifyContext { seed: cfg.seed, trials: cfg.trials, tol: cfg.tol };
    let rows = run_suite(cfg.suite, &ctx)?;
    let mut table = format!("suite={} seed={} trials={}\n", cfg.suite, cfg.seed, cfg.trials);
    let _ = writeln!(table, "{:<13} {:<58} {:>11}    {:<9} result", "suite", "identity", "value", "threshold");
    let mut failed = Vec::new();
    for row in &rows {
        let _ = writeln!(table, "{row}");
        if !row.pass {
            failed.push(format!("{}: {}", row.suite, row.identity));
        }
    }
    let _ = writeln!(table, "{} of {} identities pass", rows.len() - failed.len(), rows.len());
    Ok((table, failed))
}

pub const CSV_HEADER: &str = "t,res_eq5,res_eq40,spin_agreement,det_F";

/// The trajectory CSV for `samples`.
pub fn trajectory_csv(samples: &[MotionSample]) -> String {
    let mut out = String::with_capacity(96 * (samples.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for s in samples {
        let _ = writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            s.t, s.residual_eq5, s.residual_eq40, s.spin_agreement, s.det_f
        );
    }
    out
}

/// Integrates the configured motion; returns the CSV and a summary.
pub fn cmd_simulate(cfg: &RunConfig, f0: Option<Matrix>) -> Result<(String, String), CliError> {
    let field = cfg.motion.field(cfg.dim, cfg.kappa, cfg.seed)?;
    let f0 = f0.unwrap_or_else(|| Matrix::identity(cfg.dim));
    let samples = integrate_motion(&field, &f0, cfg.t_end, cfg.dt, cfg.record_every)?;
    let max = |f: fn(&MotionSample) -> f64| samples.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    let min_det = samples.iter().map(|s| s.det_f).fold(f64::INFINITY, f64::min);
    let summary = format!(
        "motion={} samples={}\nmax res_eq5 {:.6e}\nmax res_eq40 {:.6e}\nmax spin_agreement {:.6e}\nmin det_F {:.6e}\n",
        cfg.motion,
        samples.len(),
        max(|s| s.residual_eq5),
        max(|s| s.residual_eq40),
        max(|s| s.spin_agreement),
        min_det
    );
    Ok((trajectory_csv(&samples), summary))
}

/// Mean time per call of each spin form and their largest discrepancy.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub dim: usize,
    pub trials: u64,
    pub spectral_us: f64,
    pub commutator_us: f64,
    pub max_discrepancy: f64,
}

pub fn bench_rows(dims: &[usize], trials: u64, seed: u64) -> Result<Vec<BenchRow>, CliError> {
    let mut rows = Vec::new();
    for &dim in dims {
        if dim == 0 || dim > 16 {
            return Err(Error::InvalidArgument(format!("bench dims must be in 1..=16, got {dim}")).into());
        }
        let fixtures: Vec<(SpdMatrix, SymMatrix, SkewMatrix)> = (0..trials)
            .map(|t| {
                let mut rng = TrialRng::new(seed, t);
                (rng.spd(dim, 1e3), rng.symmetric(dim, 1.0), rng.skew(dim, 1.0))
            })
            .collect();
        let start = Instant::now();
        let spectral: Vec<SkewMatrix> =
            fixtures.iter().map(|(b, d, w)| log_spin_spectral(b, d, w, DEFAULT_CLUSTER_TOL)).collect::<Result<_, _>>()?;
        let t_spec = start.elapsed();
        let start = Instant::now();
        let commutator: Vec<SkewMatrix> =
            fixtures.iter().map(|(b, d, w)| log_spin_commutator(b, d, w)).collect::<Result<_, _>>()?;
        let t_comm = start.elapsed();
        let mut worst: f64 = 0.0;
        for ((p, c), (_, d, _)) in spectral.iter().zip(&commutator).zip(&fixtures) {
            worst = worst.max(p.try_sub(c)?.frobenius_norm() / (1.0 + d.frobenius_norm()));
        }
        let per = |d: std::time::Duration| d.as_secs_f64() * 1e6 / trials.max(1) as f64;
        rows.push(BenchRow { dim, trials, spectral_us: per(t_spec), commutator_us: per(t_comm), max_discrepancy: worst });
    }
    Ok(rows)
}

pub fn bench_table(rows: &[BenchRow]) -> String {
    let mut out = format!("{:>4} {:>8} {:>14} {:>14} {:>16}\n", "dim", "trials", "spectral_us", "commutator_us", "max_discrepancy");
    for r in rows {
        let _ = writeln!(
            out,
            "{:>4} {:>8} {:>14.3} {:>14.3} {:>16.3e}",
            r.dim, r.trials, r.spectral_us, r.commutator_us, r.max_discrepancy
        );
    }
    out
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.merge_text(&read(path)?)?;
    }
    if let Some(tol) = cli.tol {
        cfg.tol = tol;
    }
    Ok(cfg)
}

fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg = load_config(&cli)?;
    let io = |e: std::io::Error| CliError::WriteOutput { path: PathBuf::from("<stdout>"), source: e };
    match cli.command {
        Command::Spin(a) => {
            if let Some(m) = a.method {
                cfg.method = m;
            }
            let text = cmd_spin(&read(&a.input)?, cfg.method)?;
            match a.out {
                Some(path) => write_file(&path, &text)?,
                None => out.write_all(text.as_bytes()).map_err(io)?,
            }
        }
        Command::Verify(a) => {
            cfg.suite = a.suite.unwrap_or(cfg.suite);
            cfg.seed = a.seed.unwrap_or(cfg.seed);
            cfg.trials = a.trials.unwrap_or(cfg.trials);
            let start = Instant::now();
            let (table, failed) = cmd_verify(&cfg)?;
            out.write_all(table.as_bytes()).map_err(io)?;
            let _ = writeln!(err, "elapsed {:.2} s", start.elapsed().as_secs_f64());
            if !failed.is_empty() {
                return Err(CliError::VerifyFailed(failed.join("; ")));
            }
        }
        Command::Simulate(a) => {
            cfg.motion = a.motion.unwrap_or(cfg.motion);
            cfg.kappa = a.kappa.unwrap_or(cfg.kappa);
            cfg.dt = a.dt.unwrap_or(cfg.dt);
            cfg.t_end = a.t_end.unwrap_or(cfg.t_end);
            cfg.record_every = a.record_every.unwrap_or(cfg.record_every);
            cfg.dim = a.dim.unwrap_or(cfg.dim);
            cfg.seed = a.seed.unwrap_or(cfg.seed);
            if let Some(p) = a.out {
                cfg.output_path = p.to_string_lossy().into_owned();
            }
            let f0 = match &a.f0 {
                Some(path) => Some(serde_json::from_str::<Matrix>(&read(path)?)?),
                None => None,
            };
            let (csv, summary) = cmd_simulate(&cfg, f0)?;
            if cfg.output_path.is_empty() {
                out.write_all(csv.as_bytes()).map_err(io)?;
                err.write_all(summary.as_bytes()).map_err(io)?;
            } else {
                write_file(Path::new(&cfg.output_path), &csv)?;
                out.write_all(summary.as_bytes()).map_err(io)?;
            }
        }
        Command::Bench(a) => {
            cfg.trials = a.trials.unwrap_or(cfg.trials);
            cfg.seed = a.seed.unwrap_or(cfg.seed);
            let rows = bench_rows(&a.dims, cfg.trials, cfg.seed)?;
            out.write_all(bench_table(&rows).as_bytes()).map_err(io)?;
        }
    }
    Ok(())
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let sink: &mut dyn Write = if code == 0 { out } else { err };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match execute(cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
