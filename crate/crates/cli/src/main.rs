use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod manifest;
#[cfg(test)]
mod tests;

#[derive(Debug, Parser)]
#[command(
    name = "spectra4",
    version,
    about = "Eigenvalues of a fourth-order problem with a coefficient jump and spectral-parameter dependent conditions"
)]
struct Cli {
    /// Worker threads (falls back to SPECTRA4_JOBS, then the number of CPUs).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Locate real eigenvalues by shooting.
    Solve(SolveArgs),
    /// Sample the characteristic function on an s-grid.
    Charfun(CharfunArgs),
    /// Asymptotic eigenvalue grids and matching.
    Asym(AsymArgs),
    /// Finite-difference matrix eigenvalues.
    Oracle(OracleArgs),
    /// Run every consistency check.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Problem configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Relative accuracy of every ODE integration.
    #[arg(long, default_value_t = 1e-10)]
    accuracy: f64,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 0.0)]
    s_min: f64,
    #[arg(long, default_value_t = 20.0)]
    s_max: f64,
    /// Scan the negative axis down to lambda = -t^4.
    #[arg(long, default_value_t = 4.0)]
    neg_t_max: f64,
    #[arg(long, default_value_t = 8)]
    samples_per_half_wave: usize,
    #[arg(long, default_value_t = 1e-10)]
    refine_tol: f64,
    #[arg(long, default_value_t = 1e-8)]
    cluster_tol: f64,
    #[arg(long, default_value_t = -0.5, allow_hyphen_values = true)]
    x_eval: f64,
    /// Export sampled eigenfunctions for the first COUNT eigenvalues.
    #[arg(long, value_name = "COUNT", default_value_t = 0)]
    eigenfunctions: usize,
}

#[derive(Debug, Args)]
struct CharfunArgs {
    #[command(flatten)]
    common: Common,
    /// `start:stop:step` in s; negative s samples lambda = -s^4.
    #[arg(long, allow_hyphen_values = true)]
    s_grid: String,
    #[arg(long, default_value_t = -0.5, allow_hyphen_values = true)]
    x_eval: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FamilyArg {
    Prime,
    DoublePrime,
    Both,
}

#[derive(Debug, Args)]
struct AsymArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    n_max: usize,
    #[arg(long, value_enum, default_value_t = FamilyArg::Both)]
    family: FamilyArg,
    /// Spectrum JSON (from `solve`) to annotate; written to `<out>.matched.json`.
    #[arg(long = "match", value_name = "SPECTRUM", requires = "out")]
    match_spectrum: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Interior points per half-interval.
    #[arg(long, default_value_t = 200)]
    n: usize,
    /// Number of smallest-magnitude eigenvalues to report.
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Write `<PREFIX>.A.csv` and `<PREFIX>.B.csv`.
    #[arg(long, value_name = "PREFIX")]
    dump_matrix: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Also run the integral-equation diagnostics with q = 1, s = 3.
    #[arg(long)]
    volterra: bool,
    #[arg(long, default_value_t = 400)]
    oracle_n: usize,
    #[arg(long, default_value_t = 50.0)]
    s_max: f64,
}

/// Bad input from the user: exit status 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub enum Outcome {
    Success,
    VerificationFailed,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use spectra4::Error as E;
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::ConfigSyntax(_) | E::Constraint(_) | E::Expr(_) | E::InvalidArgument(_) => 1,
                _ => 2,
            };
        }
    }
    2
}

fn jobs(flag: Option<usize>, env: Option<String>) -> Result<usize, UsageError> {
    match (flag, env) {
        (Some(n), _) => Ok(n),
        (None, Some(v)) => v
            .trim()
            .parse()
            .map_err(|_| UsageError(format!("SPECTRA4_JOBS={v:?} is not a worker count"))),
        (None, None) => Ok(0),
    }
}

fn run(cli: Cli) -> Result<Outcome> {
    let jobs = jobs(cli.jobs, std::env::var("SPECTRA4_JOBS").ok())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("building the worker pool")?;
    let threads = pool.current_num_threads();
    pool.install(|| match cli.command {
        Command::Solve(a) => commands::solve(a, threads),
        Command::Charfun(a) => commands::charfun(a, threads),
        Command::Asym(a) => commands::asym(a, threads),
        Command::Oracle(a) => commands::oracle(a, threads),
        Command::Verify(a) => commands::verify(a, threads),
    })
}

/// Parses `args` and runs the command; returns the process exit status.
fn execute<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(Outcome::Success) => 0,
        Ok(Outcome::VerificationFailed) => 3,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(execute(std::env::args_os()))
}
