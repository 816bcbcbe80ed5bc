mod config;
mod run;

use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;
use volterra_ergodic::verify::SUITES;

pub const EXIT_FAIL: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "volterra", version, about = "Simulate self-similar Volterra processes, apply Z^alpha, run the verification suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Process {
    Fbm,
    Nalpha,
    Bridge,
    Mh,
    Yh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Kernel synthesis from Brownian increments.
    Kernel,
    /// Exact Gaussian sampling from the covariance (fbm and nalpha only).
    Cholesky,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Fbm,
    Markov,
    Nalpha,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample paths and write them as CSV.
    Simulate {
        #[arg(long, value_enum)]
        process: Process,
        #[arg(long)]
        hurst: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<f64>,
        /// Horizon T.
        #[arg(long = "T", default_value_t = 1.0)]
        horizon: f64,
        /// Cells on [0, T].
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        paths: usize,
        #[arg(long, env = "VOLTERRA_SEED", default_value_t = 7)]
        seed: u64,
        /// Extend the grid geometrically to T·ext (needed by `transform --inverse`).
        #[arg(long, default_value_t = 1.0)]
        ext: f64,
        #[arg(long, value_enum, default_value_t = Method::Kernel)]
        method: Method,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply Z^alpha, its inverse or an iterate to a path CSV.
    Transform {
        /// Input CSV ("-" for standard input).
        #[arg(long)]
        input: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        /// Self-similarity index; read from the metadata line when absent.
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        inverse: bool,
        /// Number of applications; negative values apply the inverse.
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        iterate: i32,
        /// Horizon T of the inverse output.
        #[arg(long = "T", default_value_t = 1.0)]
        horizon: f64,
        /// Cut the input at this time before inverting (a grid point).
        #[arg(long)]
        t_ext: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a verification suite and write its JSON report.
    Verify {
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(SUITES))]
        suite: String,
        #[arg(long, env = "VOLTERRA_SEED", default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Record wall times (the report is then no longer reproducible byte for byte).
        #[arg(long)]
        timing: bool,
    },
    /// Print z(t, s) at full precision.
    KernelEval {
        #[arg(long, value_enum, default_value_t = KernelKind::Fbm)]
        kernel: KernelKind,
        #[arg(long)]
        hurst: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        s: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate { process, hurst, alpha, horizon, n, paths, seed, ext, method, out } => {
            config::RunConfig::simulate(process, hurst, alpha, horizon, n, paths, seed, ext, method, out)
                .and_then(|c| run::simulate(&c))
        }
        Command::Transform { input, alpha, beta, inverse, iterate, horizon, t_ext, out } => {
            config::RunConfig::transform(input, alpha, beta, inverse, iterate, horizon, t_ext, out)
                .and_then(|c| run::transform(&c))
        }
        Command::Verify { suite, seed, out, timing } => {
            run::verify(&config::RunConfig::verify(suite, seed, out, timing))
        }
        Command::KernelEval { kernel, hurst, alpha, beta, c, t, s } => {
            config::kernel_spec(kernel, hurst, alpha, beta, c).and_then(|k| run::kernel_eval(&k, t, s))
        }
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() { EXIT_NUMERIC } else { EXIT_USAGE })
        }
    }
}
