//! `lebrun`: evaluation, scans, fits and the verification suite.

mod commands;
mod output;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use lebrun_core::Error;

#[derive(Parser, Debug)]
#[command(name = "lebrun", version, about = "Verification toolkit for the LeBrun Ricci-flat metrics on C²")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct PointArgs {
    /// Implicit coordinates `U,V`.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true, conflicts_with = "zpoint")]
    pub point: Option<(f64, f64)>,
    /// Complex point `re1,im1,re2,im2`.
    #[arg(long, value_parser = parse_quad, allow_hyphen_values = true)]
    pub zpoint: Option<[f64; 4]>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Forward map (U,V) -> (|z1|², |z2|²) and its inverse.
    Coords {
        #[arg(long, allow_negative_numbers = true)]
        m: f64,
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, default_value_t = 1e-14)]
        tol: f64,
    },
    /// Metric, inverse, determinant and comparison metric.
    Metric {
        #[arg(long, allow_negative_numbers = true)]
        m: f64,
        #[command(flatten)]
        point: PointArgs,
    },
    /// Curvature tensor, Ricci form, |R|² and Δ|R|².
    Curvature {
        #[arg(long, allow_negative_numbers = true)]
        m: f64,
        #[command(flatten)]
        point: PointArgs,
    },
    /// Density function ε at a point, or its deviation over a grid.
    Epsilon {
        #[arg(long, allow_negative_numbers = true)]
        m: f64,
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[command(flatten)]
        point: PointArgs,
        /// Relative truncation tolerance of the kernel series.
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Evaluate on an n×n grid of [0, grid-max]² instead of a single point.
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        grid_max: f64,
    },
    /// Exact coefficients of e^{αΦ} in (|z1|², |z2|²).
    Series {
        /// Exact rational, e.g. 3/5 or 0.6.
        #[arg(long, allow_hyphen_values = true)]
        m: String,
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
        /// Total degree of the truncation.
        #[arg(long = "max-degree", default_value_t = 4)]
        max_degree: u32,
    },
    /// h_α and the norm ratio over an m-grid.
    BalancedScan {
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, allow_negative_numbers = true)]
        m_min: f64,
        #[arg(long, allow_negative_numbers = true)]
        m_max: f64,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        /// Prepend the flat row m = 0.
        #[arg(long)]
        include_zero: bool,
        /// Also report max |ε(p) - ε(0)|/ε(0) over an n×n grid of [0,1]².
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Fit π²ε - α² ≈ c2 + c3/α over a ladder of α.
    EnglisFit {
        #[arg(long, allow_negative_numbers = true)]
        m: f64,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        alphas: Vec<f64>,
        #[arg(long, value_parser = parse_pair, default_value = "0,0")]
        point: (f64, f64),
        #[arg(long, default_value_t = 1e-14)]
        tol: f64,
    },
    /// g ≥ g̃ and the tangent-form inequality over a grid of roots (u,v).
    CheckCompleteness {
        #[arg(long, allow_negative_numbers = true)]
        m: f64,
        /// Points per axis.
        #[arg(long, default_value_t = 11)]
        grid: usize,
        /// Largest root: the grid covers U = a², V = b² for a, b in [0, umax].
        #[arg(long, default_value_t = 5.0)]
        umax: f64,
    },
    /// Run the acceptance checks.
    Verify {
        /// Run only these criteria (repeatable).
        #[arg(long)]
        criterion: Vec<u32>,
        /// Include per-check wall-clock times.
        #[arg(long)]
        timings: bool,
        #[arg(long, value_enum, hide = true)]
        mutate: Option<MutateArg>,
    },
    /// Print the JSON schema of the output.
    Schema,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MutateArg {
    Metric,
    Curvature,
}

fn parse_floats(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("'{t}': {e}")))
        .collect::<Result<_, _>>()?;
    if v.len() != n {
        return Err(format!("expected {n} comma-separated numbers, got {}", v.len()));
    }
    Ok(v)
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let v = parse_floats(s, 2)?;
    Ok((v[0], v[1]))
}

fn parse_quad(s: &str) -> Result<[f64; 4], String> {
    let v = parse_floats(s, 4)?;
    Ok([v[0], v[1], v[2], v[3]])
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
    /// Output already rendered; checks failed.
    Verification,
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::Domain(_) => CliError::Usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

fn emit(text: &str, out: &Option<PathBuf>) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be >= 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    let result = commands::run(&cli.command).and_then(|(out, status)| {
        let text = match cli.format {
            Format::Json => output::render_json(&out),
            Format::Csv => output::render_csv(&out).map_err(|e| CliError::Io(e.to_string()))?,
        };
        emit(&text, &cli.out)?;
        status
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Verification) => ExitCode::from(1),
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Numerical(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
        Err(CliError::Io(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
