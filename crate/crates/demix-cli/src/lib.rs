//! Command-line front end for the demix estimators.
//!
//! Subcommands: `poly` (orthonormal coefficient tables), `estimate`
//! (projection estimator from a histogram), `deconv` (discrete
//! deconvolution), `uniform` (uniform-mixture estimator), `bounds`
//! (minimax lower/upper bound scan) and `simulate` (Monte Carlo harness
//! driven by a key=value config file).
//!
//! Exit codes: 0 success, 2 validation error (bad flags, bad files), 1
//! runtime error. All CSV output carries headers and prints floats with 17
//! significant digits, so values round-trip exactly.

pub mod args;
pub mod commands;
pub mod config;
pub mod hist;

use std::io::Write;

/// Formats a float with 17 significant digits (round-trip safe).
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Resolves the worker cap: DEMIX_THREADS if set, else the machine's
/// parallelism. Affects speed only, never results.
pub fn worker_count() -> usize {
    if let Ok(v) = std::env::var("DEMIX_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                return n;
            }
        }
    }
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

/// Writes `content` to the path, or stdout when `out` is None.
pub fn write_output(out: Option<&str>, content: &str) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, content),
        None => std::io::stdout().write_all(content.as_bytes()),
    }
}

const USAGE: &str = "usage: demix <poly|estimate|deconv|uniform|bounds|simulate> [flags]
  poly      --measure legendre|lebesgue|laguerre|laguerre2 [--a A --b B] --m M [--weights factorial] [--out PATH]
  estimate  --family poisson|negbinomial [--shape S] --a A --b B --m M --data hist.csv [--halfline] [--clip] [--out PATH]
  deconv    --noise noise.csv --data hist.csv --kmin K --kmax K [--out PATH]
  uniform   --m M --data hist.csv [--out PATH]
  bounds    --family poisson [--shape S] --a A --b B --alpha A --C C --r R --n N --m-scan LO..HI [--K K] [--out PATH]
  simulate  --config sim.cfg [--seed S] [--out PATH]
";

/// Dispatches a full argv (including the program name). Returns the process
/// exit code.
pub fn run(argv: &[String]) -> i32 {
    let Some(sub) = argv.get(1) else {
        eprintln!("{USAGE}");
        return 2;
    };
    let rest = &argv[2..];
    let parsed = match args::Args::parse(rest) {
        Ok(p) => p,
        Err(msg) => {
            eprintln!("error: {msg}");
            eprintln!("{USAGE}");
            return 2;
        }
    };
    let result = match sub.as_str() {
        "poly" => commands::run_poly(&parsed),
        "estimate" => commands::run_estimate(&parsed),
        "deconv" => commands::run_deconv(&parsed),
        "uniform" => commands::run_uniform(&parsed),
        "bounds" => commands::run_bounds(&parsed),
        "simulate" => commands::run_simulate(&parsed),
        other => {
            eprintln!("error: unknown subcommand `{other}`");
            eprintln!("{USAGE}");
            return 2;
        }
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// CLI-level error carrying the exit-code classification.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, unreadable or malformed inputs: exit 2.
    Validation(String),
    /// Failures while computing or writing: exit 1.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Runtime(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<demix::DemixError> for CliError {
    fn from(e: demix::DemixError) -> Self {
        use demix::DemixError::*;
        match e {
            Domain(_) | InvalidMeasure(_) | Config(_) | EmptyCounts => {
                CliError::Validation(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("io: {e}"))
    }
}
