// SPDX-License-Identifier: MIT OR Apache-2.0

//! Command-line front end: CSV ingestion, subcommand dispatch and report
//! emission. The binary in `main.rs` only maps results to exit codes.

pub mod commands;
pub mod error;
pub mod ingest;
pub mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::run;
pub use error::{CliError, Result};
pub use ingest::{ingest_csv, parse_csv, write_csv, Orientation};
pub use report::{emit, Format, Histogram, Report, Verdict};

#[derive(Debug, Parser)]
#[command(name = "corrcp", version, about = "Detect and locate a change in the correlation matrix of a multivariate series")]
pub struct Cli {
    /// Worker threads for the parallel kernels (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test for a change point.
    Detect(DataArgs),
    /// Estimate the change-point location.
    Estimate(DataArgs),
    /// Estimate a late change point with SMOTE tail inflation.
    SmoteEstimate(DataArgs),
    /// Run a Monte Carlo experiment on a simulated scenario.
    Simulate(SimArgs),
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Report destination; stdout when omitted. CSV reports also write one
    /// `<stem>_<curve>.csv` file per curve next to it.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Required unless the file starts with `# orientation: ...`.
    #[arg(long, value_enum)]
    pub orientation: Option<Orientation>,
    /// Signflip trials q (default 30 for detection, 20 for estimation).
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, default_value_t = 0.95)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Detection: spad | dette. Estimation: space | dette | kcp.
    #[arg(long)]
    pub method: Option<String>,
    /// SMOTE minority fraction boundary.
    #[arg(long, default_value_t = 0.9)]
    pub gamma: f64,
    /// SMOTE convergence tolerance on the estimated fraction.
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 25)]
    pub max_iterations: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    /// Flat `key=value` scenario file; explicit flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Case number 0-9 (0 is the no-change scenario).
    #[arg(long = "case")]
    pub case_id: Option<u8>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long = "T")]
    pub len: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// gaussian | student_t
    #[arg(long)]
    pub dist: Option<String>,
    /// spad | space | smote_space | dette | dette_detect | kcp | spad_smote
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long, default_value_t = 200)]
    pub replications: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, default_value_t = 0.95)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.9)]
    pub gamma: f64,
    /// SMOTE tolerance (default 1e-3), or the rate tolerance for
    /// `spad_smote` (default 0.05).
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Keep per-replication records in the report.
    #[arg(long)]
    pub records: bool,
    /// Also write one draw of the scenario as CSV.
    #[arg(long)]
    pub write_data: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// Parses, runs inside a pool of the requested size and returns the text
/// destined for stdout.
pub fn execute(cli: &Cli) -> Result<Option<String>> {
    match cli.threads {
        Some(0) => Err(CliError::Usage("--threads must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(e.to_string()))?
            .install(|| run(&cli.command)),
        None => run(&cli.command),
    }
}
