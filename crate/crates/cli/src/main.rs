//! `mopkit` command-line driver.

mod commands;
mod setup;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use setup::SystemArgs;

#[derive(Parser, Debug)]
#[command(name = "mopkit", version, about = "Multiple orthogonal polynomial experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Type II polynomial and type I vector at one multi-index (JSON).
    Poly(PolyArgs),
    /// Recurrence matrix as sparse (row, col, value) triplets (CSV).
    Jmatrix(JmatrixArgs),
    /// Moment gaps between zero counting and kernel measures (CSV).
    Gaps(GapsArgs),
    /// Asymptotic experiments.
    #[command(subcommand)]
    Asymptotics(AsymptoticsCommand),
    /// Christoffel-Darboux kernel diagnostics.
    #[command(subcommand)]
    Kernel(KernelCommand),
    /// Nevai operator experiments.
    #[command(subcommand)]
    Nevai(NevaiCommand),
    /// Discretized vector equilibrium problems.
    #[command(subcommand)]
    Equilibrium(EquilibriumCommand),
    /// Bounded-diagonal profile, interlacing and positivity in one report.
    Diagnose(DiagnoseArgs),
}

#[derive(Subcommand, Debug)]
enum AsymptoticsCommand {
    Gaps(GapsArgs),
}

#[derive(Subcommand, Debug)]
enum KernelCommand {
    /// `K_n(x, x)` over a support grid.
    Diag(KernelDiagArgs),
    /// Kernel determinants on seeded random increasing tuples.
    Detpos(DetposArgs),
}

#[derive(Subcommand, Debug)]
enum NevaiCommand {
    /// `G_n[y^k](x)` for several `n`, with the ratio table and sign census.
    Run(NevaiArgs),
}

#[derive(Subcommand, Debug)]
enum EquilibriumCommand {
    Solve(EquilibriumArgs),
}

#[derive(Args, Debug)]
struct PolyArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Multi-index such as "2,1".
    #[arg(long, conflicts_with = "step")]
    index: Option<String>,
    /// Position along the path instead of an explicit multi-index.
    #[arg(long)]
    step: Option<usize>,
    #[arg(long, value_enum, default_value = "both")]
    kind: PolyKind,
    /// Isolate the real zeros of the type II polynomial.
    #[arg(long)]
    roots: bool,
    /// Width of the root isolating intervals, as a power of two.
    #[arg(long, default_value_t = 64)]
    root_bits: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PolyKind {
    Type1,
    Type2,
    Both,
}

#[derive(Args, Debug)]
struct JmatrixArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Number of rows.
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Build from nearest-neighbour recurrence coefficients instead of the pairing.
    #[arg(long)]
    nnrr: bool,
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Args, Debug)]
struct GapsArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Largest n; every n in 1..=nmax is tabulated unless --ns is given.
    #[arg(long, default_value_t = 32)]
    nmax: usize,
    #[arg(long, value_delimiter = ',')]
    ns: Vec<usize>,
    #[arg(long, default_value_t = 4)]
    lmax: usize,
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Args, Debug)]
struct KernelDiagArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, value_delimiter = ',', default_value = "10")]
    n: Vec<usize>,
    /// Number of midpoints on the support.
    #[arg(long, default_value_t = 200)]
    grid: usize,
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Args, Debug)]
struct DetposArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, value_delimiter = ',', default_value = "5")]
    n: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    tuples: usize,
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Args, Debug)]
struct NevaiArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Evaluation point (rational or decimal).
    #[arg(long, allow_hyphen_values = true)]
    x: String,
    /// Power of the test function `y^k`.
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, value_delimiter = ',', default_value = "15,30,60")]
    n: Vec<usize>,
    /// Width of the ratio table window.
    #[arg(long, default_value_t = 3)]
    width: usize,
    /// Points used by the product sign scan.
    #[arg(long, default_value_t = 200)]
    grid: usize,
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum EquilibriumPreset {
    Angelesco,
    Nikishin,
}

#[derive(Args, Debug)]
struct EquilibriumArgs {
    #[arg(long, value_enum, default_value = "angelesco")]
    preset: EquilibriumPreset,
    /// Intervals separated by ';', e.g. "-1,0;0,1".
    #[arg(long, allow_hyphen_values = true, default_value = "-1,0;0,1")]
    intervals: String,
    /// Path direction, e.g. "1/2,1/2"; defaults to equal shares.
    #[arg(long)]
    s: Option<String>,
    #[arg(long, default_value_t = 400)]
    grid: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
    /// Moments of the limit measure reported in the summary.
    #[arg(long, default_value_t = 4)]
    lmax: usize,
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Args, Debug)]
struct DiagnoseArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, default_value_t = 20)]
    nmax: usize,
    /// Offsets below the diagonal in the bounded-diagonal profile.
    #[arg(long, default_value_t = 4)]
    radius: usize,
    #[arg(long, default_value_t = 200)]
    grid: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            let code = e.downcast_ref::<mopkit::Error>().map(|m| m.code()).unwrap_or("E_USAGE");
            let body = serde_json::json!({ "error": { "code": code, "message": format!("{e:#}") } });
            eprintln!("{body}");
            ExitCode::FAILURE
        }
    }
}
