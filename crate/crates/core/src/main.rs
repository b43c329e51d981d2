use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use freesurf::harness::commands::{cmd_oracle, cmd_report, cmd_run, cmd_verify};
use freesurf::harness::oracle::OracleConfig;
use freesurf::harness::run::{Overrides, RunConfig};
use freesurf::harness::verify::{Corpus, VerifyConfig, DEFAULT_TOLERANCE};

/// Free-boundary Euler laboratory: runs, oracles, inequality checks and reports.
#[derive(Parser)]
#[command(name = "freesurf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a scenario and write diagnostics.csv, summary.json and mesh snapshots.
    Run(RunArgs),
    /// Check the inequality suite over the built-in corpus.
    Verify(VerifyArgs),
    /// Compare against analytic oracles (DtN eigenvalues, ball Green's function, Poisson).
    Oracle(OracleArgs),
    /// Write series.csv and a text summary for an existing run directory.
    Report(ReportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario JSON file.
    scenario: PathBuf,
    /// Run directory (default runs/<scenario name>).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Replace an existing run directory.
    #[arg(long)]
    force: bool,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long = "k-max")]
    k_max: Option<f64>,
    #[arg(long)]
    taylor_min: Option<f64>,
    /// Disable the Taylor-sign monitor.
    #[arg(long, conflicts_with = "taylor_min")]
    no_taylor: bool,
    #[arg(long)]
    quality_floor: Option<f64>,
    /// Also write fields_final.csv (cell, x, y, z, u, ω on inside cells).
    #[arg(long)]
    export_fields: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value = "default")]
    corpus: Corpus,
    /// Relative slack of the Bernstein comparison.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value = ".")]
    output: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    /// Icosphere subdivision level.
    #[arg(long, default_value_t = 4)]
    subdiv: u32,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value = ".")]
    output: PathBuf,
    /// Print the test inventory and exit.
    #[arg(long)]
    list: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Run directory written by `freesurf run`.
    dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run(a) => cmd_run(&RunConfig {
            scenario: a.scenario,
            output: a.output,
            force: a.force,
            overrides: Overrides {
                dt: a.dt,
                h: a.h,
                t_end: a.t_end,
                k_max: a.k_max,
                taylor_min: a.taylor_min,
                quality_floor: a.quality_floor,
                no_taylor: a.no_taylor,
            },
            export_fields: a.export_fields,
        }),
        Command::Verify(a) => {
            if !(a.tolerance >= 0.0) {
                eprintln!("error: tolerance must be non-negative");
                return ExitCode::from(1);
            }
            cmd_verify(&VerifyConfig { corpus: a.corpus, tolerance: a.tolerance, seed: a.seed }, &a.output)
        }
        Command::Oracle(a) => {
            let config = OracleConfig { subdiv: a.subdiv, seed: a.seed, ..Default::default() };
            cmd_oracle(&config, &a.output, a.list)
        }
        Command::Report(a) => cmd_report(&a.dir),
    };
    ExitCode::from(code as u8)
}
