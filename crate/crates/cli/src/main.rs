//! `shear-transport`: runs the transport experiments from a JSON config and
//! writes CSV, JSON or a text table.
//!
//! Exit codes: 0 on success, 1 for configuration or usage errors, 2 when a
//! computation fails.

mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};
use config::ExperimentConfig;
use output::{Emit, Report};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "shear-transport", version, about = "Adiabatic charge transport in sheared rings and helices")]
struct Cli {
    /// JSON experiment configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    emit: Emit,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; all cores when omitted.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for the random probes of the minimizer.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Charge per cycle over a grid of loop radii.
    TransportSweep,
    /// Chern numbers and opening orders of every gap of the helix.
    ChernTable,
    /// Scaling of the adiabatic operator identity with the time scale.
    EvolveCheck,
    /// Minimizers of the shear-flux energy.
    Jt,
    /// Band structure of the sheared helix.
    BandData,
    /// Sign change of a real eigenvector around each loop.
    LhPhase,
}

fn write_report(report: &Report, emit: Emit, out: Option<&PathBuf>) -> Result<(), CliError> {
    let io_err = |e: std::io::Error| CliError::Config(format!("cannot write output: {e}"));
    match out {
        Some(path) => {
            let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?);
            report.write(emit, &mut f).map_err(io_err)?;
            f.flush().map_err(io_err)
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            match report.write(emit, &mut lock) {
                // a closed pipe (`| head`) is not a failure of the run
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                r => r.map_err(io_err),
            }
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Config(e.to_string()))?;
    }
    let out = cli.out.as_ref().or(cfg.output.path.as_ref());
    let mut deferred = None;
    let report = match cli.command {
        Command::TransportSweep => commands::transport_sweep(&cfg)?,
        Command::ChernTable => {
            let (report, failures) = commands::chern_table(&cfg)?;
            if !failures.is_empty() {
                deferred = Some(CliError::Numerical(failures.join("; ")));
            }
            report
        }
        Command::EvolveCheck => commands::evolve_check(&cfg)?,
        Command::Jt => commands::jt(&cfg, cli.seed)?,
        Command::BandData => commands::band_data(&cfg)?,
        Command::LhPhase => commands::lh_phase(&cfg)?,
    };
    write_report(&report, cli.emit, out)?;
    deferred.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
