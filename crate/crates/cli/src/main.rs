mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use pagc_core::seed::SeedStream;

use config::{Engine, ExperimentConfig};
use output::Output;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] pagc_core::error::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Parser)]
#[command(name = "pagc", version, about = "Percolation experiments on preferential attachment graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `master_seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: config `output`, else `.`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// rho(alpha) on a grid with alpha*, rho*, rho''(alpha*), p_c.
    SpectralTable,
    /// beta_c(gamma) and gamma_c(beta) on the configured grids.
    CriticalLine,
    /// Grow one graph and write its edge list.
    GenerateGraph,
    /// Largest component of one graph under coupled percolation.
    Percolate,
    /// theta(p) from the graph, the killed walk, or both.
    ThetaCurve {
        #[arg(long, value_enum)]
        engine: Option<Engine>,
    },
    /// Fit log theta against control^(-1/2) and compare with theory.
    FitDecay,
    /// Galton-Watson survival bound and growth envelope.
    GwCheck,
    /// Corridor probability rate against the strip limit.
    MogulskiiCheck,
    /// Property suite; exits nonzero on any failure.
    Checks,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::SpectralTable => "spectral-table",
            Command::CriticalLine => "critical-line",
            Command::GenerateGraph => "generate-graph",
            Command::Percolate => "percolate",
            Command::ThetaCurve { .. } => "theta-curve",
            Command::FitDecay => "fit-decay",
            Command::GwCheck => "gw-check",
            Command::MogulskiiCheck => "mogulskii-check",
            Command::Checks => "checks",
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    let name = cli.command.name();
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::parse(&std::fs::read(p)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.master_seed = Some(s);
    }
    if let Some(t) = cli.threads {
        cfg.threads = Some(t);
    }
    if let Command::ThetaCurve { engine: Some(e) } = cli.command {
        cfg.engine = e;
    }
    cfg.validate(name)?;
    configure_threads(cfg.threads)?;

    let dir = cli.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("."));
    let mut out = Output::new(dir, name, cfg.hash())?;
    let seeds = SeedStream::new(cfg.seed(), name);
    let start = Instant::now();
    let mut code = ExitCode::SUCCESS;
    match cli.command {
        Command::SpectralTable => commands::spectral_table(&cfg, &mut out)?,
        Command::CriticalLine => commands::critical_line(&cfg, &mut out)?,
        Command::GenerateGraph => commands::generate_graph(&cfg, &mut out, &seeds)?,
        Command::Percolate => commands::percolate(&cfg, &mut out, &seeds)?,
        Command::ThetaCurve { .. } => commands::theta(&cfg, cfg.engine, &mut out, &seeds)?,
        Command::FitDecay => commands::fit(&cfg, &mut out, &seeds)?,
        Command::GwCheck => commands::gw(&cfg, &mut out, &seeds)?,
        Command::MogulskiiCheck => commands::mogulskii(&cfg, &mut out, &seeds)?,
        Command::Checks => {
            let failed = commands::checks(&cfg, &mut out, &seeds)?;
            if failed > 0 {
                eprintln!("{failed} check(s) failed");
                code = ExitCode::FAILURE;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    out.finish(cfg.seed(), cfg.threads, commands::execution_label(cfg.exec()), secs)?;
    Ok(code)
}

#[cfg(feature = "parallel")]
fn configure_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(k) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn configure_threads(threads: Option<usize>) -> Result<(), CliError> {
    if threads.is_some_and(|k| k > 1) {
        eprintln!("built without the parallel feature; running on one thread");
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(CliError::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
