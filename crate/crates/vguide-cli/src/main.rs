//! `vguide`: run threshold, eigenvalue, sweep and certificate experiments.

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use vguide_cli::{cmd_certify, cmd_eigs, cmd_sweep, cmd_threshold, CliError, OutputSpec, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "vguide", version, about = "Restricted fractional Dirichlet Laplacian on V-shaped waveguides")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat `key = value` configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override one configuration key (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory for result files.
    #[arg(long, global = true, value_name = "DIR", default_value = "results")]
    out: PathBuf,
    /// Also write an SVG plot to this file.
    #[arg(long, global = true, value_name = "FILE.svg")]
    plot: Option<PathBuf>,
    /// Seed of the eigensolver start vectors (overrides the config `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for independent runs.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cross-section threshold Λ† with a refinement study.
    Threshold,
    /// Eigenvalues of the truncated waveguide at `beta_deg`.
    Eigs,
    /// Eigenvalues over `angles_deg` as CSV (and JSON).
    Sweep,
    /// Trial-function and pushforward certificates at `beta_deg`.
    Certify,
}

fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    cfg.apply_overrides(&cli.set)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve(cli)?;
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global().map_err(|e| CliError::Config(e.to_string()))?;
    }
    let out = OutputSpec { dir: cli.out.clone(), plot: cli.plot.clone() };
    match cli.command {
        Command::Threshold => {
            let r = cmd_threshold(&cfg, &out)?;
            println!("Λ†(h = {}) = {:.10}  extrapolated {:.10}  ε_disc {:.3e}", cfg.h, r.lambda_h, r.extrapolated, r.eps_disc);
        }
        Command::Eigs => {
            let r = cmd_eigs(&cfg, &out)?;
            println!("β = {}°: {} eigenvalue(s) below Λ† − ε_disc; λ = {:?}", cfg.beta_deg, r.count, r.eigenvalues);
        }
        Command::Sweep => {
            let r = cmd_sweep(&cfg, &out)?;
            for f in &r.verdict.flags {
                println!("flag: {f}");
            }
            println!("{} rows written to {}", r.rows.len(), cli.out.join("sweep.csv").display());
        }
        Command::Certify => {
            let r = cmd_certify(&cfg, &out)?;
            println!("certified: smallest Rayleigh defect {:.6e}", r.trial.min_gap);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vguide: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
