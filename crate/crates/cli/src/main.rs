use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lotshare::commands::{compare, generate_data, mask_stats};
use lotshare::run::{run_prune_sweep, run_train};
use lotshare::score::{score_files, Exponents};
use lotshare::{CliResult, ExperimentConfig, SEED_ENV};

#[derive(Parser)]
#[command(name = "lotshare", version, about = "CTR/CVR multi-task training with connection-level sharing")]
struct Cli {
    /// Flat `section.key = value` config file.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one config entry; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Do not echo progress records to stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic dataset and its sidecar spec.
    GenerateData {
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Train one sharing mode end to end and write a run directory.
    Train {
        #[arg(long)]
        mode: Option<String>,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Tabulate run reports with gains against the single-task run.
    Compare {
        #[arg(required = true, value_name = "RUN")]
        runs: Vec<PathBuf>,
    },
    /// Warmup and mask generation only; writes the per-round curve.
    PruneSweep {
        #[arg(long)]
        mode: Option<String>,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Rank candidates by pCTR^alpha * pCVR^beta * length^gamma.
    Score {
        #[arg(long, value_name = "CHECKPOINT")]
        ctr_model: PathBuf,
        #[arg(long, value_name = "CHECKPOINT")]
        cvr_model: PathBuf,
        #[arg(long, value_name = "FILE")]
        candidates: PathBuf,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
    },
    /// Mask utilities.
    Mask {
        #[command(subcommand)]
        action: MaskCommand,
    },
}

#[derive(Subcommand)]
enum MaskCommand {
    /// Overlap of a CTR mask and a CVR mask.
    Stats { ctr: PathBuf, cvr: PathBuf },
}

fn resolve(cli: &Cli, mode: Option<&String>, out: Option<&PathBuf>) -> CliResult<(ExperimentConfig, Option<String>)> {
    let mut overrides = cli.set.clone();
    if let Some(m) = mode {
        overrides.push(format!("model.mode={m}"));
    }
    if let Some(o) = out {
        overrides.push(format!("run.output_dir={}", o.display()));
    }
    let env = std::env::var(SEED_ENV).ok();
    match &cli.config {
        Some(path) => {
            let (cfg, text) = ExperimentConfig::load(path, env.as_deref(), &overrides)?;
            Ok((cfg, Some(text)))
        }
        None => Ok((ExperimentConfig::resolve(None, env.as_deref(), &overrides)?, None)),
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    let quiet = cli.quiet;
    let mut echo = |line: &str| {
        if !quiet {
            eprintln!("{line}");
        }
    };
    match &cli.command {
        Command::GenerateData { out } => {
            let (cfg, _) = resolve(cli, None, None)?;
            let (_, text) = generate_data(&cfg, out.as_deref())?;
            print!("{text}");
        }
        Command::Train { mode, out } => {
            let (cfg, source) = resolve(cli, mode.as_ref(), out.as_ref())?;
            let outcome = run_train(&cfg, source.as_deref(), &mut echo)?;
            print!("{}", outcome.report);
            println!("run_dir={}", outcome.dir.display());
        }
        Command::Compare { runs } => print!("{}", compare(runs)?),
        Command::PruneSweep { mode, out } => {
            let (cfg, source) = resolve(cli, mode.as_ref(), out.as_ref())?;
            let outcome = run_prune_sweep(&cfg, source.as_deref(), &mut echo)?;
            for line in &outcome.lines {
                println!("{line}");
            }
            println!("curve={}", outcome.dir.join("sweep.csv").display());
        }
        Command::Score { ctr_model, cvr_model, candidates, k, alpha, beta, gamma } => {
            let exp = Exponents { alpha: *alpha, beta: *beta, gamma: *gamma };
            print!("{}", score_files(ctr_model, cvr_model, candidates, *k, exp)?);
        }
        Command::Mask { action: MaskCommand::Stats { ctr, cvr } } => print!("{}", mask_stats(ctr, cvr)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
