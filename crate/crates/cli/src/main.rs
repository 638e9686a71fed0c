//! Batch CLI for the annealed SMC experiments.
//!
//! Exit codes: 0 on success, 2 on configuration errors, 3 on numeric aborts
//! or I/O failures during a run.

use asmc_cli::config::{ExperimentConfig, ExperimentKind};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "asmc",
    about = "Annealed SMC experiment runner: deterministic CSV out of a TOML config"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path (overrides the config's `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the replicate count.
    #[arg(long)]
    replicates: Option<usize>,
    /// Worker threads (0 = library default). Results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// 2-D mixture benchmark trace (annealed SMC vs LMC vs reference).
    Fig3_2d(CommonArgs),
    /// Error scaling in the particle count.
    SweepN(CommonArgs),
    /// Level-count / propagation-time tradeoff at fixed budget.
    SweepMt(CommonArgs),
    /// Planner check on an exactly enumerable local-mixing model.
    LocalModelTheorem(CommonArgs),
    /// Computable constants report.
    ConstantsReport(CommonArgs),
    /// Annealed SMC vs LMC vs rejection on one target.
    BaselineCompare(CommonArgs),
}

impl Command {
    fn kind(&self) -> ExperimentKind {
        match self {
            Command::Fig3_2d(_) => ExperimentKind::Fig3_2d,
            Command::SweepN(_) => ExperimentKind::SweepN,
            Command::SweepMt(_) => ExperimentKind::SweepMt,
            Command::LocalModelTheorem(_) => ExperimentKind::LocalModelTheorem,
            Command::ConstantsReport(_) => ExperimentKind::ConstantsReport,
            Command::BaselineCompare(_) => ExperimentKind::BaselineCompare,
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::Fig3_2d(a)
            | Command::SweepN(a)
            | Command::SweepMt(a)
            | Command::LocalModelTheorem(a)
            | Command::ConstantsReport(a)
            | Command::BaselineCompare(a) => a,
        }
    }
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

fn load_config(cmd: &Command) -> Result<(ExperimentConfig, PathBuf), String> {
    let args = cmd.args();
    let mut cfg = ExperimentConfig::from_path(&args.config).map_err(|e| format!("{e:#}"))?;
    if cfg.experiment != cmd.kind() {
        return Err(format!(
            "config declares experiment {:?} but the {:?} subcommand was invoked",
            cfg.experiment,
            cmd.kind()
        ));
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(r) = args.replicates {
        cfg.replicates = r;
    }
    if let Some(t) = args.threads {
        cfg.threads = Some(t);
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.display().to_string());
    }
    cfg.validate().map_err(|e| format!("{e:#}"))?;
    let out = match &cfg.out {
        Some(o) => PathBuf::from(o),
        None => return Err("no output path: set `out` in the config or pass --out".into()),
    };
    Ok((cfg, out))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cfg, out) = match load_config(&cli.command) {
        Ok(v) => v,
        Err(msg) => {
            eprintln!("config error: {msg}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match asmc_cli::run_to_file(&cfg, &out) {
        Ok(_) => {
            println!("wrote {}", out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("run failed: {e:#}");
            ExitCode::from(EXIT_NUMERIC)
        }
    }
}
