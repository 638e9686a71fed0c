//! Library surface of the batch experiment runner: configuration parsing,
//! deterministic CSV emission, and the experiment implementations.

pub mod config;
pub mod experiments;
pub mod output;

use anyhow::Context;
use config::ExperimentConfig;
use experiments::ExperimentOutcome;
use std::path::Path;

/// Execute under an explicit rayon pool when a thread count is configured, so
/// results can be checked for thread-count independence in one process.
pub fn execute_with_threads(
    cfg: &ExperimentConfig,
) -> anyhow::Result<(String, ExperimentOutcome)> {
    match cfg.threads {
        Some(t) if t > 0 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .context("cannot build thread pool")?;
            pool.install(|| experiments::execute(cfg))
        }
        _ => experiments::execute(cfg),
    }
}

/// Run an experiment and write its CSV to `out`.
pub fn run_to_file(cfg: &ExperimentConfig, out: &Path) -> anyhow::Result<ExperimentOutcome> {
    let (csv, outcome) = execute_with_threads(cfg)?;
    if let Some(dir) = out.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)
                .with_context(|| format!("cannot create {}", dir.display()))?;
        }
    }
    std::fs::write(out, csv).with_context(|| format!("cannot write {}", out.display()))?;
    Ok(outcome)
}
