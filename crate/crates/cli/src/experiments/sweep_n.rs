//! Error scaling in the particle count: rows of (N, mean |error|, std, rms)
//! plus a fitted log-log slope.

use super::{
    asmc_langevin_replicate, default_init, reference_value, run_energy, schedule_for,
    test_function,
};
use crate::config::{BuiltTarget, ExperimentConfig};
use crate::output::{Cell, CsvDocument};
use anyhow::Context;
use asmc::math::slope;
use asmc::stream::replicate_seed;
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct SweepNRow {
    pub n: u64,
    pub mean_abs_error: f64,
    pub std_error: f64,
    pub rms_error: f64,
    pub r: usize,
}

#[derive(Debug, Clone)]
pub struct SweepNSummary {
    pub reference: f64,
    pub rows: Vec<SweepNRow>,
    /// Absent when fewer than two distinct N were run.
    pub slope: Option<f64>,
}

pub fn run(cfg: &ExperimentConfig, target: &BuiltTarget) -> anyhow::Result<(String, SweepNSummary)> {
    let run = cfg.run.as_ref().context("[run] required")?;
    let sweep = cfg.sweep_n.as_ref().context("[sweep_n] required")?;
    let m = run.m.context("[run].m required")?;
    let dt = run.dt.context("[run].dt required")?;
    let steps = run.steps_per_level.context("[run].steps_per_level required")?;

    let model = run_energy(cfg, target);
    let schedule = schedule_for(run.eta1, run.eta, m)?;
    let h = test_function(cfg, target)?;
    let reference = reference_value(cfg, target, h.as_ref())?;
    let init = default_init(model.as_ref())?;

    // Duplicate N entries pool their replicates (keyed average).
    let mut estimates_by_n: Vec<(u64, Vec<f64>)> = Vec::new();
    for (entry_idx, &n) in sweep.n_values.iter().enumerate() {
        let estimates: Vec<f64> = (0..cfg.replicates)
            .into_par_iter()
            .map(|rep| -> anyhow::Result<f64> {
                let seed = replicate_seed(
                    cfg.seed ^ (entry_idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
                    rep as u64,
                );
                Ok(asmc_langevin_replicate(
                    model.as_ref(),
                    &schedule,
                    n,
                    steps,
                    dt,
                    &init,
                    seed,
                    h.as_ref(),
                    false,
                )?
                .final_estimate)
            })
            .collect::<anyhow::Result<_>>()?;
        match estimates_by_n.iter_mut().find(|(key, _)| *key == n) {
            Some((_, pool)) => pool.extend(estimates),
            None => estimates_by_n.push((n, estimates)),
        }
    }
    estimates_by_n.sort_by_key(|(n, _)| *n);

    let rows: Vec<SweepNRow> = estimates_by_n
        .iter()
        .map(|(n, estimates)| {
            let s = asmc::diagnostics::summarize(estimates, reference, estimates.len(), 0);
            SweepNRow {
                n: *n,
                mean_abs_error: s.mean_abs_error,
                std_error: s.std_error,
                rms_error: s.rms_error,
                r: s.r_used,
            }
        })
        .collect();

    let fitted = if rows.len() >= 2 {
        let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).log10()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.mean_abs_error.max(1e-300).log10()).collect();
        Some(slope(&xs, &ys))
    } else {
        None
    };

    let mut doc = CsvDocument::new(
        cfg,
        &[
            "record",
            "n",
            "mean_abs_error",
            "std_error",
            "rms_error",
            "r",
            "slope",
        ],
    );
    for row in &rows {
        doc.row(&[
            Cell::Str("error"),
            Cell::UInt(row.n),
            Cell::Float(row.mean_abs_error),
            Cell::Float(row.std_error),
            Cell::Float(row.rms_error),
            Cell::UInt(row.r as u64),
            Cell::Empty,
        ]);
    }
    if let Some(s) = fitted {
        doc.row(&[
            Cell::Str("slope"),
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            Cell::Float(s),
        ]);
    }
    Ok((
        doc.into_string(),
        SweepNSummary {
            reference,
            rows,
            slope: fitted,
        },
    ))
}
