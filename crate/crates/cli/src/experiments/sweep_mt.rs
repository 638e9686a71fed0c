//! Level-count / propagation-time tradeoff at a fixed step budget M*T.

use super::{
    asmc_langevin_replicate, default_init, quantiles, reference_value, run_energy, schedule_for,
    test_function,
};
use crate::config::{BuiltTarget, ExperimentConfig};
use crate::output::{Cell, CsvDocument};
use anyhow::Context;
use asmc::stream::replicate_seed;
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct MtRow {
    pub m: u64,
    pub t_steps: u64,
    pub mt: u64,
    pub mean_error: f64,
    pub mean_abs_error: f64,
    pub q25: f64,
    pub q75: f64,
    pub r: usize,
}

#[derive(Debug, Clone)]
pub struct SweepMtSummary {
    pub reference: f64,
    pub rows: Vec<MtRow>,
}

pub fn run(
    cfg: &ExperimentConfig,
    target: &BuiltTarget,
) -> anyhow::Result<(String, SweepMtSummary)> {
    let run = cfg.run.as_ref().context("[run] required")?;
    let sweep = cfg.sweep_mt.as_ref().context("[sweep_mt] required")?;
    let n = run.n.context("[run].n required")?;
    let dt = run.dt.context("[run].dt required")?;

    let model = run_energy(cfg, target);
    let h = test_function(cfg, target)?;
    let reference = reference_value(cfg, target, h.as_ref())?;
    let init = default_init(model.as_ref())?;

    let mut rows = Vec::new();
    for (mi, &m) in sweep.m_values.iter().enumerate() {
        let t_steps = sweep.total_steps / m;
        let schedule = schedule_for(run.eta1, run.eta, m)?;
        let estimates: Vec<f64> = (0..cfg.replicates)
            .into_par_iter()
            .map(|rep| -> anyhow::Result<f64> {
                let seed = replicate_seed(
                    cfg.seed ^ (mi as u64).wrapping_mul(0xA24B_AED4_963E_E407),
                    rep as u64,
                );
                Ok(asmc_langevin_replicate(
                    model.as_ref(),
                    &schedule,
                    n,
                    t_steps,
                    dt,
                    &init,
                    seed,
                    h.as_ref(),
                    false,
                )?
                .final_estimate)
            })
            .collect::<anyhow::Result<_>>()?;
        let (_, q25, q75) = quantiles(&estimates);
        let mean_error =
            estimates.iter().map(|e| e - reference).sum::<f64>() / estimates.len() as f64;
        let mean_abs_error =
            estimates.iter().map(|e| (e - reference).abs()).sum::<f64>() / estimates.len() as f64;
        rows.push(MtRow {
            m,
            t_steps,
            mt: sweep.total_steps,
            mean_error,
            mean_abs_error,
            q25,
            q75,
            r: estimates.len(),
        });
    }

    let mut doc = CsvDocument::new(
        cfg,
        &[
            "m",
            "t_steps",
            "mt",
            "mean_error",
            "mean_abs_error",
            "q25",
            "q75",
            "r",
        ],
    );
    for row in &rows {
        doc.row(&[
            Cell::UInt(row.m),
            Cell::UInt(row.t_steps),
            Cell::UInt(row.mt),
            Cell::Float(row.mean_error),
            Cell::Float(row.mean_abs_error),
            Cell::Float(row.q25),
            Cell::Float(row.q75),
            Cell::UInt(row.r as u64),
        ]);
    }
    Ok((doc.into_string(), SweepMtSummary { reference, rows }))
}
