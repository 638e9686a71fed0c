//! Two-dimensional benchmark trace: the annealed sampler against plain LMC at
//! the same budget, with the closed-form half-plane mass as reference.

use super::{
    asmc_langevin_replicate, default_init, quantiles, reference_value, run_energy, schedule_for,
    test_function,
};
use crate::config::{BuiltTarget, ExperimentConfig};
use crate::output::{Cell, CsvDocument};
use anyhow::Context;
use asmc::baselines::run_lmc;
use asmc::stream::replicate_seed;
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct Fig3Summary {
    pub reference: f64,
    pub asmc_final_mean: f64,
    pub asmc_final_q25: f64,
    pub asmc_final_q75: f64,
    pub asmc_mean_abs_error: f64,
    pub lmc_final_mean: f64,
    pub lmc_mean_abs_error: f64,
    pub iterations: u64,
}

pub fn run(cfg: &ExperimentConfig, target: &BuiltTarget) -> anyhow::Result<(String, Fig3Summary)> {
    let run = cfg.run.as_ref().context("[run] required")?;
    let (m, n, dt, steps) = (
        run.m.unwrap(),
        run.n.unwrap(),
        run.dt.unwrap(),
        run.steps_per_level.unwrap(),
    );
    let model = run_energy(cfg, target);
    let schedule = schedule_for(run.eta1, run.eta, m)?;
    let h = test_function(cfg, target)?;
    let reference = reference_value(cfg, target, h.as_ref())?;
    let init = default_init(model.as_ref())?;
    let total_steps = m * steps;
    let r = cfg.replicates;

    // The annealed runs and the equal-budget LMC runs, replicate by replicate.
    let traces: Vec<(Vec<f64>, Vec<f64>)> = (0..r)
        .into_par_iter()
        .map(|rep| -> anyhow::Result<(Vec<f64>, Vec<f64>)> {
            let seed = replicate_seed(cfg.seed, rep as u64);
            let asmc_run = asmc_langevin_replicate(
                model.as_ref(),
                &schedule,
                n,
                steps,
                dt,
                &init,
                seed,
                h.as_ref(),
                true,
            )?;
            let lmc = run_lmc(
                model.as_ref(),
                run.eta,
                n as usize,
                total_steps,
                dt,
                &init,
                seed,
                Some(h.as_ref()),
            )?;
            Ok((asmc_run.trace, lmc.trace))
        })
        .collect::<anyhow::Result<_>>()?;

    let temps = schedule.temperatures().to_vec();
    let mut doc = CsvDocument::new(
        cfg,
        &[
            "iter",
            "level",
            "eta",
            "asmc_mean",
            "asmc_q25",
            "asmc_q75",
            "lmc_mean",
            "lmc_q25",
            "lmc_q75",
            "reference",
        ],
    );
    let mut asmc_at = vec![0.0; r];
    let mut lmc_at = vec![0.0; r];
    let mut summary = None;
    for it in 0..total_steps as usize {
        for (i, (a, l)) in traces.iter().enumerate() {
            asmc_at[i] = a[it];
            lmc_at[i] = l[it];
        }
        let (am, a25, a75) = quantiles(&asmc_at);
        let (lm, l25, l75) = quantiles(&lmc_at);
        let level = it as u64 / steps;
        doc.row(&[
            Cell::UInt(it as u64 + 1),
            Cell::UInt(level + 1),
            Cell::Float(temps[level as usize]),
            Cell::Float(am),
            Cell::Float(a25),
            Cell::Float(a75),
            Cell::Float(lm),
            Cell::Float(l25),
            Cell::Float(l75),
            Cell::Float(reference),
        ]);
        if it + 1 == total_steps as usize {
            let asmc_mae =
                asmc_at.iter().map(|e| (e - reference).abs()).sum::<f64>() / r as f64;
            let lmc_mae = lmc_at.iter().map(|e| (e - reference).abs()).sum::<f64>() / r as f64;
            summary = Some(Fig3Summary {
                reference,
                asmc_final_mean: am,
                asmc_final_q25: a25,
                asmc_final_q75: a75,
                asmc_mean_abs_error: asmc_mae,
                lmc_final_mean: lm,
                lmc_mean_abs_error: lmc_mae,
                iterations: total_steps,
            });
        }
    }
    Ok((doc.into_string(), summary.expect("at least one iteration")))
}
