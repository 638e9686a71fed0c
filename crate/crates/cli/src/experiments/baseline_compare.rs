//! Side-by-side traces: annealed SMC, plain LMC at the same budget, and
//! rejection sampling, against the common reference.

use super::{
    asmc_langevin_replicate, default_init, quantiles, reference_value, run_energy, schedule_for,
    test_function,
};
use crate::config::{BuiltTarget, ExperimentConfig};
use crate::output::{Cell, CsvDocument};
use anyhow::Context;
use asmc::baselines::{lmc_burn_in_proposal, run_lmc, run_rejection};
use asmc::stream::{replicate_seed, Stream};
use asmc::targets::{global_minimum, Energy};
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct BaselineSummary {
    pub reference: f64,
    pub asmc_final_mean: f64,
    pub lmc_final_mean: f64,
    pub rejection_estimate: Option<f64>,
    pub rejection_acceptance_rate: f64,
    pub rejection_warning: Option<String>,
}

pub fn run(
    cfg: &ExperimentConfig,
    target: &BuiltTarget,
) -> anyhow::Result<(String, BaselineSummary)> {
    let run = cfg.run.as_ref().context("[run] required")?;
    let (m, n, dt, steps) = (
        run.m.unwrap(),
        run.n.unwrap(),
        run.dt.unwrap(),
        run.steps_per_level.unwrap(),
    );
    let baseline = cfg.baseline.clone().unwrap_or(crate::config::BaselineSection {
        rejection_budget: None,
        proposal_burn_in: 50.0,
    });
    let model = run_energy(cfg, target);
    let schedule = schedule_for(run.eta1, run.eta, m)?;
    let h = test_function(cfg, target)?;
    let reference = reference_value(cfg, target, h.as_ref())?;
    let init = default_init(model.as_ref())?;
    let total_steps = m * steps;
    let r = cfg.replicates;

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

    // Rejection: exact proposal when the run targets an unscaled mixture at
    // eta1 = 1, otherwise Langevin burn-in at eta1.
    let budget = baseline.rejection_budget.unwrap_or(n) as usize;
    let (u_min_x, u_min) = match global_minimum(model.as_ref()) {
        Ok(v) => v,
        Err(e) => anyhow::bail!("cannot locate the energy minimum for rejection: {e}"),
    };
    let _ = u_min_x;
    let rejection = if let (BuiltTarget::Mixture(mix), false, true) = (
        target,
        run.scale_energy_by_eta,
        (run.eta1 - 1.0).abs() < 1e-12,
    ) {
        let mix = mix.clone();
        let proposal = move |rng: &mut Stream| {
            let mut out = vec![0.0; mix.dimension()];
            mix.sample_into(rng, &mut out);
            out
        };
        run_rejection(
            model.as_ref(),
            run.eta,
            run.eta1,
            &proposal,
            budget,
            cfg.seed,
            Some(u_min),
        )?
    } else {
        let proposal = lmc_burn_in_proposal(model.as_ref(), run.eta1, baseline.proposal_burn_in, dt);
        run_rejection(
            model.as_ref(),
            run.eta,
            run.eta1,
            &proposal,
            budget,
            cfg.seed,
            Some(u_min),
        )?
    };
    let rejection_estimate = if rejection.accepted.is_empty() {
        None
    } else {
        let total: f64 = rejection.accepted.rows().map(|row| h(row)).sum();
        Some(total / rejection.accepted.len() as f64)
    };

    let mut doc = CsvDocument::new(
        cfg,
        &["algo", "iter", "mean", "q25", "q75", "reference", "extra"],
    );
    let mut asmc_at = vec![0.0; r];
    let mut lmc_at = vec![0.0; r];
    let mut final_means = (0.0, 0.0);
    for it in 0..total_steps as usize {
        for (i, (a, l)) in traces.iter().enumerate() {
            asmc_at[i] = a[it];
            lmc_at[i] = l[it];
        }
        let (am, a25, a75) = quantiles(&asmc_at);
        let (lm, l25, l75) = quantiles(&lmc_at);
        doc.row(&[
            Cell::Str("asmc"),
            Cell::UInt(it as u64 + 1),
            Cell::Float(am),
            Cell::Float(a25),
            Cell::Float(a75),
            Cell::Float(reference),
            Cell::Empty,
        ]);
        doc.row(&[
            Cell::Str("lmc"),
            Cell::UInt(it as u64 + 1),
            Cell::Float(lm),
            Cell::Float(l25),
            Cell::Float(l75),
            Cell::Float(reference),
            Cell::Empty,
        ]);
        if it + 1 == total_steps as usize {
            final_means = (am, lm);
        }
    }
    doc.row(&[
        Cell::Str("rejection"),
        Cell::UInt(budget as u64),
        match rejection_estimate {
            Some(v) => Cell::Float(v),
            None => Cell::Empty,
        },
        Cell::Empty,
        Cell::Empty,
        Cell::Float(reference),
        Cell::Float(rejection.acceptance_rate),
    ]);

    Ok((
        doc.into_string(),
        BaselineSummary {
            reference,
            asmc_final_mean: final_means.0,
            lmc_final_mean: final_means.1,
            rejection_estimate,
            rejection_acceptance_rate: rejection.acceptance_rate,
            rejection_warning: rejection.warning,
        },
    ))
}
