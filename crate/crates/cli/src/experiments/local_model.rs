//! Planner check on an exactly enumerable local-mixing model: compute the
//! constants, plan (M, N, T), run replicates, compare the RMS error with the
//! planned target.

use super::{asmc_local_replicate, test_function};
use crate::config::{BuiltTarget, ExperimentConfig};
use crate::output::{Cell, CsvDocument};
use anyhow::Context;
use asmc::annealing::{plan_local, planned_level_count, PlanTime};
use asmc::diagnostics::{compute_clbv, constants_bundle, cr_empirical_finite, summarize};
use asmc::kernels::LocalModel;
use asmc::stream::replicate_seed;
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct LocalModelSummary {
    pub delta: f64,
    pub nu: f64,
    pub eta: f64,
    pub eta1: f64,
    pub j: usize,
    pub c_r: f64,
    pub c_lbv: f64,
    pub c_beta: f64,
    pub c_t: f64,
    pub c_n: f64,
    pub m: u64,
    pub n: u64,
    pub t: u64,
    pub truth: f64,
    pub h_osc: f64,
    pub rms_error: f64,
    /// delta * ||h||_osc, the planned error target.
    pub bound: f64,
    pub r: usize,
    pub pass: bool,
}

pub fn run(
    cfg: &ExperimentConfig,
    target: &BuiltTarget,
) -> anyhow::Result<(String, LocalModelSummary)> {
    let run = cfg.run.as_ref().context("[run] required")?;
    let plan_cfg = cfg.plan.as_ref().context("[plan] required")?;
    let BuiltTarget::Finite(model) = target else {
        anyhow::bail!("local_model_theorem needs a finite_local target");
    };
    let (eta1, eta) = (run.eta1, run.eta);
    let (delta, nu) = (plan_cfg.delta, plan_cfg.nu);

    // M depends only on (nu, eta); the schedule then pins C_r exactly, the
    // masses pin C_LBV, and the bundle pins N and T.
    let m = planned_level_count(nu, eta, eta1);
    let schedule = super::schedule_for(eta1, eta, m)?;
    let c_r = cr_empirical_finite(model, &schedule).max(1.0);
    let masses = |eps: f64| LocalModel::masses(model, eps);
    let c_lbv = compute_clbv(&masses, eta, eta1)?.value.max(0.0);
    let bundle = constants_bundle(model.domain_count(), c_r, c_lbv)?;
    let chi1 = model.stay_probability(eta1);
    let plan = plan_local(delta, nu, eta, eta1, &bundle, chi1)?;
    let PlanTime::Steps(t) = plan.t else {
        anyhow::bail!("local plan must carry step counts")
    };

    let h = test_function(cfg, target)?;
    let hs: Vec<f64> = (0..model.state_count()).map(|s| h(&[s as f64])).collect();
    let truth = model.expectation(eta, &hs);
    let h_osc = hs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - hs.iter().cloned().fold(f64::INFINITY, f64::min);

    let init = vec![0.0];
    let estimates: Vec<f64> = (0..cfg.replicates)
        .into_par_iter()
        .map(|rep| -> anyhow::Result<f64> {
            let seed = replicate_seed(cfg.seed, rep as u64);
            asmc_local_replicate(
                model,
                model,
                &schedule,
                plan.n,
                t,
                &init,
                seed,
                h.as_ref(),
            )
        })
        .collect::<anyhow::Result<_>>()?;
    let stats = summarize(&estimates, truth, cfg.replicates, 0);
    let bound = delta * h_osc;
    let summary = LocalModelSummary {
        delta,
        nu,
        eta,
        eta1,
        j: model.domain_count(),
        c_r,
        c_lbv,
        c_beta: bundle.c_beta,
        c_t: bundle.c_t,
        c_n: bundle.c_n,
        m: plan.m,
        n: plan.n,
        t,
        truth,
        h_osc,
        rms_error: stats.rms_error,
        bound,
        r: stats.r_used,
        pass: stats.rms_error <= bound,
    };

    let mut doc = CsvDocument::new(
        cfg,
        &[
            "delta",
            "nu",
            "eta",
            "eta1",
            "j",
            "c_r",
            "c_lbv",
            "c_beta",
            "c_t",
            "c_n",
            "m",
            "n",
            "t",
            "truth",
            "h_osc",
            "rms_error",
            "bound",
            "r",
            "pass",
        ],
    );
    doc.row(&[
        Cell::Float(summary.delta),
        Cell::Float(summary.nu),
        Cell::Float(summary.eta),
        Cell::Float(summary.eta1),
        Cell::UInt(summary.j as u64),
        Cell::Float(summary.c_r),
        Cell::Float(summary.c_lbv),
        Cell::Float(summary.c_beta),
        Cell::Float(summary.c_t),
        Cell::Float(summary.c_n),
        Cell::UInt(summary.m),
        Cell::UInt(summary.n),
        Cell::UInt(summary.t),
        Cell::Float(summary.truth),
        Cell::Float(summary.h_osc),
        Cell::Float(summary.rms_error),
        Cell::Float(summary.bound),
        Cell::UInt(summary.r as u64),
        Cell::Str(if summary.pass { "true" } else { "false" }),
    ]);
    Ok((doc.into_string(), summary))
}
