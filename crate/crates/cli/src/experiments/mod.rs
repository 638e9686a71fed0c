//! Experiment implementations behind the CLI subcommands.

mod baseline_compare;
mod constants_report;
mod fig3;
mod local_model;
mod sweep_mt;
mod sweep_n;

pub use baseline_compare::BaselineSummary;
pub use constants_report::ConstantsSummary;
pub use fig3::Fig3Summary;
pub use local_model::LocalModelSummary;
pub use sweep_mt::{MtRow, SweepMtSummary};
pub use sweep_n::{SweepNRow, SweepNSummary};

use crate::config::{BuiltTarget, ExperimentConfig, ExperimentKind, TestFunctionConfig};
use anyhow::{bail, Context};
use asmc::annealing::AnnealingSchedule;
use asmc::diagnostics::{expectation_quadrature, reference_halfplane_mass};
use asmc::driver::{estimate, run_asmc, InitialState, KernelSpec, LevelTime, RunConfig};
use asmc::kernels::{LangevinConfig, LocalModel};
use asmc::targets::{global_minimum, Energy, ScaledEnergy};
use std::sync::Arc;

#[derive(Debug)]
pub enum ExperimentOutcome {
    Fig3(Fig3Summary),
    SweepN(SweepNSummary),
    SweepMt(SweepMtSummary),
    LocalModel(LocalModelSummary),
    Constants(ConstantsSummary),
    Baseline(BaselineSummary),
}

/// Run the configured experiment, returning the CSV document and a typed
/// summary of the headline numbers.
pub fn execute(cfg: &ExperimentConfig) -> anyhow::Result<(String, ExperimentOutcome)> {
    cfg.validate()?;
    let target = crate::config::build_target(&cfg.target)?;
    match cfg.experiment {
        ExperimentKind::Fig3_2d => {
            let (csv, s) = fig3::run(cfg, &target)?;
            Ok((csv, ExperimentOutcome::Fig3(s)))
        }
        ExperimentKind::SweepN => {
            let (csv, s) = sweep_n::run(cfg, &target)?;
            Ok((csv, ExperimentOutcome::SweepN(s)))
        }
        ExperimentKind::SweepMt => {
            let (csv, s) = sweep_mt::run(cfg, &target)?;
            Ok((csv, ExperimentOutcome::SweepMt(s)))
        }
        ExperimentKind::LocalModelTheorem => {
            let (csv, s) = local_model::run(cfg, &target)?;
            Ok((csv, ExperimentOutcome::LocalModel(s)))
        }
        ExperimentKind::ConstantsReport => {
            let (csv, s) = constants_report::run(cfg, &target)?;
            Ok((csv, ExperimentOutcome::Constants(s)))
        }
        ExperimentKind::BaselineCompare => {
            let (csv, s) = baseline_compare::run(cfg, &target)?;
            Ok((csv, ExperimentOutcome::Baseline(s)))
        }
    }
}

/// The energy the sampler actually runs on: `eta * U` under the
/// low-temperature convention, `U` otherwise.
pub(crate) fn run_energy(cfg: &ExperimentConfig, target: &BuiltTarget) -> Arc<dyn Energy> {
    let base = energy_arc(target);
    let run = cfg.run.as_ref().expect("validated");
    if run.scale_energy_by_eta {
        Arc::new(ScaledEnergy::new(base, run.eta).expect("eta validated"))
    } else {
        base
    }
}

pub(crate) fn energy_arc(target: &BuiltTarget) -> Arc<dyn Energy> {
    match target {
        BuiltTarget::Mixture(m) => Arc::new(m.clone()),
        BuiltTarget::DoubleWell(m) => Arc::new(m.clone()),
        BuiltTarget::Finite(m) => Arc::new(m.clone()),
    }
}

/// Test function closure from config.
pub(crate) fn test_function(
    cfg: &ExperimentConfig,
    target: &BuiltTarget,
) -> anyhow::Result<Box<dyn Fn(&[f64]) -> f64 + Sync + Send>> {
    let tf = cfg
        .test_function
        .as_ref()
        .context("experiment needs [test_function]")?;
    Ok(match tf {
        TestFunctionConfig::Halfplane { axis, threshold } => {
            let (axis, t) = (*axis, *threshold);
            if axis >= target.energy().dimension() {
                bail!("test function axis outside the model dimension");
            }
            Box::new(move |x: &[f64]| if x[axis] < t { 1.0 } else { 0.0 })
        }
        TestFunctionConfig::DomainIndicator { index } => {
            let BuiltTarget::Finite(model) = target else {
                bail!("domain_indicator test functions need a finite_local target");
            };
            let model = model.clone();
            let index = *index;
            if index >= model.domain_count() {
                bail!("domain_indicator index outside the valley count");
            }
            Box::new(move |x: &[f64]| {
                if model.membership(x) == index {
                    1.0
                } else {
                    0.0
                }
            })
        }
    })
}

/// Independent reference value for the configured test function under the
/// Gibbs law at the final temperature.
pub(crate) fn reference_value(
    cfg: &ExperimentConfig,
    target: &BuiltTarget,
    h: &(dyn Fn(&[f64]) -> f64 + Sync),
) -> anyhow::Result<f64> {
    let run = cfg.run.as_ref().context("experiment needs [run]")?;
    match target {
        BuiltTarget::Finite(model) => {
            let hs: Vec<f64> = (0..model.state_count()).map(|s| h(&[s as f64])).collect();
            Ok(model.expectation(run.eta, &hs))
        }
        BuiltTarget::Mixture(mixture) => {
            if run.scale_energy_by_eta {
                // Final-level target is the mixture itself.
                let Some(TestFunctionConfig::Halfplane { axis, threshold }) =
                    cfg.test_function.as_ref()
                else {
                    bail!("mixture references support half-plane test functions");
                };
                Ok(reference_halfplane_mass(mixture, *axis, *threshold, 1.0)?.value)
            } else {
                Ok(expectation_quadrature(mixture, &|x| h(x), run.eta, 512, None)?)
            }
        }
        BuiltTarget::DoubleWell(model) => {
            Ok(expectation_quadrature(model, &|x| h(x), run.eta, 512, None)?)
        }
    }
}

/// Schedule for an explicit level count (M = 1 is the rejection-equivalence
/// degenerate case).
pub(crate) fn schedule_for(eta1: f64, eta: f64, m: u64) -> anyhow::Result<AnnealingSchedule> {
    Ok(if m == 1 {
        AnnealingSchedule::single(eta)?
    } else {
        AnnealingSchedule::geometric(eta1, eta, m as usize)?
    })
}

pub(crate) struct AsmcReplicate {
    pub final_estimate: f64,
    pub trace: Vec<f64>,
}

/// One seeded ASMC run with the Langevin kernel.
#[allow(clippy::too_many_arguments)]
pub(crate) fn asmc_langevin_replicate(
    model: &dyn Energy,
    schedule: &AnnealingSchedule,
    n: u64,
    steps_per_level: u64,
    dt: f64,
    init: &[f64],
    seed: u64,
    h: &(dyn Fn(&[f64]) -> f64 + Sync),
    want_trace: bool,
) -> anyhow::Result<AsmcReplicate> {
    let cfg = RunConfig {
        model,
        schedule,
        n: n as usize,
        level_time: LevelTime::Steps(steps_per_level),
        kernel: KernelSpec::Langevin {
            config: LangevinConfig::new(dt)?,
        },
        init: InitialState::Point(init.to_vec()),
        seed,
        classifier: None,
        trace_h: want_trace.then_some(h),
    };
    let (ensemble, report) = run_asmc(&cfg)?;
    Ok(AsmcReplicate {
        final_estimate: estimate(&ensemble, h),
        trace: report.trace,
    })
}

/// One seeded ASMC run with the local-mixing kernel.
pub(crate) fn asmc_local_replicate(
    model: &dyn Energy,
    local: &dyn LocalModel,
    schedule: &AnnealingSchedule,
    n: u64,
    steps_per_level: u64,
    init: &[f64],
    seed: u64,
    h: &(dyn Fn(&[f64]) -> f64 + Sync),
) -> anyhow::Result<f64> {
    let cfg = RunConfig {
        model,
        schedule,
        n: n as usize,
        level_time: LevelTime::Steps(steps_per_level),
        kernel: KernelSpec::Local { model: local },
        init: InitialState::Point(init.to_vec()),
        seed,
        classifier: None,
        trace_h: None,
    };
    let (ensemble, _) = run_asmc(&cfg)?;
    Ok(estimate(&ensemble, h))
}

/// The deliberately adversarial default start: every particle at the global
/// energy minimum.
pub(crate) fn default_init(model: &dyn Energy) -> anyhow::Result<Vec<f64>> {
    Ok(global_minimum(model)?.0)
}

pub(crate) fn quantiles(values: &[f64]) -> (f64, f64, f64) {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (
        mean,
        asmc::math::quantile(values, 0.25),
        asmc::math::quantile(values, 0.75),
    )
}
