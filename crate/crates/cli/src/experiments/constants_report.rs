//! Emit the computable constants for a target: the s_c curve, the C_r bound
//! and its empirical counterpart, C_LBV, the derived C_beta / C_T / C_N with
//! re-derived verification values, the planner outputs, and (optionally) the
//! dimension sweep of the separable-energy bound.

use crate::config::{build_target, BuiltTarget, ExperimentConfig};
use crate::output::{Cell, CsvDocument};
use anyhow::Context;
use asmc::annealing::{plan_local, planned_level_count, PlanTime};
use asmc::diagnostics::{
    compute_clbv, constants_bundle, cr_bound, cr_empirical, cr_empirical_finite, default_c_grid,
    expectation_quadrature, integration_box, ConvexPartSpec, SeparableCrTable,
};
use asmc::kernels::LocalModel;
use asmc::targets::{normalized_energy, Energy, WellClassifier};

#[derive(Debug, Clone)]
pub struct ConstantsSummary {
    pub cr_bound: f64,
    pub cr_bound_argmin: f64,
    pub cr_empirical: f64,
    pub c_lbv: f64,
    pub c_beta: f64,
    pub c_t: f64,
    pub c_n: f64,
    /// Identity residuals |C_T - 4 J C_r (2 C_beta + 1)| and the C_N analogue.
    pub ct_residual: f64,
    pub cn_residual: f64,
    pub plan_m: u64,
    pub plan_n: u64,
    pub plan_t: u64,
    pub separable: Option<SeparableCrTable>,
}

/// Well masses as a function of temperature for C_LBV, by exact enumeration or
/// low-dimensional quadrature of the classifier indicators.
fn masses_fn<'a>(
    target: &'a BuiltTarget,
    classifier: &'a dyn WellClassifier,
) -> impl Fn(f64) -> Vec<f64> + 'a {
    move |eps: f64| match target {
        BuiltTarget::Finite(m) => LocalModel::masses(m, eps),
        BuiltTarget::Mixture(m) => {
            let j = classifier.well_count();
            (0..j)
                .map(|w| {
                    expectation_quadrature(
                        m,
                        &|x| if classifier.classify(x) == w { 1.0 } else { 0.0 },
                        eps,
                        512,
                        None,
                    )
                    .expect("quadrature masses")
                })
                .collect()
        }
        BuiltTarget::DoubleWell(m) => {
            let j = classifier.well_count();
            (0..j)
                .map(|w| {
                    expectation_quadrature(
                        m,
                        &|x| if classifier.classify(x) == w { 1.0 } else { 0.0 },
                        eps,
                        512,
                        None,
                    )
                    .expect("quadrature masses")
                })
                .collect()
        }
    }
}

fn probe_points(model: &dyn Energy, per_axis: usize) -> anyhow::Result<Vec<Vec<f64>>> {
    let box_ = integration_box(model, None)?;
    let mut probes = Vec::new();
    match box_.len() {
        1 => {
            for i in 0..per_axis {
                let x = box_[0].0 + (box_[0].1 - box_[0].0) * i as f64 / (per_axis - 1) as f64;
                probes.push(vec![x]);
            }
        }
        2 => {
            for i in 0..per_axis {
                for j in 0..per_axis {
                    let x = box_[0].0 + (box_[0].1 - box_[0].0) * i as f64 / (per_axis - 1) as f64;
                    let y = box_[1].0 + (box_[1].1 - box_[1].0) * j as f64 / (per_axis - 1) as f64;
                    probes.push(vec![x, y]);
                }
            }
        }
        _ => anyhow::bail!("probe grids are restricted to d <= 2"),
    }
    Ok(probes)
}

pub fn run(
    cfg: &ExperimentConfig,
    target: &BuiltTarget,
) -> anyhow::Result<(String, ConstantsSummary)> {
    let run = cfg.run.as_ref().context("[run] required")?;
    let consts = cfg.constants.as_ref().context("[constants] required")?;
    let (eta1, eta, nu) = (run.eta1, run.eta, consts.nu);

    let model = super::energy_arc(target);
    let (u0, _norm_report) = normalized_energy(model.clone(), eta1)?;

    let mut doc = CsvDocument::new(cfg, &["record", "param", "value", "value2"]);

    // s_c curve and the C_r bound over the same default grid.
    let (bound, curve) = match target {
        BuiltTarget::Finite(m) => {
            let inf = m.known_inf().unwrap_or(0.0);
            let energies_u0: Vec<f64> = (0..m.state_count())
                .map(|s| (m.energy(&[s as f64]) - inf) / eta1)
                .collect();
            let max_u0 = energies_u0.iter().cloned().fold(0.0f64, f64::max);
            let grid = default_c_grid(max_u0);
            let b = asmc::diagnostics::cr_bound_finite(&energies_u0, nu, &grid)?;
            let curve = b.curve.clone();
            (b, curve)
        }
        _ => {
            let b = cr_bound(&u0, nu)?;
            let curve = b.curve.clone();
            (b, curve)
        }
    };
    for (c, s) in curve.thresholds.iter().zip(&curve.values) {
        doc.row(&[
            Cell::Str("s_c"),
            Cell::Float(*c),
            Cell::Float(*s),
            Cell::Empty,
        ]);
    }
    doc.row(&[
        Cell::Str("cr_bound"),
        Cell::Float(bound.argmin_c),
        Cell::Float(bound.value),
        Cell::Empty,
    ]);

    // Empirical C_r on the geometric ladder the planner would use.
    let m_levels = planned_level_count(nu, eta, eta1);
    let schedule = super::schedule_for(eta1, eta, m_levels.max(2))?;
    let emp = match target {
        BuiltTarget::Finite(m) => cr_empirical_finite(m, &schedule),
        _ => cr_empirical(model.as_ref(), &schedule, &probe_points(model.as_ref(), 64)?)?,
    };
    doc.row(&[
        Cell::Str("cr_empirical"),
        Cell::Empty,
        Cell::Float(emp),
        Cell::Empty,
    ]);

    // C_LBV from the well masses.
    let classifier = target
        .classifier()
        .context("target offers no well classifier")?;
    let masses = masses_fn(target, classifier.as_ref());
    let clbv = compute_clbv(&masses, eta, eta1)?;
    doc.row(&[
        Cell::Str("c_lbv"),
        Cell::Float(clbv.coarse),
        Cell::Float(clbv.value),
        Cell::Str(if clbv.flagged { "flagged" } else { "" }),
    ]);

    // Derived constants with the identities re-derived in value2.
    let j = classifier.well_count();
    let c_r = bound.value.max(1.0);
    let c_lbv = clbv.value.max(0.0);
    let bundle = constants_bundle(j, c_r, c_lbv)?;
    let ct_check = 4.0 * j as f64 * c_r * (2.0 * bundle.c_beta + 1.0);
    let cn_check =
        (j * j) as f64 * (2.0 * bundle.c_beta + 1.0).powi(2) * (1.0 + c_r).powi(2);
    doc.row(&[
        Cell::Str("c_beta"),
        Cell::Empty,
        Cell::Float(bundle.c_beta),
        Cell::Float((2.0 * c_r * c_lbv).exp()),
    ]);
    doc.row(&[
        Cell::Str("c_t"),
        Cell::Empty,
        Cell::Float(bundle.c_t),
        Cell::Float(ct_check),
    ]);
    doc.row(&[
        Cell::Str("c_n"),
        Cell::Empty,
        Cell::Float(bundle.c_n),
        Cell::Float(cn_check),
    ]);

    // Planner outputs for the configured (delta, nu, chi).
    let plan = plan_local(consts.delta, nu, eta, eta1, &bundle, consts.chi_at_eta1)?;
    let PlanTime::Steps(plan_t) = plan.t else {
        unreachable!()
    };
    doc.row(&[
        Cell::Str("plan_m"),
        Cell::Float(consts.delta),
        Cell::UInt(plan.m),
        Cell::Empty,
    ]);
    doc.row(&[
        Cell::Str("plan_n"),
        Cell::Float(consts.delta),
        Cell::UInt(plan.n),
        Cell::Empty,
    ]);
    doc.row(&[
        Cell::Str("plan_t"),
        Cell::Float(consts.chi_at_eta1),
        Cell::UInt(plan_t),
        Cell::Empty,
    ]);

    // Dimension sweep of the separable bound.
    let separable = match &consts.separable {
        Some(sep) => {
            let marginal_target = build_target(&sep.marginal)?;
            let marginal_energy = super::energy_arc(&marginal_target);
            let (marginal_u0, _) = normalized_energy(marginal_energy, eta1)?;
            let spec = ConvexPartSpec {
                alpha0: sep.alpha0,
                k0: sep.k0,
                alpha_b: sep.alpha_b,
                alpha_u: sep.alpha_u,
            };
            let table =
                asmc::diagnostics::cr_separable_check(&marginal_u0, &spec, &sep.dims, sep.eta)?;
            for row in &table.rows {
                doc.row(&[
                    Cell::Str("sep_bound"),
                    Cell::UInt(row.d as u64),
                    Cell::Float(row.bound),
                    Cell::Float(row.marginal_factor),
                ]);
            }
            for d in &table.skipped {
                doc.row(&[
                    Cell::Str("sep_skipped"),
                    Cell::UInt(*d as u64),
                    Cell::Empty,
                    Cell::Empty,
                ]);
            }
            doc.row(&[
                Cell::Str("sep_spread"),
                Cell::Empty,
                Cell::Float(table.spread),
                Cell::Empty,
            ]);
            Some(table)
        }
        None => None,
    };

    let summary = ConstantsSummary {
        cr_bound: bound.value,
        cr_bound_argmin: bound.argmin_c,
        cr_empirical: emp,
        c_lbv: clbv.value,
        c_beta: bundle.c_beta,
        c_t: bundle.c_t,
        c_n: bundle.c_n,
        ct_residual: (bundle.c_t - ct_check).abs(),
        cn_residual: (bundle.c_n - cn_check).abs(),
        plan_m: plan.m,
        plan_n: plan.n,
        plan_t,
        separable,
    };
    Ok((doc.into_string(), summary))
}
