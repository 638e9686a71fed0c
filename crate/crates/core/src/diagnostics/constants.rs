//! Computable constants: the tail-to-core ratio `s_c`, the level-ratio bound
//! `C_r`, the log-mass variation `C_LBV`, and the derived `C_beta`, `C_T`,
//! `C_N` feeding the planner.

use crate::annealing::AnnealingSchedule;
use crate::error::{Error, Result};
use crate::kernels::FiniteStateLocalModel;
use crate::stream::{purpose, stream};
use crate::targets::Energy;
use rand::Rng;
use statrs::function::gamma::{gamma_lr, gamma_ur};

use super::quadrature::{integration_box, log_partition};

/// `s_c` for one threshold, with a confidence half-width when it came from
/// stratified Monte Carlo rather than quadrature.
#[derive(Debug, Clone, Copy)]
pub struct ScEstimate {
    pub value: f64,
    pub ci_half_width: Option<f64>,
}

/// `s_c` on a grid of thresholds.
#[derive(Debug, Clone, Default)]
pub struct ScCurve {
    pub thresholds: Vec<f64>,
    pub values: Vec<f64>,
}

/// (energy, quadrature weight) pairs over the integration grid; shared by the
/// `s_c` machinery.
fn energy_cells(
    model: &dyn Energy,
    grid_n: usize,
    over: Option<&[(f64, f64)]>,
) -> Result<Vec<(f64, f64)>> {
    let box_ = integration_box(model, over)?;
    let d = model.dimension();
    if d > 2 {
        return Err(Error::Unsupported("energy grid is restricted to d <= 2".into()));
    }
    let periodic = model.domain().is_torus();
    let axis = |lo: f64, hi: f64| -> (Vec<f64>, Vec<f64>) {
        let h = (hi - lo) / grid_n as f64;
        if periodic {
            ((0..grid_n).map(|i| lo + i as f64 * h).collect(), vec![h; grid_n])
        } else {
            let nodes: Vec<f64> = (0..=grid_n).map(|i| lo + i as f64 * h).collect();
            let mut w = vec![h; grid_n + 1];
            w[0] = 0.5 * h;
            w[grid_n] = 0.5 * h;
            (nodes, w)
        }
    };
    let mut cells = Vec::new();
    if d == 1 {
        let (nodes, weights) = axis(box_[0].0, box_[0].1);
        for (x, w) in nodes.iter().zip(&weights) {
            cells.push((model.energy(&[*x]), *w));
        }
    } else {
        let (n0, w0) = axis(box_[0].0, box_[0].1);
        let (n1, w1) = axis(box_[1].0, box_[1].1);
        for (x0, wa) in n0.iter().zip(&w0) {
            for (x1, wb) in n1.iter().zip(&w1) {
                cells.push((model.energy(&[*x0, *x1]), wa * wb));
            }
        }
    }
    Ok(cells)
}

fn default_grid_n(dim: usize) -> usize {
    if dim == 1 {
        32768
    } else {
        512
    }
}

fn sc_from_cells(cells: &[(f64, f64)], c: f64) -> Result<f64> {
    let umin = cells.iter().map(|(u, _)| *u).fold(f64::INFINITY, f64::min);
    let mut tail = 0.0;
    let mut core = 0.0;
    for (u, w) in cells {
        let mass = w * (-(u - umin)).exp();
        if *u > c {
            tail += mass;
        } else if *u < c {
            core += mass;
        } else {
            // A node exactly on the threshold straddles both sets.
            tail += 0.5 * mass;
            core += 0.5 * mass;
        }
    }
    if !(core > 0.0) {
        return Err(Error::Quadrature(format!(
            "sublevel set {{U0 <= {c}}} is empty on the integration grid"
        )));
    }
    Ok(tail / core)
}

/// Tail-to-core mass ratio of `exp(-U0)` at threshold `c`:
/// tensorized quadrature for `d <= 2`, stratified Monte Carlo (with a reported
/// confidence interval) above.
pub fn compute_sc(model_u0: &dyn Energy, c: f64) -> Result<ScEstimate> {
    if !(c > 0.0) {
        return Err(Error::invalid("threshold c must be positive"));
    }
    if model_u0.dimension() <= 2 {
        let cells = energy_cells(model_u0, default_grid_n(model_u0.dimension()), None)?;
        Ok(ScEstimate {
            value: sc_from_cells(&cells, c)?,
            ci_half_width: None,
        })
    } else {
        stratified_sc(model_u0, c, 200_000, 16, 0x5C)
    }
}

/// `s_c` over a threshold grid (one quadrature pass, `d <= 2`).
pub fn compute_sc_curve(model_u0: &dyn Energy, thresholds: &[f64]) -> Result<ScCurve> {
    if thresholds.is_empty() || thresholds.iter().any(|c| !(*c > 0.0)) {
        return Err(Error::invalid("thresholds must be positive"));
    }
    let cells = energy_cells(model_u0, default_grid_n(model_u0.dimension()), None)?;
    let mut values = Vec::with_capacity(thresholds.len());
    for c in thresholds {
        values.push(sc_from_cells(&cells, *c)?);
    }
    Ok(ScCurve {
        thresholds: thresholds.to_vec(),
        values,
    })
}

/// Stratified Monte Carlo fallback for `d > 2`: strata along the first axis of
/// the extent box, uniform sampling within each stratum, delta-method CI for
/// the tail/core ratio.
fn stratified_sc(
    model_u0: &dyn Energy,
    c: f64,
    samples: usize,
    strata: usize,
    seed: u64,
) -> Result<ScEstimate> {
    let box_ = integration_box(model_u0, None)?;
    let d = model_u0.dimension();
    let per = (samples / strata).max(2);
    let width0 = (box_[0].1 - box_[0].0) / strata as f64;
    let cell_volume: f64 =
        width0 * box_[1..].iter().map(|(lo, hi)| hi - lo).product::<f64>();

    let mut tail_mean = 0.0;
    let mut core_mean = 0.0;
    let mut var_tail = 0.0;
    let mut var_core = 0.0;
    let mut cov = 0.0;
    let mut x = vec![0.0; d];
    for s in 0..strata {
        let lo0 = box_[0].0 + s as f64 * width0;
        let mut rng = stream(seed, purpose::PROBE, s as u64, 0);
        let mut st = 0.0;
        let mut sc_ = 0.0;
        let mut stt = 0.0;
        let mut scc = 0.0;
        let mut stc = 0.0;
        for _ in 0..per {
            x[0] = lo0 + rng.gen::<f64>() * width0;
            for j in 1..d {
                x[j] = box_[j].0 + rng.gen::<f64>() * (box_[j].1 - box_[j].0);
            }
            let u = model_u0.energy(&x);
            let mass = (-u).exp() * cell_volume;
            let (t, co) = if u > c { (mass, 0.0) } else { (0.0, mass) };
            st += t;
            sc_ += co;
            stt += t * t;
            scc += co * co;
            stc += t * co;
        }
        let n = per as f64;
        let mt = st / n;
        let mc = sc_ / n;
        tail_mean += mt;
        core_mean += mc;
        var_tail += (stt / n - mt * mt) / n;
        var_core += (scc / n - mc * mc) / n;
        cov += (stc / n - mt * mc) / n;
    }
    if !(core_mean > 0.0) {
        return Err(Error::Quadrature(
            "sublevel set is empty in every stratified sample".into(),
        ));
    }
    let ratio = tail_mean / core_mean;
    let var_ratio = (var_tail
        + ratio * ratio * var_core
        - 2.0 * ratio * cov)
        / (core_mean * core_mean);
    Ok(ScEstimate {
        value: ratio,
        ci_half_width: Some(1.96 * var_ratio.max(0.0).sqrt()),
    })
}

/// The practical upper bound for `C_r`: `min over c of (1 + s_c) exp(c nu)`,
/// minimized over a log-spaced threshold grid with the argmin recorded.
#[derive(Debug, Clone)]
pub struct CrBound {
    pub value: f64,
    pub argmin_c: f64,
    pub nu: f64,
    pub curve: ScCurve,
}

pub fn default_c_grid(max_u0: f64) -> Vec<f64> {
    log_spaced(0.1, (10.0 * max_u0).max(1.0), 32)
}

pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let llo = lo.ln();
    let lhi = hi.ln();
    (0..n)
        .map(|i| (llo + (lhi - llo) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

pub fn cr_bound(model_u0: &dyn Energy, nu: f64) -> Result<CrBound> {
    let cells = energy_cells(model_u0, default_grid_n(model_u0.dimension()), None)?;
    let max_u0 = cells.iter().map(|(u, _)| *u).fold(f64::NEG_INFINITY, f64::max);
    cr_bound_with_grid(model_u0, nu, &default_c_grid(max_u0))
}

pub fn cr_bound_with_grid(model_u0: &dyn Energy, nu: f64, c_grid: &[f64]) -> Result<CrBound> {
    if !(nu > 0.0) {
        return Err(Error::invalid("nu must be positive"));
    }
    let curve = compute_sc_curve(model_u0, c_grid)?;
    Ok(minimize_over_grid(curve, nu))
}

fn minimize_over_grid(curve: ScCurve, nu: f64) -> CrBound {
    let mut best = f64::INFINITY;
    let mut argmin = curve.thresholds[0];
    for (c, s) in curve.thresholds.iter().zip(&curve.values) {
        let v = (1.0 + s) * (c * nu).exp();
        if v < best {
            best = v;
            argmin = *c;
        }
    }
    CrBound {
        value: best,
        argmin_c: argmin,
        nu,
        curve,
    }
}

/// `C_r` bound for a finite state space, with `s_c` by enumeration over the
/// counting measure.
pub fn cr_bound_finite(energies_u0: &[f64], nu: f64, c_grid: &[f64]) -> Result<CrBound> {
    if !(nu > 0.0) {
        return Err(Error::invalid("nu must be positive"));
    }
    if energies_u0.is_empty() {
        return Err(Error::invalid("empty state space"));
    }
    let cells: Vec<(f64, f64)> = energies_u0.iter().map(|u| (*u, 1.0)).collect();
    let mut values = Vec::with_capacity(c_grid.len());
    for c in c_grid {
        values.push(sc_from_cells(&cells, *c)?);
    }
    Ok(minimize_over_grid(
        ScCurve {
            thresholds: c_grid.to_vec(),
            values,
        },
        nu,
    ))
}

/// Empirical `C_r`: the maximum over levels and probe points of the ratio of
/// normalized densities `pi_{k+1}(x) / pi_k(x)`, with partition functions from
/// quadrature (`d <= 2`).
pub fn cr_empirical(
    model: &dyn Energy,
    schedule: &AnnealingSchedule,
    probes: &[Vec<f64>],
) -> Result<f64> {
    if probes.is_empty() {
        return Err(Error::invalid("cr_empirical needs probe points"));
    }
    if schedule.len() < 2 {
        return Err(Error::invalid("cr_empirical needs at least two levels"));
    }
    let grid_n = default_grid_n(model.dimension());
    let temps = schedule.temperatures();
    let log_z: Vec<f64> = temps
        .iter()
        .map(|eta| log_partition(model, *eta, grid_n, None))
        .collect::<Result<_>>()?;
    let mut max_ratio = f64::NEG_INFINITY;
    for k in 0..temps.len() - 1 {
        let delta_beta = 1.0 / temps[k + 1] - 1.0 / temps[k];
        let dz = log_z[k] - log_z[k + 1];
        for x in probes {
            let u = model.energy(x);
            if !u.is_finite() {
                return Err(Error::EnergyEvaluation { point: x.clone() });
            }
            let log_r = dz - delta_beta * u;
            max_ratio = max_ratio.max(log_r.exp());
        }
    }
    Ok(max_ratio)
}

/// Exact empirical `C_r` on a finite state space.
pub fn cr_empirical_finite(model: &FiniteStateLocalModel, schedule: &AnnealingSchedule) -> f64 {
    let temps = schedule.temperatures();
    let mut max_ratio = f64::NEG_INFINITY;
    for k in 0..temps.len() - 1 {
        let pk = model.state_probabilities(temps[k]);
        let pk1 = model.state_probabilities(temps[k + 1]);
        for (a, b) in pk1.iter().zip(&pk) {
            max_ratio = max_ratio.max(a / b);
        }
    }
    max_ratio
}

/// Accumulated variation of the log well masses across temperatures:
/// `sum_j int_eta^eta_max |d/de ln pi_e(Omega_j)| de`, central differences plus
/// trapezoid on a log-spaced grid, with one refinement; both values reported.
#[derive(Debug, Clone, Copy)]
pub struct ClbvEstimate {
    pub value: f64,
    pub coarse: f64,
    /// Set when refinement moved the value by more than 10%.
    pub flagged: bool,
}

pub fn compute_clbv(
    masses: &dyn Fn(f64) -> Vec<f64>,
    eta: f64,
    eta_max: f64,
) -> Result<ClbvEstimate> {
    if !(eta > 0.0 && eta_max > eta) {
        return Err(Error::invalid("need 0 < eta < eta_max"));
    }
    let integrate = |nodes: usize| -> Result<f64> {
        let grid = log_spaced(eta, eta_max, nodes);
        let mut g = Vec::with_capacity(nodes);
        for e in &grid {
            let h = 1e-3 * e;
            let up = masses(e + h);
            let dn = masses(e - h);
            if up.len() != dn.len() || up.is_empty() {
                return Err(Error::invalid("masses function returned inconsistent data"));
            }
            let mut total = 0.0;
            for (a, b) in up.iter().zip(&dn) {
                if !(*a > 0.0 && *b > 0.0) {
                    return Err(Error::invalid(format!(
                        "well mass must stay positive (got {a}, {b} near eps = {e})"
                    )));
                }
                total += ((a.ln() - b.ln()) / (2.0 * h)).abs();
            }
            g.push(total);
        }
        let mut acc = 0.0;
        for i in 0..nodes - 1 {
            acc += 0.5 * (g[i] + g[i + 1]) * (grid[i + 1] - grid[i]);
        }
        Ok(acc)
    };
    let coarse = integrate(64)?;
    let fine = integrate(128)?;
    let flagged = (fine - coarse).abs() > 0.1 * fine.abs().max(1e-12);
    Ok(ClbvEstimate {
        value: fine,
        coarse,
        flagged,
    })
}

/// The derived constants controlling error growth, propagation time, and
/// particle count.
#[derive(Debug, Clone)]
pub struct ConstantsBundle {
    pub j: usize,
    pub c_r: f64,
    pub c_lbv: f64,
    pub c_beta: f64,
    pub c_t: f64,
    pub c_n: f64,
}

/// `C_beta = exp(2 C_r C_LBV)`, `C_T = 4 J C_r (2 C_beta + 1)`,
/// `C_N = J^2 (2 C_beta + 1)^2 (1 + C_r)^2`.
pub fn constants_bundle(j: usize, c_r: f64, c_lbv: f64) -> Result<ConstantsBundle> {
    if j < 1 {
        return Err(Error::invalid("J must be >= 1"));
    }
    if !(c_r >= 1.0) {
        return Err(Error::invalid("C_r must be >= 1"));
    }
    if !(c_lbv >= 0.0) {
        return Err(Error::invalid("C_LBV must be >= 0"));
    }
    let c_beta = (2.0 * c_r * c_lbv).exp();
    let jf = j as f64;
    let c_t = 4.0 * jf * c_r * (2.0 * c_beta + 1.0);
    let c_n = jf * jf * (2.0 * c_beta + 1.0).powi(2) * (1.0 + c_r).powi(2);
    Ok(ConstantsBundle {
        j,
        c_r,
        c_lbv,
        c_beta,
        c_t,
        c_n,
    })
}

/// Convex tail `V0` with `alpha0 |x - x0|^{k0} + alpha_b <= V0 <= alpha0 |x - x0|^{k0} + alpha_u`.
#[derive(Debug, Clone, Copy)]
pub struct ConvexPartSpec {
    pub alpha0: f64,
    pub k0: f64,
    pub alpha_b: f64,
    pub alpha_u: f64,
}

#[derive(Debug, Clone)]
pub struct SeparableCrRow {
    pub d: usize,
    pub nu: f64,
    pub marginal_factor: f64,
    pub convex_factor: f64,
    pub bound: f64,
}

#[derive(Debug, Clone)]
pub struct SeparableCrTable {
    pub rows: Vec<SeparableCrRow>,
    pub skipped: Vec<usize>,
    /// max/min of the bound across the computed dimensions.
    pub spread: f64,
}

/// Upper bound on `s_c` of the convex part in `m` coordinates, via the
/// regularized incomplete gamma of shape `m / k0` (the radial substitution
/// `t = alpha0 r^{k0}` turns both tail and core into gamma integrals).
fn convex_sc_upper(convex: &ConvexPartSpec, m: usize, c: f64) -> Option<f64> {
    let z = m as f64 / convex.k0;
    let x = c - convex.alpha_u;
    if x <= 0.0 {
        return None;
    }
    let q = gamma_ur(z, x);
    let p = gamma_lr(z, x);
    if !(p > 0.0) {
        return None;
    }
    Some((convex.alpha_u - convex.alpha_b).exp() * q / p)
}

/// Dimension sweep of the factorized `C_r` bound for separable energies
/// `U0 = marginal(first coords) + convex(rest)`, with the per-dimension step
/// rule `nu = eta / d`. Dimensions below `k0` are skipped (the gamma-ratio
/// argument needs `d >= k0`); `d = k0` is admitted.
pub fn cr_separable_check(
    marginal_u0: &dyn Energy,
    convex: &ConvexPartSpec,
    dims: &[usize],
    eta: f64,
) -> Result<SeparableCrTable> {
    if !(convex.k0 > 1.0) {
        return Err(Error::Unsupported("convex exponent k0 must exceed 1".into()));
    }
    if !(convex.alpha0 > 0.0) {
        return Err(Error::invalid("alpha0 must be positive"));
    }
    if convex.alpha_u < convex.alpha_b {
        return Err(Error::invalid("alpha_u must dominate alpha_b"));
    }
    if !(eta > 0.0) {
        return Err(Error::invalid("eta must be positive"));
    }
    let d_marginal = marginal_u0.dimension();
    let cells = energy_cells(marginal_u0, default_grid_n(d_marginal), None)?;
    let max_u0 = cells.iter().map(|(u, _)| *u).fold(f64::NEG_INFINITY, f64::max);
    let marginal_grid = default_c_grid(max_u0);
    let marginal_curve = compute_sc_curve(marginal_u0, &marginal_grid)?;

    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for &d in dims {
        if (d as f64) < convex.k0 || d < d_marginal {
            skipped.push(d);
            continue;
        }
        let nu = eta / d as f64;
        let marginal_factor = minimize_over_grid(marginal_curve.clone(), nu).value;
        let m = d - d_marginal;
        let convex_factor = if m == 0 {
            1.0
        } else {
            let z = m as f64 / convex.k0;
            let grid = log_spaced(0.05, 10.0 * z.max(1.0) + 10.0, 96);
            let mut best = f64::INFINITY;
            for g in grid {
                let c = convex.alpha_u + g;
                if let Some(s) = convex_sc_upper(convex, m, c) {
                    best = best.min((1.0 + s) * (c * nu).exp());
                }
            }
            best
        };
        rows.push(SeparableCrRow {
            d,
            nu,
            marginal_factor,
            convex_factor,
            bound: marginal_factor * convex_factor,
        });
    }
    if rows.is_empty() {
        return Err(Error::invalid("every requested dimension was skipped"));
    }
    let max = rows.iter().map(|r| r.bound).fold(f64::NEG_INFINITY, f64::max);
    let min = rows.iter().map(|r| r.bound).fold(f64::INFINITY, f64::min);
    Ok(SeparableCrTable {
        rows,
        skipped,
        spread: max / min,
    })
}
