//! Deterministic quadrature references for low-dimensional Gibbs integrals.

use crate::error::{Error, Result};
use crate::targets::{DomainSpec, Energy, GaussianMixtureEnergy};
use statrs::distribution::{ContinuousCDF, Normal};

/// Per-axis nodes and weights. Periodic axes use the rectangle rule (exact
/// trapezoid on a circle); bounded axes use the trapezoid rule.
struct AxisGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

fn axis_grid(lo: f64, hi: f64, n: usize, periodic: bool) -> AxisGrid {
    assert!(hi > lo && n >= 2);
    let h = (hi - lo) / n as f64;
    if periodic {
        let nodes = (0..n).map(|i| lo + i as f64 * h).collect();
        AxisGrid {
            nodes,
            weights: vec![h; n],
        }
    } else {
        let nodes = (0..=n).map(|i| lo + i as f64 * h).collect();
        let mut weights = vec![h; n + 1];
        weights[0] = 0.5 * h;
        weights[n] = 0.5 * h;
        AxisGrid { nodes, weights }
    }
}

/// Integration box for a model: the torus cell, an explicit override, or the
/// model's extent hint.
pub fn integration_box(
    model: &dyn Energy,
    over: Option<&[(f64, f64)]>,
) -> Result<Vec<(f64, f64)>> {
    if let Some(b) = over {
        if b.len() != model.dimension() || b.iter().any(|(lo, hi)| !(hi > lo)) {
            return Err(Error::invalid("integration box is malformed"));
        }
        return Ok(b.to_vec());
    }
    match model.domain() {
        DomainSpec::Torus { periods } => Ok(periods.iter().map(|p| (0.0, *p)).collect()),
        DomainSpec::Euclidean { .. } => model.extent_hint().ok_or_else(|| {
            Error::Quadrature(
                "no integration box: model has no extent hint and none was supplied".into(),
            )
        }),
    }
}

fn grids(model: &dyn Energy, box_: &[(f64, f64)], n: usize) -> Vec<AxisGrid> {
    let periodic = model.domain().is_torus();
    box_.iter()
        .map(|(lo, hi)| axis_grid(*lo, *hi, n, periodic))
        .collect()
}

/// Visit every tensor-grid cell with its weight, in a fixed order.
fn for_each_cell(grids: &[AxisGrid], mut f: impl FnMut(&[f64], f64)) {
    match grids.len() {
        1 => {
            for (x, w) in grids[0].nodes.iter().zip(&grids[0].weights) {
                f(&[*x], *w);
            }
        }
        2 => {
            for (x0, w0) in grids[0].nodes.iter().zip(&grids[0].weights) {
                for (x1, w1) in grids[1].nodes.iter().zip(&grids[1].weights) {
                    f(&[*x0, *x1], w0 * w1);
                }
            }
        }
        _ => unreachable!("quadrature is restricted to d <= 2"),
    }
}

fn check_dim(model: &dyn Energy) -> Result<()> {
    if model.dimension() > 2 {
        return Err(Error::Unsupported(format!(
            "quadrature supports d <= 2, model has d = {}",
            model.dimension()
        )));
    }
    Ok(())
}

/// `log Z_eps = log integral exp(-U/eps)`, computed entirely in log space.
pub fn log_partition(
    model: &dyn Energy,
    eps: f64,
    grid_n: usize,
    over: Option<&[(f64, f64)]>,
) -> Result<f64> {
    check_dim(model)?;
    if !(eps > 0.0) {
        return Err(Error::invalid("temperature must be positive"));
    }
    let box_ = integration_box(model, over)?;
    let grids = grids(model, &box_, grid_n);
    let mut max = f64::NEG_INFINITY;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    for_each_cell(&grids, |x, w| {
        let l = -model.energy(x) / eps;
        if l > max {
            max = l;
        }
        cells.push((l, w));
    });
    if !max.is_finite() {
        return Err(Error::Quadrature("all grid cells have zero mass".into()));
    }
    let sum: f64 = cells.iter().map(|(l, w)| w * (l - max).exp()).sum();
    Ok(max + sum.ln())
}

/// Self-normalized expectation of `h` under `pi_eps` on a tensor grid.
pub fn expectation_quadrature(
    model: &dyn Energy,
    h: &dyn Fn(&[f64]) -> f64,
    eps: f64,
    grid_n: usize,
    over: Option<&[(f64, f64)]>,
) -> Result<f64> {
    check_dim(model)?;
    let box_ = integration_box(model, over)?;
    let grids = grids(model, &box_, grid_n);
    let mut max = f64::NEG_INFINITY;
    let mut cells: Vec<(f64, f64, f64)> = Vec::new();
    for_each_cell(&grids, |x, w| {
        let l = -model.energy(x) / eps;
        if l > max {
            max = l;
        }
        cells.push((l, w, h(x)));
    });
    if !max.is_finite() {
        return Err(Error::Quadrature("all grid cells have zero mass".into()));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (l, w, hv) in &cells {
        let m = w * (l - max).exp();
        num += m * hv;
        den += m;
    }
    if !(den > 0.0) {
        return Err(Error::Quadrature("normalizer vanished on the grid".into()));
    }
    Ok(num / den)
}

#[derive(Debug, Clone, Copy)]
pub struct QuadratureOutcome {
    pub value: f64,
    /// The doubled-resolution value, reported alongside.
    pub refined: f64,
    /// Set when the two disagree by more than 1e-3.
    pub flagged: bool,
}

/// Spec'd reference integrator: `E[h]` under `pi_eps` with the normalizer
/// taken on the same grid, re-evaluated at doubled resolution.
pub fn quadrature_integral_2d(
    model: &dyn Energy,
    h: &dyn Fn(&[f64]) -> f64,
    eps: f64,
    grid_n: usize,
    over: Option<&[(f64, f64)]>,
) -> Result<QuadratureOutcome> {
    if grid_n < 64 {
        return Err(Error::invalid("grid_n must be at least 64"));
    }
    let value = expectation_quadrature(model, h, eps, grid_n, over)?;
    let refined = expectation_quadrature(model, h, eps, grid_n * 2, over)?;
    Ok(QuadratureOutcome {
        value,
        refined,
        flagged: (value - refined).abs() > 1e-3,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMethod {
    ClosedForm,
    Quadrature,
}

#[derive(Debug, Clone, Copy)]
pub struct HalfplaneMass {
    pub value: f64,
    pub method: OracleMethod,
}

/// Mass of `{x[axis] < threshold}` under the Gibbs law of a diagonal Gaussian
/// mixture.
///
/// At `eps = 1` this is the plain mixture CDF, `sum_i a_i Phi((t - mu_i)/sigma_i)`,
/// and is exact. The Gibbs temper of a mixture is not itself a mixture, so for
/// `eps != 1` the value falls back to quadrature (d <= 2) rather than silently
/// using the variance-scaled approximation; higher dimensions are unsupported.
pub fn reference_halfplane_mass(
    mixture: &GaussianMixtureEnergy,
    axis: usize,
    threshold: f64,
    eps: f64,
) -> Result<HalfplaneMass> {
    if axis >= mixture.dimension() {
        return Err(Error::invalid("axis outside the mixture dimension"));
    }
    if !(eps > 0.0) {
        return Err(Error::invalid("temperature must be positive"));
    }
    if eps == 1.0 {
        let value = mixture
            .weights()
            .iter()
            .zip(mixture.means().iter().zip(mixture.variances()))
            .map(|(a, (mu, var))| {
                let n = Normal::new(mu[axis], var[axis].sqrt()).unwrap();
                a * n.cdf(threshold)
            })
            .sum();
        return Ok(HalfplaneMass {
            value,
            method: OracleMethod::ClosedForm,
        });
    }
    if mixture.dimension() > 2 {
        return Err(Error::Unsupported(
            "half-plane mass at eps != 1 needs quadrature and is limited to d <= 2".into(),
        ));
    }
    let full = integration_box(mixture, None)?;
    if threshold <= full[axis].0 {
        return Ok(HalfplaneMass {
            value: 0.0,
            method: OracleMethod::Quadrature,
        });
    }
    if threshold >= full[axis].1 {
        return Ok(HalfplaneMass {
            value: 1.0,
            method: OracleMethod::Quadrature,
        });
    }
    let mut below = full.clone();
    below[axis].1 = threshold;
    let log_below = log_partition(mixture, eps, 1024, Some(&below))?;
    let log_full = log_partition(mixture, eps, 1024, Some(&full))?;
    Ok(HalfplaneMass {
        value: (log_below - log_full).exp(),
        method: OracleMethod::Quadrature,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::QuadraticEnergy;

    fn bench_mixture() -> GaussianMixtureEnergy {
        GaussianMixtureEnergy::new(
            vec![0.7, 0.3],
            vec![vec![-1.0, 0.0], vec![1.0, 0.0]],
            vec![vec![0.09, 0.04], vec![0.02, 0.18]],
        )
        .unwrap()
    }

    #[test]
    fn unit_test_function_integrates_to_one() {
        let m = bench_mixture();
        let one = |_: &[f64]| 1.0;
        let out = quadrature_integral_2d(&m, &one, 1.0, 128, None).unwrap();
        assert!((out.value - 1.0).abs() < 1e-12);
        assert!(!out.flagged);
    }

    #[test]
    fn odd_function_over_symmetric_density_vanishes() {
        let m = QuadraticEnergy::standard(2);
        let odd = |x: &[f64]| x[0].powi(3) + x[1];
        let out = quadrature_integral_2d(&m, &odd, 1.0, 128, None).unwrap();
        assert!(out.value.abs() < 1e-10, "{}", out.value);
    }

    #[test]
    fn benchmark_halfplane_mass_is_0_69970() {
        let m = bench_mixture();
        let r = reference_halfplane_mass(&m, 0, 0.0, 1.0).unwrap();
        assert_eq!(r.method, OracleMethod::ClosedForm);
        assert!((r.value - 0.69970).abs() < 5e-6, "{}", r.value);
    }

    #[test]
    fn symmetric_mixture_halfplane_mass_is_half() {
        let m = GaussianMixtureEnergy::new(
            vec![0.5, 0.5],
            vec![vec![-1.0], vec![1.0]],
            vec![vec![0.04], vec![0.04]],
        )
        .unwrap();
        let r = reference_halfplane_mass(&m, 0, 0.0, 1.0).unwrap();
        assert!((r.value - 0.5).abs() < 1e-14);
        let single = GaussianMixtureEnergy::new(vec![1.0], vec![vec![0.3]], vec![vec![0.25]]).unwrap();
        let r = reference_halfplane_mass(&single, 0, 0.3, 1.0).unwrap();
        assert!((r.value - 0.5).abs() < 1e-14);
    }

    #[test]
    fn quadrature_agrees_with_closed_form_halfplane() {
        let m = bench_mixture();
        let closed = reference_halfplane_mass(&m, 0, 0.0, 1.0).unwrap().value;
        let h = |x: &[f64]| if x[0] < 0.0 { 1.0 } else { 0.0 };
        let quad = quadrature_integral_2d(&m, &h, 1.0, 512, None).unwrap();
        assert!(
            (quad.value - closed).abs() < 1e-4,
            "quad {} closed {closed}",
            quad.value
        );
    }

    #[test]
    fn tempered_halfplane_uses_quadrature() {
        let m = bench_mixture();
        let r = reference_halfplane_mass(&m, 0, 0.0, 0.5).unwrap();
        assert_eq!(r.method, OracleMethod::Quadrature);
        assert!(r.value > 0.5 && r.value < 1.0);
    }

    #[test]
    fn gaussian_partition_function_is_exact() {
        // Z = sqrt(2 pi eps) for U = x^2/2 in 1D.
        let m = QuadraticEnergy::standard(1);
        for eps in [1.0, 0.5, 0.25] {
            let lz = log_partition(&m, eps, 4096, None).unwrap();
            let exact = 0.5 * (2.0 * std::f64::consts::PI * eps).ln();
            assert!((lz - exact).abs() < 1e-8, "eps {eps}: {lz} vs {exact}");
        }
    }
}
