//! Plain Langevin Monte Carlo and rejection sampling, for cost/accuracy
//! comparisons against the annealed sampler.

use crate::error::{Error, Result};
use crate::kernels::langevin_step;
use crate::particles::Particles;
use crate::stream::{purpose, stream, Stream};
use crate::targets::Energy;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

const CHUNK: usize = 1024;

#[derive(Debug, Clone)]
pub struct LmcResult {
    pub samples: Particles,
    /// Running estimate of the trace function after every step, when given.
    pub trace: Vec<f64>,
}

/// `n` independent Euler--Maruyama chains at temperature `eta` for `steps`
/// steps. `steps = 0` returns the initial points unchanged.
pub fn run_lmc(
    model: &dyn Energy,
    eta: f64,
    n: usize,
    steps: u64,
    dt: f64,
    init: &[f64],
    seed: u64,
    trace_h: Option<&(dyn Fn(&[f64]) -> f64 + Sync)>,
) -> Result<LmcResult> {
    if !(eta > 0.0) || !(dt > 0.0) {
        return Err(Error::invalid("eta and dt must be positive"));
    }
    let dim = model.dimension();
    if init.len() != dim {
        return Err(Error::invalid("initial point dimension disagrees with model"));
    }
    if n == 0 {
        return Err(Error::invalid("need at least one chain"));
    }
    let mut particles = Particles::filled(n, init);
    if steps == 0 {
        return Ok(LmcResult {
            samples: particles,
            trace: Vec::new(),
        });
    }

    let outcomes: Vec<Result<Vec<f64>>> = particles
        .as_mut_slice()
        .par_chunks_mut(CHUNK * dim)
        .enumerate()
        .map(|(chunk_idx, block)| {
            let base = chunk_idx * CHUNK;
            let mut acc = trace_h.map(|_| vec![0.0f64; steps as usize]);
            let mut xi = vec![0.0f64; dim];
            let mut grad = vec![0.0f64; dim];
            for (p, x) in block.chunks_mut(dim).enumerate() {
                let particle = base + p;
                let mut rng = stream(seed, purpose::BASELINE, 0, particle as u64);
                for s in 0..steps {
                    for z in xi.iter_mut() {
                        *z = rng.sample(StandardNormal);
                    }
                    langevin_step(x, model, eta, dt, &xi, &mut grad)
                        .map_err(|_| Error::NonFinitePosition { level: 1, particle })?;
                    if let (Some(acc), Some(h)) = (acc.as_mut(), trace_h) {
                        acc[s as usize] += h(x);
                    }
                }
            }
            Ok(acc.unwrap_or_default())
        })
        .collect();

    let mut trace = trace_h.map(|_| vec![0.0f64; steps as usize]);
    for o in outcomes {
        let part = o?;
        if let Some(t) = trace.as_mut() {
            for (a, b) in t.iter_mut().zip(&part) {
                *a += b;
            }
        }
    }
    let mut trace = trace.unwrap_or_default();
    for v in trace.iter_mut() {
        *v /= n as f64;
    }
    Ok(LmcResult {
        samples: particles,
        trace,
    })
}

#[derive(Debug, Clone)]
pub struct RejectionResult {
    pub accepted: Particles,
    pub acceptance_rate: f64,
    pub proposals_used: usize,
    /// Set when nothing was accepted within the budget.
    pub warning: Option<String>,
}

/// Dominated rejection from proposals distributed (approximately) as the Gibbs
/// law at `eta1`, targeting the law at `eta`:
/// accept with probability `exp(-(1/eta - 1/eta1)(U(x) - U_min))`, which has
/// supremum 1 at the energy minimum.
pub fn run_rejection(
    model: &dyn Energy,
    eta: f64,
    eta1: f64,
    proposal: &(dyn Fn(&mut Stream) -> Vec<f64> + Sync),
    budget: usize,
    seed: u64,
    u_min: Option<f64>,
) -> Result<RejectionResult> {
    if !(eta > 0.0 && eta1 > 0.0 && eta <= eta1) {
        return Err(Error::invalid("need 0 < eta <= eta1"));
    }
    if budget == 0 {
        return Err(Error::invalid("budget must be positive"));
    }
    let u_min = match u_min.or_else(|| model.known_inf()) {
        Some(v) => v,
        None => {
            return Err(Error::invalid(
                "U_min unknown: pass it explicitly or use a model with known_inf",
            ))
        }
    };
    let delta_beta = 1.0 / eta - 1.0 / eta1;
    let dim = model.dimension();

    let accepted_rows: Vec<Vec<Vec<f64>>> = (0..budget)
        .into_par_iter()
        .chunks(CHUNK)
        .map(|idxs| {
            let mut rows = Vec::new();
            for i in idxs {
                let mut rng = stream(seed, purpose::BASELINE, 1, i as u64);
                let x = proposal(&mut rng);
                debug_assert_eq!(x.len(), dim);
                let u = model.energy(&x);
                if !u.is_finite() {
                    continue;
                }
                let log_accept = -delta_beta * (u - u_min);
                let draw: f64 = rng.gen();
                if draw.ln() < log_accept {
                    rows.push(x);
                }
            }
            rows
        })
        .collect();

    let mut flat: Vec<Vec<f64>> = Vec::new();
    for mut rows in accepted_rows {
        flat.append(&mut rows);
    }
    let count = flat.len();
    let accepted = if count == 0 {
        Particles::zeros(0, dim)
    } else {
        Particles::from_rows(&flat)
    };
    let warning = if count == 0 {
        Some(format!("no proposals accepted within budget {budget}"))
    } else {
        None
    };
    Ok(RejectionResult {
        accepted,
        acceptance_rate: count as f64 / budget as f64,
        proposals_used: budget,
        warning,
    })
}

/// Proposal for torus energies without an exact sampler: uniform start plus a
/// long Langevin burn-in at `eta1`.
pub fn lmc_burn_in_proposal<'a>(
    model: &'a dyn Energy,
    eta1: f64,
    burn_in_time: f64,
    dt: f64,
) -> impl Fn(&mut Stream) -> Vec<f64> + Sync + 'a {
    move |rng: &mut Stream| {
        let d = model.dimension();
        let mut x: Vec<f64> = match model.domain() {
            crate::targets::DomainSpec::Torus { periods } => {
                periods.iter().map(|p| rng.gen_range(0.0..*p)).collect()
            }
            crate::targets::DomainSpec::Euclidean { .. } => {
                (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()
            }
        };
        crate::kernels::langevin_run(&mut x, model, eta1, burn_in_time, dt, rng)
            .expect("burn-in propagation failed");
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::{ConstantEnergy, DomainSpec, GaussianMixtureEnergy, QuadraticEnergy};

    #[test]
    fn zero_steps_returns_inits() {
        let m = QuadraticEnergy::standard(2);
        let r = run_lmc(&m, 1.0, 5, 0, 0.01, &[0.3, -0.2], 1, None).unwrap();
        assert_eq!(r.samples.len(), 5);
        for i in 0..5 {
            assert_eq!(r.samples.row(i), &[0.3, -0.2]);
        }
    }

    #[test]
    fn rejection_accepts_everything_at_equal_temperatures() {
        let m = QuadraticEnergy::standard(1);
        let proposal = |rng: &mut Stream| vec![rng.gen_range(-1.0..1.0)];
        let r = run_rejection(&m, 1.0, 1.0, &proposal, 500, 3, None).unwrap();
        assert_eq!(r.acceptance_rate, 1.0);
    }

    #[test]
    fn rejection_accepts_everything_for_constant_energy() {
        let m = ConstantEnergy::new(DomainSpec::euclidean(1), 4.0);
        let proposal = |rng: &mut Stream| vec![rng.gen_range(-1.0..1.0)];
        let r = run_rejection(&m, 0.25, 1.0, &proposal, 500, 3, None).unwrap();
        assert_eq!(r.acceptance_rate, 1.0);
    }

    #[test]
    fn rejection_rate_matches_analytic_gaussian() {
        // Proposals ~ N(0,1) = pi_1 for U = x^2/2; acceptance probability
        // E exp(-(1/eta - 1)x^2/2) = sqrt(eta) in closed form.
        let m = QuadraticEnergy::standard(1);
        let mixture =
            GaussianMixtureEnergy::new(vec![1.0], vec![vec![0.0]], vec![vec![1.0]]).unwrap();
        let proposal = move |rng: &mut Stream| {
            let mut out = vec![0.0];
            mixture.sample_into(rng, &mut out);
            out
        };
        let eta = 0.5f64;
        let budget = 40_000;
        let r = run_rejection(&m, eta, 1.0, &proposal, budget, 11, None).unwrap();
        let p = eta.sqrt();
        let sigma = (p * (1.0 - p) / budget as f64).sqrt();
        assert!(
            (r.acceptance_rate - p).abs() < 3.0 * sigma,
            "rate {} vs {p} (sigma {sigma})",
            r.acceptance_rate
        );
    }

    #[test]
    fn lmc_trace_has_one_entry_per_step() {
        let m = QuadraticEnergy::standard(1);
        let h = |x: &[f64]| x[0];
        let r = run_lmc(&m, 1.0, 50, 20, 0.01, &[1.0], 7, Some(&h)).unwrap();
        assert_eq!(r.trace.len(), 20);
    }
}
