//! Markov transition mechanisms: discretized overdamped Langevin dynamics and
//! the idealized local-mixing kernel.

mod finite;
mod halfspace;
mod langevin;

pub use finite::{six_state_two_well, FiniteStateLocalModel};
pub use halfspace::MixtureHalfspaceLocalModel;
pub use langevin::{langevin_run, langevin_run_observed, langevin_step, LangevinConfig};

use crate::error::{Error, Result};
use crate::math::ceil_tol;
use crate::stream::Stream;
use rand::Rng;

/// Probability of staying in the current energy valley during one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StayProbability {
    Constant(f64),
    /// `chi(eps) = exp(-amplitude * exp(-barrier / eps))`: the valley-exit
    /// rate follows an Arrhenius law in the temperature.
    Arrhenius { amplitude: f64, barrier: f64 },
}

impl StayProbability {
    pub fn value(&self, eps: f64) -> f64 {
        let chi = match self {
            StayProbability::Constant(c) => *c,
            StayProbability::Arrhenius { amplitude, barrier } => {
                (-amplitude * (-barrier / eps).exp()).exp()
            }
        };
        debug_assert!(chi > 0.0 && chi < 1.0, "stay probability {chi} outside (0,1)");
        chi
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            StayProbability::Constant(c) if !(*c > 0.0 && *c < 1.0) => Err(Error::invalid(
                format!("constant stay probability must lie in (0,1), got {c}"),
            )),
            StayProbability::Arrhenius { amplitude, barrier }
                if !(*amplitude > 0.0) || !(*barrier > 0.0) =>
            {
                Err(Error::invalid(
                    "Arrhenius stay probability needs positive amplitude and barrier",
                ))
            }
            _ => Ok(()),
        }
    }
}

/// The idealized local-mixing model: a partition of the domain into `J`
/// valleys, exact conditional samplers per valley, and a global sampler.
///
/// One step from `x` in valley `j`: with probability `chi(eps)` draw from the
/// Gibbs law conditioned on valley `j` (the stay component), otherwise draw
/// from the full Gibbs law.
pub trait LocalModel: Send + Sync {
    fn dim(&self) -> usize;

    /// Number of valleys `J`.
    fn domain_count(&self) -> usize;

    fn membership(&self, x: &[f64]) -> usize;

    fn stay_probability(&self, eps: f64) -> f64;

    /// `(pi_eps(Omega_1), ..., pi_eps(Omega_J))`.
    fn masses(&self, eps: f64) -> Vec<f64>;

    /// Prepare a sampler bound to one temperature. Per-temperature tables
    /// (alias tables, tilted weights) are built once here instead of per step.
    fn sampler_at(&self, eps: f64) -> Result<Box<dyn LocalSampler + Send + '_>>;
}

/// Per-temperature sampling interface used in propagation loops.
pub trait LocalSampler {
    fn stay_probability(&self) -> f64;
    fn membership(&self, x: &[f64]) -> usize;
    fn sample_global_into(&mut self, rng: &mut Stream, out: &mut [f64]) -> Result<()>;
    fn sample_conditional_into(
        &mut self,
        domain: usize,
        rng: &mut Stream,
        out: &mut [f64],
    ) -> Result<()>;
}

/// One transition of the local-mixing kernel, in place.
pub fn local_step(x: &mut [f64], sampler: &mut dyn LocalSampler, rng: &mut Stream) -> Result<()> {
    let j = sampler.membership(x);
    let u: f64 = rng.gen();
    if u < sampler.stay_probability() {
        sampler.sample_conditional_into(j, rng, x)?;
        if sampler.membership(x) != j {
            return Err(Error::InvariantViolation(format!(
                "conditional sampler for valley {j} produced a point outside it"
            )));
        }
    } else {
        sampler.sample_global_into(rng, x)?;
    }
    Ok(())
}

/// Convenience wrapper that prepares a sampler for a single step.
pub fn local_step_at(
    x: &mut [f64],
    eps: f64,
    model: &dyn LocalModel,
    rng: &mut Stream,
) -> Result<()> {
    let mut sampler = model.sampler_at(eps)?;
    local_step(x, sampler.as_mut(), rng)
}

/// Mixture weights of the n-step law: the chain is a `(1 - chi^n)` global draw
/// plus a `chi^n` within-valley conditional draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NStepLaw {
    pub global_weight: f64,
    pub stay_weight: f64,
}

pub fn local_n_step_density(model: &dyn LocalModel, eps: f64, n: u64) -> Result<NStepLaw> {
    if n < 1 {
        return Err(Error::invalid("step count must be >= 1"));
    }
    let chi = model.stay_probability(eps);
    let stay = chi.powi(n.min(i32::MAX as u64) as i32);
    Ok(NStepLaw {
        global_weight: 1.0 - stay,
        stay_weight: stay,
    })
}

/// `ceil(ln(delta/2) / ln(chi))`: after this many steps the total-variation
/// distance to the Gibbs law is at most `delta` from any start.
pub fn mixing_time_bound(chi: f64, delta: f64) -> Result<u64> {
    if !(chi > 0.0 && chi < 1.0) {
        return Err(Error::invalid(format!("chi must lie in (0,1), got {chi}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must lie in (0,1), got {delta}")));
    }
    Ok(ceil_tol((delta / 2.0).ln() / chi.ln()).max(1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixing_time_powers_of_two() {
        assert_eq!(mixing_time_bound(0.5, 0.25).unwrap(), 3);
        assert_eq!(mixing_time_bound(0.5, 0.5).unwrap(), 2);
    }

    #[test]
    fn n_step_weights() {
        let model = FiniteStateLocalModel::new(
            vec![0.0, 1.0],
            vec![0, 1],
            StayProbability::Constant(0.5),
        )
        .unwrap();
        let law = local_n_step_density(&model, 1.0, 1).unwrap();
        assert_eq!(law.global_weight, 0.5);
        assert_eq!(law.stay_weight, 0.5);
        let law = local_n_step_density(&model, 1.0, 3).unwrap();
        assert!((law.global_weight - 0.875).abs() < 1e-15);
        assert!((law.stay_weight - 0.125).abs() < 1e-15);
    }

    #[test]
    fn arrhenius_chi_moves_towards_one_as_temperature_drops() {
        let chi = StayProbability::Arrhenius {
            amplitude: 2.0,
            barrier: 1.0,
        };
        assert!(chi.value(1.0) < chi.value(0.5));
        assert!(chi.value(0.5) < chi.value(0.1));
        assert!(chi.value(0.1) < 1.0);
    }
}
