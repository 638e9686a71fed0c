//! Local-mixing model over a Gaussian mixture with half-space valleys.
//!
//! The temperature family is the variance-scaled mixture of
//! [`GaussianMixtureEnergy::tempered`], which admits exact global sampling at
//! every temperature (it matches the Gibbs temper of the mixture energy
//! exactly at `eps = 1`). Conditional draws are component draws rejected
//! against the half-space.

use super::{LocalModel, LocalSampler, StayProbability};
use crate::error::{Error, Result};
use crate::stream::Stream;
use crate::targets::GaussianMixtureEnergy;
use statrs::distribution::{ContinuousCDF, Normal};

const MAX_REJECTION_ATTEMPTS: usize = 100_000;

#[derive(Debug, Clone)]
pub struct MixtureHalfspaceLocalModel {
    mixture: GaussianMixtureEnergy,
    axis: usize,
    threshold: f64,
    chi: StayProbability,
}

impl MixtureHalfspaceLocalModel {
    pub fn new(
        mixture: GaussianMixtureEnergy,
        axis: usize,
        threshold: f64,
        chi: StayProbability,
    ) -> Result<Self> {
        if axis >= mixture.means()[0].len() {
            return Err(Error::invalid("half-space axis outside the dimension"));
        }
        chi.validate()?;
        Ok(MixtureHalfspaceLocalModel {
            mixture,
            axis,
            threshold,
            chi,
        })
    }

    fn tempered(&self, eps: f64) -> Result<GaussianMixtureEnergy> {
        self.mixture.tempered(eps)
    }
}

impl LocalModel for MixtureHalfspaceLocalModel {
    fn dim(&self) -> usize {
        self.mixture.means()[0].len()
    }

    fn domain_count(&self) -> usize {
        2
    }

    fn membership(&self, x: &[f64]) -> usize {
        usize::from(x[self.axis] >= self.threshold)
    }

    fn stay_probability(&self, eps: f64) -> f64 {
        self.chi.value(eps)
    }

    fn masses(&self, eps: f64) -> Vec<f64> {
        let t = self.tempered(eps).expect("temperature already validated");
        let below: f64 = t
            .weights()
            .iter()
            .zip(t.means().iter().zip(t.variances()))
            .map(|(a, (mu, var))| {
                let n = Normal::new(mu[self.axis], var[self.axis].sqrt()).unwrap();
                a * n.cdf(self.threshold)
            })
            .sum();
        vec![below, 1.0 - below]
    }

    fn sampler_at(&self, eps: f64) -> Result<Box<dyn LocalSampler + Send + '_>> {
        let tempered = self.tempered(eps)?;
        let masses = self.masses(eps);
        if masses.iter().any(|m| *m < 1e-9) {
            return Err(Error::InvariantViolation(
                "a half-space valley carries negligible mass; conditional rejection would stall"
                    .into(),
            ));
        }
        Ok(Box::new(HalfspaceSampler {
            model: self,
            tempered,
            chi: self.chi.value(eps),
        }))
    }
}

struct HalfspaceSampler<'a> {
    model: &'a MixtureHalfspaceLocalModel,
    tempered: GaussianMixtureEnergy,
    chi: f64,
}

impl LocalSampler for HalfspaceSampler<'_> {
    fn stay_probability(&self) -> f64 {
        self.chi
    }

    fn membership(&self, x: &[f64]) -> usize {
        self.model.membership(x)
    }

    fn sample_global_into(&mut self, rng: &mut Stream, out: &mut [f64]) -> Result<()> {
        self.tempered.sample_into(rng, out);
        Ok(())
    }

    fn sample_conditional_into(
        &mut self,
        domain: usize,
        rng: &mut Stream,
        out: &mut [f64],
    ) -> Result<()> {
        for _ in 0..MAX_REJECTION_ATTEMPTS {
            self.tempered.sample_into(rng, out);
            if self.model.membership(out) == domain {
                return Ok(());
            }
        }
        Err(Error::InvariantViolation(format!(
            "conditional rejection sampler for valley {domain} failed after \
             {MAX_REJECTION_ATTEMPTS} attempts"
        )))
    }
}
