//! Gaussian mixture energy: `U(x) = -log sum_i a_i G(x; mu_i, Sigma_i)` with
//! diagonal covariances.

use super::{DomainSpec, Energy};
use crate::error::{Error, Result};
use crate::stream::Stream;
use rand::Rng;
use rand_distr::StandardNormal;

const LN_2PI: f64 = 1.8378770664093453;

#[derive(Debug, Clone)]
pub struct GaussianMixtureEnergy {
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    variances: Vec<Vec<f64>>,
    /// log a_i - (1/2) sum_j log(2 pi sigma_ij^2), so a component's log term
    /// is this constant minus half the Mahalanobis form.
    log_consts: Vec<f64>,
    domain: DomainSpec,
}

impl GaussianMixtureEnergy {
    pub fn new(weights: Vec<f64>, means: Vec<Vec<f64>>, variances: Vec<Vec<f64>>) -> Result<Self> {
        if weights.is_empty() || weights.len() != means.len() || weights.len() != variances.len() {
            return Err(Error::invalid("mixture component counts disagree"));
        }
        let d = means[0].len();
        if d == 0 {
            return Err(Error::invalid("mixture dimension must be >= 1"));
        }
        for (m, v) in means.iter().zip(&variances) {
            if m.len() != d || v.len() != d {
                return Err(Error::invalid("mixture component dimensions disagree"));
            }
            if v.iter().any(|s| !(*s > 0.0)) {
                return Err(Error::invalid("mixture variances must be positive"));
            }
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::invalid("mixture weights must be positive"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "mixture weights must sum to 1 (got {total})"
            )));
        }
        let log_consts = weights
            .iter()
            .zip(&variances)
            .map(|(a, v)| a.ln() - 0.5 * v.iter().map(|s| LN_2PI + s.ln()).sum::<f64>())
            .collect();
        Ok(GaussianMixtureEnergy {
            domain: DomainSpec::euclidean(d),
            weights,
            means,
            variances,
            log_consts,
        })
    }

    /// Equal-covariance shorthand: component `i` is isotropic with variance
    /// `variances[i]` and mean `centers_x1[i] * e_1`.
    pub fn isotropic_on_axis(
        dimension: usize,
        weights: Vec<f64>,
        centers_x1: Vec<f64>,
        variances: Vec<f64>,
    ) -> Result<Self> {
        if centers_x1.len() != weights.len() || variances.len() != weights.len() {
            return Err(Error::invalid("mixture component counts disagree"));
        }
        let means = centers_x1
            .iter()
            .map(|c| {
                let mut m = vec![0.0; dimension];
                m[0] = *c;
                m
            })
            .collect();
        let vars = variances.iter().map(|v| vec![*v; dimension]).collect();
        GaussianMixtureEnergy::new(weights, means, vars)
    }

    pub fn component_count(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn variances(&self) -> &[Vec<f64>] {
        &self.variances
    }

    /// Log of the mixture density at `x`.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        let mut max = f64::NEG_INFINITY;
        let k = self.weights.len();
        let mut terms = [0.0f64; 8];
        let mut heap_terms;
        let terms: &mut [f64] = if k <= 8 {
            &mut terms[..k]
        } else {
            heap_terms = vec![0.0; k];
            &mut heap_terms
        };
        for i in 0..k {
            let mut q = 0.0;
            let mu = &self.means[i];
            let var = &self.variances[i];
            for j in 0..x.len() {
                let z = x[j] - mu[j];
                q += z * z / var[j];
            }
            let t = self.log_consts[i] - 0.5 * q;
            terms[i] = t;
            if t > max {
                max = t;
            }
        }
        let mut sum = 0.0;
        for t in terms.iter() {
            sum += (t - max).exp();
        }
        max + sum.ln()
    }

    /// Draw one sample of the mixture itself (the Gibbs law at `eps = 1`).
    pub fn sample_into(&self, rng: &mut Stream, out: &mut [f64]) {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut comp = self.weights.len() - 1;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                comp = i;
                break;
            }
        }
        let mu = &self.means[comp];
        let var = &self.variances[comp];
        for j in 0..out.len() {
            let z: f64 = rng.sample(StandardNormal);
            out[j] = mu[j] + var[j].sqrt() * z;
        }
    }

    /// The variance-scaled mixture at temperature `eps`: component variances
    /// become `eps * sigma^2` and weights are re-tilted by the closed-form
    /// normalizer ratios, `a_i(eps) ~ a_i^(1/eps) * |Sigma_i|^((1-1/eps)/2)`.
    ///
    /// This family coincides with the Gibbs temper `exp(-U/eps)` exactly at
    /// `eps = 1` and approximates it otherwise (the temper of a mixture is not
    /// itself a mixture).
    pub fn tempered(&self, eps: f64) -> Result<GaussianMixtureEnergy> {
        if !(eps > 0.0) {
            return Err(Error::invalid("temperature must be positive"));
        }
        let beta = 1.0 / eps;
        let log_tilts: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.variances)
            .map(|(a, v)| {
                beta * a.ln() + 0.5 * (1.0 - beta) * v.iter().map(|s| s.ln()).sum::<f64>()
            })
            .collect();
        let max = log_tilts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let unnorm: Vec<f64> = log_tilts.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = unnorm.iter().sum();
        let mut weights: Vec<f64> = unnorm.iter().map(|w| w / total).collect();
        // Force an exact simplex after rounding.
        let s: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w /= s;
        }
        let variances = self
            .variances
            .iter()
            .map(|v| v.iter().map(|s| eps * s).collect())
            .collect();
        GaussianMixtureEnergy::new(weights, self.means.clone(), variances)
    }
}

impl Energy for GaussianMixtureEnergy {
    fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    fn energy(&self, x: &[f64]) -> f64 {
        -self.log_density(x)
    }

    fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        // grad U = sum_i w_i(x) (x - mu_i)/sigma_i^2 with posterior weights
        // w_i(x) = a_i G_i(x) / sum_j a_j G_j(x), computed with a max shift.
        let k = self.weights.len();
        let d = x.len();
        let mut terms = [0.0f64; 8];
        let mut heap_terms;
        let terms: &mut [f64] = if k <= 8 {
            &mut terms[..k]
        } else {
            heap_terms = vec![0.0; k];
            &mut heap_terms
        };
        let mut max = f64::NEG_INFINITY;
        for i in 0..k {
            let mut q = 0.0;
            let mu = &self.means[i];
            let var = &self.variances[i];
            for j in 0..d {
                let z = x[j] - mu[j];
                q += z * z / var[j];
            }
            let t = self.log_consts[i] - 0.5 * q;
            terms[i] = t;
            if t > max {
                max = t;
            }
        }
        let mut total = 0.0;
        for t in terms.iter_mut() {
            *t = (*t - max).exp();
            total += *t;
        }
        out.fill(0.0);
        for i in 0..k {
            let w = terms[i] / total;
            let mu = &self.means[i];
            let var = &self.variances[i];
            for j in 0..d {
                out[j] += w * (x[j] - mu[j]) / var[j];
            }
        }
    }

    fn minimizer_hints(&self) -> Vec<Vec<f64>> {
        self.means.clone()
    }

    fn extent_hint(&self) -> Option<Vec<(f64, f64)>> {
        let d = self.domain.dimension();
        let mut box_ = vec![(f64::INFINITY, f64::NEG_INFINITY); d];
        for (m, v) in self.means.iter().zip(&self.variances) {
            for j in 0..d {
                let s = v[j].sqrt();
                box_[j].0 = box_[j].0.min(m[j] - 10.0 * s);
                box_[j].1 = box_[j].1.max(m[j] + 10.0 * s);
            }
        }
        Some(box_)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::{gradient_check, log_unnormalized_density};

    /// The anisotropic two-component benchmark mixture in the plane.
    pub fn bench_mixture_2d() -> GaussianMixtureEnergy {
        GaussianMixtureEnergy::new(
            vec![0.7, 0.3],
            vec![vec![-1.0, 0.0], vec![1.0, 0.0]],
            vec![vec![0.09, 0.04], vec![0.02, 0.18]],
        )
        .unwrap()
    }

    fn component_log_pdf(x: &[f64], mu: &[f64], var: &[f64]) -> f64 {
        let mut l = 0.0;
        for j in 0..x.len() {
            let z = x[j] - mu[j];
            l += -0.5 * (LN_2PI + var[j].ln()) - 0.5 * z * z / var[j];
        }
        l
    }

    #[test]
    fn rejects_bad_simplex() {
        assert!(GaussianMixtureEnergy::new(
            vec![0.7, 0.31],
            vec![vec![0.0], vec![1.0]],
            vec![vec![1.0], vec![1.0]],
        )
        .is_err());
    }

    #[test]
    fn log_density_matches_direct_evaluation() {
        // Direct density-evaluation oracle, computed without the max shift at
        // a point where naive evaluation is safe.
        let m = bench_mixture_2d();
        let x = [-1.0, 0.0];
        let direct = (0.7 * component_log_pdf(&x, &[-1.0, 0.0], &[0.09, 0.04]).exp()
            + 0.3 * component_log_pdf(&x, &[1.0, 0.0], &[0.02, 0.18]).exp())
        .ln();
        let got = log_unnormalized_density(&m, &x, 1.0).unwrap();
        assert!((got - direct).abs() < 1e-12, "{got} vs {direct}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let m = bench_mixture_2d();
        let mut probes = Vec::new();
        let mut rng = crate::stream::stream(11, crate::stream::purpose::PROBE, 0, 0);
        for _ in 0..100 {
            probes.push(vec![rng.gen_range(-2.0..2.0), rng.gen_range(-1.5..1.5)]);
        }
        let r = gradient_check(&m, &probes).unwrap();
        assert!(r.max_relative_error < 1e-5, "{}", r.max_relative_error);
    }

    #[test]
    fn tempered_at_unit_temperature_is_identity() {
        let m = bench_mixture_2d();
        let t = m.tempered(1.0).unwrap();
        assert!((t.weights()[0] - 0.7).abs() < 1e-14);
        assert!((t.variances()[0][0] - 0.09).abs() < 1e-15);
    }

    #[test]
    fn sampling_hits_component_fractions() {
        let m = bench_mixture_2d();
        let mut rng = crate::stream::stream(5, crate::stream::purpose::PROBE, 1, 0);
        let mut out = [0.0; 2];
        let n = 20_000;
        let mut left = 0;
        for _ in 0..n {
            m.sample_into(&mut rng, &mut out);
            if out[0] < 0.0 {
                left += 1;
            }
        }
        let frac = left as f64 / n as f64;
        // P(x1 < 0) = 0.69970 for this mixture; 4 sigma band.
        assert!((frac - 0.6997).abs() < 4.0 * (0.6997f64 * 0.3003 / n as f64).sqrt());
    }
}
