//! Inter-level importance weights and O(N) multinomial resampling through an
//! alias table.

use crate::error::{Error, Result};
use crate::particles::Particles;
use crate::stream::Stream;
use crate::targets::Energy;
use rand::Rng;
use rayon::prelude::*;

/// Log-space importance weights with normalized probabilities derived by
/// max-shift exponentiation.
#[derive(Debug, Clone)]
pub struct WeightVector {
    log_weights: Vec<f64>,
    probabilities: Vec<f64>,
    max_log_weight: f64,
}

impl WeightVector {
    /// `NaN` or `+inf` entries are rejected; `-inf` is allowed (the particle
    /// simply never gets drawn) unless every entry is `-inf`.
    pub fn from_log_weights(log_weights: Vec<f64>) -> Result<Self> {
        if log_weights.is_empty() {
            return Err(Error::invalid("empty weight vector"));
        }
        let mut max = f64::NEG_INFINITY;
        for (i, l) in log_weights.iter().enumerate() {
            if l.is_nan() || *l == f64::INFINITY {
                return Err(Error::DegenerateWeights {
                    level: 0,
                    reason: format!("log weight {l} at particle {i}"),
                });
            }
            if *l > max {
                max = *l;
            }
        }
        if max == f64::NEG_INFINITY {
            return Err(Error::DegenerateWeights {
                level: 0,
                reason: "all log weights are -inf".into(),
            });
        }
        let mut probabilities: Vec<f64> = log_weights.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = probabilities.iter().sum();
        for p in probabilities.iter_mut() {
            *p /= total;
        }
        Ok(WeightVector {
            log_weights,
            probabilities,
            max_log_weight: max,
        })
    }

    pub fn uniform(n: usize) -> Self {
        WeightVector {
            log_weights: vec![0.0; n],
            probabilities: vec![1.0 / n as f64; n],
            max_log_weight: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn max_log_weight(&self) -> f64 {
        self.max_log_weight
    }

    /// `1 / sum p_i^2`, between 1 and N.
    pub fn effective_sample_size(&self) -> f64 {
        1.0 / self.probabilities.iter().map(|p| p * p).sum::<f64>()
    }
}

/// Weights for moving an ensemble from `eta_k` to `eta_next`:
/// `l_i = -(1/eta_next - 1/eta_k) U(x_i)`. Unnormalized constants cancel.
pub fn inter_level_log_weights(
    positions: &Particles,
    model: &dyn Energy,
    eta_k: f64,
    eta_next: f64,
) -> Result<WeightVector> {
    if !(eta_next < eta_k) {
        return Err(Error::invalid(format!(
            "eta_next must be below eta_k (got {eta_next} >= {eta_k})"
        )));
    }
    let delta_beta = 1.0 / eta_next - 1.0 / eta_k;
    let dim = positions.dim();
    let log_weights: Vec<f64> = positions
        .as_slice()
        .par_chunks(dim)
        .map(|x| -delta_beta * model.energy(x))
        .collect();
    WeightVector::from_log_weights(log_weights)
}

/// Free-function form of the diagnostic.
pub fn effective_sample_size(weights: &WeightVector) -> f64 {
    weights.effective_sample_size()
}

/// Vose alias table: constant-time categorical sampling after an O(N) build.
#[derive(Debug, Clone)]
pub struct AliasTable {
    thresholds: Vec<f64>,
    aliases: Vec<usize>,
}

impl AliasTable {
    pub fn new(p: &[f64]) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::invalid("alias table needs at least one cell"));
        }
        if p.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(Error::invalid("probabilities must be finite and nonnegative"));
        }
        let total: f64 = p.iter().sum();
        if !(total > 0.0) {
            return Err(Error::invalid("probabilities sum to zero"));
        }
        let n = p.len();
        let scale = n as f64 / total;
        let mut thresholds: Vec<f64> = p.iter().map(|v| v * scale).collect();
        let mut aliases: Vec<usize> = (0..n).collect();
        let mut small: Vec<usize> = Vec::with_capacity(n);
        let mut large: Vec<usize> = Vec::with_capacity(n);
        for (i, t) in thresholds.iter().enumerate() {
            if *t < 1.0 {
                small.push(i);
            } else {
                large.push(i);
            }
        }
        while let (Some(s), Some(l)) = (small.pop(), large.pop()) {
            aliases[s] = l;
            thresholds[l] -= 1.0 - thresholds[s];
            if thresholds[l] < 1.0 {
                small.push(l);
            } else {
                large.push(l);
            }
        }
        // Leftovers are 1 up to rounding.
        for i in large.into_iter().chain(small) {
            thresholds[i] = 1.0;
            aliases[i] = i;
        }
        Ok(AliasTable { thresholds, aliases })
    }

    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }

    #[inline]
    pub fn sample(&self, rng: &mut Stream) -> usize {
        let i = rng.gen_range(0..self.thresholds.len());
        let u: f64 = rng.gen();
        if u < self.thresholds[i] {
            i
        } else {
            self.aliases[i]
        }
    }

    /// The sampling distribution the table actually encodes; used to verify
    /// the reconstruction invariant.
    pub fn implied_probabilities(&self) -> Vec<f64> {
        let n = self.thresholds.len();
        let cell = 1.0 / n as f64;
        let mut p = vec![0.0; n];
        for i in 0..n {
            p[i] += cell * self.thresholds[i];
            p[self.aliases[i]] += cell * (1.0 - self.thresholds[i]);
        }
        p
    }
}

/// Draw N conditionally independent particles from the categorical law given
/// by `weights`. Output order is the draw order.
pub fn resample(
    positions: &Particles,
    weights: &WeightVector,
    rng: &mut Stream,
) -> Result<Particles> {
    if positions.len() != weights.len() {
        return Err(Error::invalid("weights and positions lengths disagree"));
    }
    let table = AliasTable::new(weights.probabilities())?;
    let indices: Vec<usize> = (0..positions.len()).map(|_| table.sample(rng)).collect();
    Ok(positions.gather(&indices))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::{purpose, stream};
    use crate::targets::{ConstantEnergy, DomainSpec, QuadraticEnergy};

    #[test]
    fn constant_energy_gives_uniform_probabilities() {
        let p = Particles::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]);
        let m = ConstantEnergy::new(DomainSpec::euclidean(1), 5.0);
        let w = inter_level_log_weights(&p, &m, 1.0, 0.5).unwrap();
        for pi in w.probabilities() {
            assert!((pi - 0.25).abs() < 1e-15);
        }
        assert!((w.effective_sample_size() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn two_point_normalization() {
        // log weights (0, -ln 3) -> probabilities (3/4, 1/4).
        let w = WeightVector::from_log_weights(vec![0.0, -(3.0f64.ln())]).unwrap();
        assert!((w.probabilities()[0] - 0.75).abs() < 1e-15);
        assert!((w.probabilities()[1] - 0.25).abs() < 1e-15);
        assert!((w.effective_sample_size() - 1.6).abs() < 1e-12);
    }

    #[test]
    fn shift_invariance_of_probabilities() {
        let base = vec![-3.0, -1.5, 0.2, -0.7];
        let w1 = WeightVector::from_log_weights(base.clone()).unwrap();
        let shifted: Vec<f64> = base.iter().map(|l| l - 2.5).collect();
        let w2 = WeightVector::from_log_weights(shifted).unwrap();
        for (a, b) in w1.probabilities().iter().zip(w2.probabilities()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn energy_shift_leaves_probabilities_unchanged() {
        let p = Particles::from_rows(&[vec![0.3], vec![-1.4], vec![0.9]]);
        let base = QuadraticEnergy::standard(1);
        struct Plus(QuadraticEnergy);
        impl crate::targets::Energy for Plus {
            fn domain(&self) -> &DomainSpec {
                self.0.domain()
            }
            fn energy(&self, x: &[f64]) -> f64 {
                self.0.energy(x) + 2.5
            }
            fn grad_into(&self, x: &[f64], out: &mut [f64]) {
                self.0.grad_into(x, out)
            }
        }
        let w1 = inter_level_log_weights(&p, &base, 1.0, 0.25).unwrap();
        let w2 = inter_level_log_weights(&p, &Plus(QuadraticEnergy::standard(1)), 1.0, 0.25).unwrap();
        for (a, b) in w1.probabilities().iter().zip(w2.probabilities()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn degenerate_weights_error() {
        assert!(matches!(
            WeightVector::from_log_weights(vec![f64::NEG_INFINITY; 3]),
            Err(Error::DegenerateWeights { .. })
        ));
        assert!(WeightVector::from_log_weights(vec![0.0, f64::NAN]).is_err());
        // A single -inf is fine: that particle just never gets drawn.
        let w = WeightVector::from_log_weights(vec![0.0, f64::NEG_INFINITY]).unwrap();
        assert_eq!(w.probabilities()[1], 0.0);
    }

    #[test]
    fn ess_bounds() {
        let one_hot = WeightVector::from_log_weights(vec![0.0, -1e9, -1e9]).unwrap();
        assert!((one_hot.effective_sample_size() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn alias_single_cell() {
        let t = AliasTable::new(&[1.0]).unwrap();
        let mut rng = stream(0, purpose::RESAMPLE, 0, 0);
        for _ in 0..10 {
            assert_eq!(t.sample(&mut rng), 0);
        }
    }

    #[test]
    fn alias_reconstruction_small() {
        let t = AliasTable::new(&[0.25, 0.75]).unwrap();
        let p = t.implied_probabilities();
        assert!((p[0] - 0.25).abs() < 1e-15);
        assert!((p[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn alias_rejects_negative() {
        assert!(AliasTable::new(&[0.5, -0.1]).is_err());
    }

    #[test]
    fn resample_concentrated_weights() {
        let p = Particles::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]);
        let w = WeightVector::from_log_weights(vec![-1e9, 0.0, -1e9]).unwrap();
        let mut rng = stream(1, purpose::RESAMPLE, 0, 0);
        let out = resample(&p, &w, &mut rng).unwrap();
        for i in 0..out.len() {
            assert_eq!(out.row(i), &[2.0]);
        }
    }

    #[test]
    fn zero_weight_particles_never_drawn() {
        let p = Particles::from_rows(&[vec![1.0], vec![2.0]]);
        let w = WeightVector::from_log_weights(vec![0.0, f64::NEG_INFINITY]).unwrap();
        let mut rng = stream(2, purpose::RESAMPLE, 0, 0);
        let out = resample(&p, &w, &mut rng).unwrap();
        for i in 0..out.len() {
            assert_eq!(out.row(i), &[1.0]);
        }
    }
}
