//! Exact local-mixing model on a finite state space.
//!
//! States are the integers `0..n`, stored as 1-d positions (`x[0] = state`).
//! Everything about the Gibbs law is computable by enumeration, so this model
//! doubles as the exact oracle for kernel and driver tests.

use super::{LocalModel, LocalSampler, StayProbability};
use crate::error::{Error, Result};
use crate::stream::Stream;
use crate::targets::{DomainSpec, Energy};
use rand::Rng;

#[derive(Debug, Clone)]
pub struct FiniteStateLocalModel {
    energies: Vec<f64>,
    membership: Vec<usize>,
    j: usize,
    chi: StayProbability,
    domain: DomainSpec,
}

impl FiniteStateLocalModel {
    pub fn new(energies: Vec<f64>, membership: Vec<usize>, chi: StayProbability) -> Result<Self> {
        if energies.is_empty() || energies.len() != membership.len() {
            return Err(Error::invalid("energies and membership lengths disagree"));
        }
        if energies.iter().any(|u| !u.is_finite()) {
            return Err(Error::invalid("state energies must be finite"));
        }
        chi.validate()?;
        let j = membership.iter().copied().max().unwrap() + 1;
        for d in 0..j {
            if !membership.contains(&d) {
                return Err(Error::invalid(format!("valley {d} has no states")));
            }
        }
        Ok(FiniteStateLocalModel {
            domain: DomainSpec::euclidean(1),
            energies,
            membership,
            j,
            chi,
        })
    }

    pub fn state_count(&self) -> usize {
        self.energies.len()
    }

    pub fn state_of(&self, x: &[f64]) -> usize {
        let s = x[0].round();
        debug_assert!(s >= 0.0 && (s as usize) < self.energies.len());
        s as usize
    }

    /// Exact Gibbs probabilities by enumeration (max-shifted softmax).
    pub fn state_probabilities(&self, eps: f64) -> Vec<f64> {
        let max_l = self
            .energies
            .iter()
            .map(|u| -u / eps)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut p: Vec<f64> = self.energies.iter().map(|u| (-u / eps - max_l).exp()).collect();
        let z: f64 = p.iter().sum();
        for v in p.iter_mut() {
            *v /= z;
        }
        p
    }

    /// Exact expectation of a per-state test function under the Gibbs law.
    pub fn expectation(&self, eps: f64, h: &[f64]) -> f64 {
        self.state_probabilities(eps)
            .iter()
            .zip(h)
            .map(|(p, h)| p * h)
            .sum()
    }

    /// One-step transition matrix, row `x` to column `y`:
    /// `(1 - chi) pi(y) + chi 1{same valley} pi(y) / pi(valley)`.
    pub fn transition_matrix(&self, eps: f64) -> Vec<Vec<f64>> {
        let n = self.state_count();
        let pi = self.state_probabilities(eps);
        let masses = self.masses(eps);
        let chi = self.chi.value(eps);
        let mut rows = vec![vec![0.0; n]; n];
        for x in 0..n {
            let jx = self.membership[x];
            for y in 0..n {
                let mut p = (1.0 - chi) * pi[y];
                if self.membership[y] == jx {
                    p += chi * pi[y] / masses[jx];
                }
                rows[x][y] = p;
            }
        }
        rows
    }

    /// n-step matrix from the closed form `(1 - chi^n) pi + chi^n conditional`,
    /// verified against the n-th power of the one-step matrix to 1e-10.
    pub fn n_step_matrix_checked(&self, eps: f64, n: u64) -> Result<Vec<Vec<f64>>> {
        if n < 1 {
            return Err(Error::invalid("step count must be >= 1"));
        }
        let size = self.state_count();
        let pi = self.state_probabilities(eps);
        let masses = self.masses(eps);
        let chi_n = self.chi.value(eps).powi(n as i32);
        let mut closed = vec![vec![0.0; size]; size];
        for x in 0..size {
            let jx = self.membership[x];
            for y in 0..size {
                let mut p = (1.0 - chi_n) * pi[y];
                if self.membership[y] == jx {
                    p += chi_n * pi[y] / masses[jx];
                }
                closed[x][y] = p;
            }
        }

        let one = self.transition_matrix(eps);
        let mut power = one.clone();
        for _ in 1..n {
            power = mat_mul(&power, &one);
        }
        let mut max_dev: f64 = 0.0;
        for x in 0..size {
            for y in 0..size {
                max_dev = max_dev.max((closed[x][y] - power[x][y]).abs());
            }
        }
        if max_dev > 1e-10 {
            return Err(Error::InvariantViolation(format!(
                "closed-form n-step law deviates from the matrix power by {max_dev:.3e}"
            )));
        }
        Ok(closed)
    }

    /// Worst-row total-variation distance to the Gibbs law after `n` steps.
    pub fn tv_after(&self, eps: f64, n: u64) -> Result<f64> {
        let pi = self.state_probabilities(eps);
        let m = self.n_step_matrix_checked(eps, n)?;
        let mut worst: f64 = 0.0;
        for row in &m {
            let tv = 0.5 * row.iter().zip(&pi).map(|(p, q)| (p - q).abs()).sum::<f64>();
            worst = worst.max(tv);
        }
        Ok(worst)
    }
}

fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            for j in 0..n {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

impl Energy for FiniteStateLocalModel {
    fn domain(&self) -> &DomainSpec {
        &self.domain
    }
    fn energy(&self, x: &[f64]) -> f64 {
        self.energies[self.state_of(x)]
    }
    fn grad_into(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn known_inf(&self) -> Option<f64> {
        self.energies.iter().cloned().reduce(f64::min)
    }
    fn minimizer_hints(&self) -> Vec<Vec<f64>> {
        let mut best = 0;
        for (i, u) in self.energies.iter().enumerate() {
            if *u < self.energies[best] {
                best = i;
            }
        }
        vec![vec![best as f64]]
    }
}

impl LocalModel for FiniteStateLocalModel {
    fn dim(&self) -> usize {
        1
    }

    fn domain_count(&self) -> usize {
        self.j
    }

    fn membership(&self, x: &[f64]) -> usize {
        self.membership[self.state_of(x)]
    }

    fn stay_probability(&self, eps: f64) -> f64 {
        self.chi.value(eps)
    }

    fn masses(&self, eps: f64) -> Vec<f64> {
        let pi = self.state_probabilities(eps);
        let mut m = vec![0.0; self.j];
        for (s, d) in self.membership.iter().enumerate() {
            m[*d] += pi[s];
        }
        m
    }

    fn sampler_at(&self, eps: f64) -> Result<Box<dyn LocalSampler + Send + '_>> {
        let pi = self.state_probabilities(eps);
        let mut global_cdf = Vec::with_capacity(pi.len());
        let mut acc = 0.0;
        for p in &pi {
            acc += p;
            global_cdf.push(acc);
        }
        let masses = self.masses(eps);
        let mut domain_states: Vec<Vec<usize>> = vec![Vec::new(); self.j];
        for (s, d) in self.membership.iter().enumerate() {
            domain_states[*d].push(s);
        }
        let mut domain_cdfs = Vec::with_capacity(self.j);
        for (d, states) in domain_states.iter().enumerate() {
            let mut cdf = Vec::with_capacity(states.len());
            let mut acc = 0.0;
            for s in states {
                acc += pi[*s] / masses[d];
                cdf.push(acc);
            }
            domain_cdfs.push(cdf);
        }
        Ok(Box::new(FiniteSampler {
            model: self,
            chi: self.chi.value(eps),
            global_cdf,
            domain_states,
            domain_cdfs,
        }))
    }
}

struct FiniteSampler<'a> {
    model: &'a FiniteStateLocalModel,
    chi: f64,
    global_cdf: Vec<f64>,
    domain_states: Vec<Vec<usize>>,
    domain_cdfs: Vec<Vec<f64>>,
}

#[inline]
fn cdf_draw(cdf: &[f64], u: f64) -> usize {
    let mut i = 0;
    while i + 1 < cdf.len() && u >= cdf[i] {
        i += 1;
    }
    i
}

impl LocalSampler for FiniteSampler<'_> {
    fn stay_probability(&self) -> f64 {
        self.chi
    }

    fn membership(&self, x: &[f64]) -> usize {
        self.model.membership[self.model.state_of(x)]
    }

    fn sample_global_into(&mut self, rng: &mut Stream, out: &mut [f64]) -> Result<()> {
        let u: f64 = rng.gen();
        out[0] = cdf_draw(&self.global_cdf, u) as f64;
        Ok(())
    }

    fn sample_conditional_into(
        &mut self,
        domain: usize,
        rng: &mut Stream,
        out: &mut [f64],
    ) -> Result<()> {
        let u: f64 = rng.gen();
        let local = cdf_draw(&self.domain_cdfs[domain], u);
        out[0] = self.domain_states[domain][local] as f64;
        Ok(())
    }
}

/// The six-state, two-valley instance used throughout the tests: three energy
/// rungs per valley.
pub fn six_state_two_well(
    depth_step: f64,
    asymmetry: f64,
    chi: StayProbability,
) -> Result<FiniteStateLocalModel> {
    let energies = vec![
        0.0,
        depth_step,
        2.0 * depth_step,
        asymmetry,
        asymmetry + depth_step,
        asymmetry + 2.0 * depth_step,
    ];
    FiniteStateLocalModel::new(energies, vec![0, 0, 0, 1, 1, 1], chi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> FiniteStateLocalModel {
        six_state_two_well(0.3, 0.15, StayProbability::Constant(0.6)).unwrap()
    }

    #[test]
    fn probabilities_sum_to_one() {
        let m = model();
        for eps in [1.0, 0.5, 0.1] {
            let p = m.state_probabilities(eps);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let masses = m.masses(eps);
            assert!((masses.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn stationarity_of_one_step_matrix() {
        let m = model();
        let eps = 0.4;
        let pi = m.state_probabilities(eps);
        let t = m.transition_matrix(eps);
        for y in 0..m.state_count() {
            let mut acc = 0.0;
            for x in 0..m.state_count() {
                acc += pi[x] * t[x][y];
            }
            assert!((acc - pi[y]).abs() < 1e-10, "residual at column {y}");
        }
    }

    #[test]
    fn closed_form_matches_matrix_power() {
        let m = model();
        for n in [1, 2, 5, 11] {
            m.n_step_matrix_checked(0.7, n).unwrap();
        }
    }

    #[test]
    fn tv_below_delta_at_mixing_bound() {
        let m = model();
        let eps = 1.0;
        for delta in [0.25, 0.1, 0.01] {
            let n = super::super::mixing_time_bound(0.6, delta).unwrap();
            assert!(m.tv_after(eps, n).unwrap() <= delta);
        }
    }

    #[test]
    fn rejects_empty_valley() {
        assert!(FiniteStateLocalModel::new(
            vec![0.0, 1.0],
            vec![0, 2],
            StayProbability::Constant(0.5)
        )
        .is_err());
    }
}
