//! A two-well trigonometric energy on the unit torus.
//!
//! `U(x) = A (1 - cos 2 pi x1)(1 + kappa cos 2 pi x1) + B sum_{j>=2} (1 - cos 2 pi x_j)`
//!
//! For `kappa` in (1/3, 1] the x1 profile has exactly two non-degenerate local
//! minima, at `x1 = 0` (depth 0, the global minimum) and `x1 = 1/2` (depth
//! `2A(1 - kappa)`), separated by interior maxima at
//! `cos 2 pi x1 = (kappa - 1) / (2 kappa)`. At `kappa = 1` the profile is
//! `A sin^2(2 pi x1)`: a symmetric double well with wells of equal depth.
//! The remaining coordinates are convex within the cell, so the basin
//! boundary is the pair of hyperplanes through the interior maxima.

use super::{DomainSpec, Energy, WellClassifier};
use crate::error::{Error, Result};
use std::f64::consts::TAU;

#[derive(Debug, Clone)]
pub struct DoubleWellTorusEnergy {
    amplitude: f64,
    kappa: f64,
    cross_amplitude: f64,
    domain: DomainSpec,
    /// x1 coordinate of the interior maximum in (0, 1/2].
    saddle_x1: f64,
}

impl DoubleWellTorusEnergy {
    pub fn new(dimension: usize, amplitude: f64, kappa: f64, cross_amplitude: f64) -> Result<Self> {
        if dimension < 1 {
            return Err(Error::invalid("dimension must be >= 1"));
        }
        if !(amplitude > 0.0) {
            return Err(Error::invalid("amplitude must be positive"));
        }
        if !(kappa > 1.0 / 3.0 && kappa <= 1.0) {
            return Err(Error::invalid(
                "kappa must lie in (1/3, 1] for a two-well profile",
            ));
        }
        if dimension > 1 && !(cross_amplitude > 0.0) {
            return Err(Error::invalid("cross amplitude must be positive for d > 1"));
        }
        let saddle_x1 = ((kappa - 1.0) / (2.0 * kappa)).acos() / TAU;
        Ok(DoubleWellTorusEnergy {
            amplitude,
            kappa,
            cross_amplitude,
            domain: DomainSpec::torus(dimension),
            saddle_x1,
        })
    }

    /// The symmetric equal-depth instance `A sin^2(2 pi x1) + ...`.
    pub fn symmetric(dimension: usize, amplitude: f64, cross_amplitude: f64) -> Result<Self> {
        DoubleWellTorusEnergy::new(dimension, amplitude, 1.0, cross_amplitude)
    }

    fn profile(&self, x1: f64) -> f64 {
        let c = (TAU * x1).cos();
        self.amplitude * (1.0 - c) * (1.0 + self.kappa * c)
    }

    /// The two minimizers; the first is the global minimum.
    pub fn well_minima(&self) -> [Vec<f64>; 2] {
        let d = self.domain.dimension();
        let mut m2 = vec![0.0; d];
        m2[0] = 0.5;
        [vec![0.0; d], m2]
    }

    /// Saddle height `U(s)` (the energy needed from the global minimum) and
    /// the barrier `U(s) - U(x_min,2)` seen from the shallower well.
    pub fn saddle_height(&self) -> f64 {
        self.profile(self.saddle_x1)
    }

    pub fn energy_barrier(&self) -> f64 {
        self.saddle_height() - self.profile(0.5)
    }

    /// Ratio of saddle height to energy barrier (>= 1, exactly 1 for wells of
    /// equal depth).
    pub fn gamma_hat_r(&self) -> f64 {
        self.saddle_height() / self.energy_barrier()
    }

    pub fn classifier(&self) -> DoubleWellClassifier {
        DoubleWellClassifier {
            saddle_x1: self.saddle_x1,
        }
    }
}

impl Energy for DoubleWellTorusEnergy {
    fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    fn energy(&self, x: &[f64]) -> f64 {
        let mut u = self.profile(x[0]);
        for xj in &x[1..] {
            u += self.cross_amplitude * (1.0 - (TAU * xj).cos());
        }
        u
    }

    fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        // d/dx1 [A(1-c)(1+kc)] = 2 pi A s (1 - k + 2 k c), c = cos, s = sin.
        let s = (TAU * x[0]).sin();
        let c = (TAU * x[0]).cos();
        out[0] = TAU * self.amplitude * s * (1.0 - self.kappa + 2.0 * self.kappa * c);
        for j in 1..x.len() {
            out[j] = TAU * self.cross_amplitude * (TAU * x[j]).sin();
        }
    }

    fn known_inf(&self) -> Option<f64> {
        // 1 + kappa cos >= 1 - kappa >= 0, so U >= 0 with equality at x = 0.
        Some(0.0)
    }

    fn minimizer_hints(&self) -> Vec<Vec<f64>> {
        self.well_minima().to_vec()
    }
}

/// Classifies by the x1 position relative to the interior maxima: well 0 is
/// the basin of `x1 = 0`, well 1 the basin of `x1 = 1/2`.
#[derive(Debug, Clone)]
pub struct DoubleWellClassifier {
    saddle_x1: f64,
}

impl WellClassifier for DoubleWellClassifier {
    fn well_count(&self) -> usize {
        2
    }
    fn classify(&self, x: &[f64]) -> usize {
        let x1 = x[0].rem_euclid(1.0);
        usize::from(x1 > self.saddle_x1 && x1 < 1.0 - self.saddle_x1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minima_have_tiny_gradient() {
        let m = DoubleWellTorusEnergy::new(2, 1.5, 0.8, 1.0).unwrap();
        let mut g = vec![0.0; 2];
        for min in m.well_minima() {
            m.grad_into(&min, &mut g);
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(norm < 1e-8, "gradient norm {norm} at {min:?}");
        }
    }

    #[test]
    fn classifier_constant_near_minima() {
        let m = DoubleWellTorusEnergy::new(1, 1.0, 0.7, 1.0).unwrap();
        let c = m.classifier();
        for dx in [-0.05, 0.0, 0.05] {
            assert_eq!(c.classify(&[(0.0f64 + dx).rem_euclid(1.0)]), 0);
            assert_eq!(c.classify(&[0.5 + dx]), 1);
        }
    }

    #[test]
    fn periodicity() {
        let m = DoubleWellTorusEnergy::new(3, 2.0, 0.9, 0.5).unwrap();
        let x = [0.3, 0.6, 0.9];
        let shifted = [0.3 + 1.0, 0.6, 0.9 - 1.0];
        assert!((m.energy(&x) - m.energy(&shifted)).abs() < 1e-12);
        let mut gx = vec![0.0; 3];
        let mut gs = vec![0.0; 3];
        m.grad_into(&x, &mut gx);
        m.grad_into(&shifted, &mut gs);
        for (a, b) in gx.iter().zip(&gs) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_instance_has_equal_wells() {
        let m = DoubleWellTorusEnergy::symmetric(1, 1.0, 1.0).unwrap();
        assert!((m.energy(&[0.0]) - m.energy(&[0.5])).abs() < 1e-14);
        assert!((m.gamma_hat_r() - 1.0).abs() < 1e-12);
        // Saddle of A sin^2 sits at x1 = 1/4 with height A.
        assert!((m.saddle_height() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn asymmetric_instance_has_deeper_first_well() {
        let m = DoubleWellTorusEnergy::new(1, 1.0, 0.6, 1.0).unwrap();
        assert_eq!(m.energy(&[0.0]), 0.0);
        // Second well depth 2A(1-kappa).
        assert!((m.energy(&[0.5]) - 0.8).abs() < 1e-12);
        assert!(m.gamma_hat_r() > 1.0);
    }

    #[test]
    fn dense_grid_confirms_global_minimum() {
        // Dense-grid minimum oracle at d = 1 and d = 2.
        let m1 = DoubleWellTorusEnergy::new(1, 1.3, 0.75, 1.0).unwrap();
        let grid_min = (0..20_000)
            .map(|i| m1.energy(&[i as f64 / 20_000.0]))
            .fold(f64::INFINITY, f64::min);
        assert!(grid_min >= 0.0 && grid_min < 1e-6);

        let m2 = DoubleWellTorusEnergy::new(2, 1.3, 0.75, 0.9).unwrap();
        let mut grid_min = f64::INFINITY;
        for i in 0..300 {
            for j in 0..300 {
                let v = m2.energy(&[i as f64 / 300.0, j as f64 / 300.0]);
                grid_min = grid_min.min(v);
            }
        }
        assert!(grid_min >= 0.0 && grid_min < 1e-3);
    }
}
