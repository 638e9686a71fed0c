//! Monte Carlo error estimation, computable constants, and independent
//! reference oracles (closed form, quadrature, matrix power).

mod constants;
mod error_stats;
mod quadrature;

pub use constants::{
    compute_clbv, compute_sc, compute_sc_curve, constants_bundle, cr_bound, cr_bound_finite,
    cr_bound_with_grid, cr_empirical, cr_empirical_finite, cr_separable_check, default_c_grid,
    log_spaced, ClbvEstimate, ConstantsBundle, ConvexPartSpec, CrBound, ScCurve, ScEstimate,
    SeparableCrRow, SeparableCrTable,
};
pub use error_stats::{mc_error, summarize, ErrorSummary};
pub use quadrature::{
    expectation_quadrature, integration_box, log_partition, quadrature_integral_2d,
    reference_halfplane_mass, HalfplaneMass, OracleMethod, QuadratureOutcome,
};

use crate::particles::Particles;
use crate::targets::WellClassifier;

/// Empirical well-mass fractions: `mu0(Omega_j) = (1/N) sum 1{x_i in Omega_j}`.
pub fn mass_fractions(particles: &Particles, classifier: &dyn WellClassifier) -> Vec<f64> {
    let mut counts = vec![0usize; classifier.well_count()];
    for row in particles.rows() {
        let j = classifier.classify(row);
        counts[j] += 1;
    }
    let n = particles.len().max(1) as f64;
    counts.iter().map(|c| *c as f64 / n).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::HalfspaceClassifier;

    #[test]
    fn fractions_count_indicators() {
        let c = HalfspaceClassifier {
            axis: 0,
            threshold: 0.0,
        };
        let all_left = Particles::from_rows(&[vec![-1.0], vec![-0.5], vec![-2.0]]);
        assert_eq!(mass_fractions(&all_left, &c), vec![1.0, 0.0]);
        let split = Particles::from_rows(&[vec![-1.0], vec![-0.5], vec![-2.0], vec![3.0]]);
        assert_eq!(mass_fractions(&split, &c), vec![0.75, 0.25]);
    }
}
