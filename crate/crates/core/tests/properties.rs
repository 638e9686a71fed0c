//! Property-based invariants.

use asmc::annealing::{plan_local, AnnealingSchedule, PlanTime};
use asmc::diagnostics::constants_bundle;
use asmc::kernels::{local_n_step_density, six_state_two_well, StayProbability};
use asmc::resampler::{AliasTable, WeightVector};
use asmc::targets::DomainSpec;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn schedule_reciprocals_linearly_spaced(
        eta1 in 0.5f64..4.0,
        ratio in 0.02f64..0.8,
        m in 2usize..40,
    ) {
        let eta = eta1 * ratio;
        let s = AnnealingSchedule::geometric(eta1, eta, m).unwrap();
        prop_assert_eq!(s.len(), m);
        prop_assert_eq!(s.eta1(), eta1);
        prop_assert_eq!(s.eta_final(), eta);
        let gap = s.inverse_gap();
        let expected = (1.0 / eta - 1.0 / eta1) / (m - 1) as f64;
        prop_assert!((gap - expected).abs() <= 1e-12 * expected.abs().max(1.0));
        let temps = s.temperatures();
        for k in 0..m - 1 {
            let g = 1.0 / temps[k + 1] - 1.0 / temps[k];
            prop_assert!((g - gap).abs() <= 1e-12 * gap.abs().max(1.0));
            prop_assert!(temps[k + 1] < temps[k]);
        }
    }

    #[test]
    fn weight_normalization_and_shift_invariance(
        raw in prop::collection::vec(-30.0f64..5.0, 2..60),
        shift in -20.0f64..20.0,
    ) {
        let w1 = WeightVector::from_log_weights(raw.clone()).unwrap();
        let p1 = w1.probabilities();
        let total: f64 = p1.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(p1.iter().all(|p| *p >= 0.0));

        let shifted: Vec<f64> = raw.iter().map(|l| l + shift).collect();
        let w2 = WeightVector::from_log_weights(shifted).unwrap();
        for (a, b) in p1.iter().zip(w2.probabilities()) {
            prop_assert!((a - b).abs() < 1e-9);
        }

        let ess = w1.effective_sample_size();
        prop_assert!(ess >= 1.0 - 1e-12);
        prop_assert!(ess <= raw.len() as f64 + 1e-9);
    }

    #[test]
    fn uniform_weights_reach_full_ess(n in 1usize..200, level in -5.0f64..5.0) {
        let w = WeightVector::from_log_weights(vec![level; n]).unwrap();
        prop_assert!((w.effective_sample_size() - n as f64).abs() < 1e-9);
    }

    #[test]
    fn alias_reconstruction_invariant(
        raw in prop::collection::vec(0.0f64..1.0, 1..300),
    ) {
        let total: f64 = raw.iter().sum();
        prop_assume!(total > 1e-9);
        let p: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let table = AliasTable::new(&p).unwrap();
        let implied = table.implied_probabilities();
        for (a, b) in p.iter().zip(&implied) {
            prop_assert!((a - b).abs() < 1e-12, "{} vs {}", a, b);
        }
    }

    #[test]
    fn torus_wrap_lands_in_cell(
        x in prop::collection::vec(-25.0f64..25.0, 1..6),
        period in 0.5f64..3.0,
    ) {
        let d = x.len();
        let domain = DomainSpec::torus_with_periods(vec![period; d]).unwrap();
        let mut y = x.clone();
        domain.wrap(&mut y);
        for v in &y {
            prop_assert!(*v >= 0.0 && *v < period);
        }
    }

    #[test]
    fn n_step_law_weights(chi in 0.01f64..0.99, n in 1u64..60) {
        let model = six_state_two_well(0.3, 0.1, StayProbability::Constant(chi)).unwrap();
        let law = local_n_step_density(&model, 1.0, n).unwrap();
        prop_assert!((law.global_weight + law.stay_weight - 1.0).abs() < 1e-12);
        prop_assert!((law.stay_weight - chi.powi(n as i32)).abs() < 1e-12);
    }

    #[test]
    fn planner_monotone_in_delta_and_eta(
        delta_hi in 0.05f64..0.5,
        shrink in 0.2f64..0.9,
        eta_hi in 0.05f64..0.5,
    ) {
        let bundle = constants_bundle(2, 1.3, 0.1).unwrap();
        let delta_lo = delta_hi * shrink;
        let eta_lo = eta_hi * shrink;
        let base = plan_local(delta_hi, 1.0, eta_hi, 1.0, &bundle, 0.5).unwrap();
        let tighter = plan_local(delta_lo, 1.0, eta_hi, 1.0, &bundle, 0.5).unwrap();
        prop_assert!(tighter.n >= base.n);
        let (PlanTime::Steps(t0), PlanTime::Steps(t1)) = (base.t, tighter.t) else {
            unreachable!()
        };
        prop_assert!(t1 >= t0);
        let colder = plan_local(delta_hi, 1.0, eta_lo, 1.0, &bundle, 0.5).unwrap();
        prop_assert!(colder.m >= base.m);
        // The schedule realizes the inverse-gap bound.
        let s = colder.schedule().unwrap();
        prop_assert!(s.inverse_gap() <= 1.0 + 1e-9);
    }

    #[test]
    fn finite_gibbs_probabilities_normalize(
        energies in prop::collection::vec(0.0f64..5.0, 2..12),
        eps in 0.05f64..2.0,
    ) {
        let membership: Vec<usize> = (0..energies.len()).map(|i| i % 2).collect();
        let model = asmc::kernels::FiniteStateLocalModel::new(
            energies,
            membership,
            StayProbability::Constant(0.5),
        )
        .unwrap();
        let p = model.state_probabilities(eps);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        let masses = asmc::kernels::LocalModel::masses(&model, eps);
        prop_assert!((masses.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }
}
