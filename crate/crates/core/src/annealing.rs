//! Geometric annealing schedules and the parameter planner mapping
//! (delta, nu, eta, constants) to (M, N, T).

use crate::diagnostics::ConstantsBundle;
use crate::error::{Error, Result};
use crate::kernels::mixing_time_bound;
use crate::math::ceil_tol;

/// A strictly decreasing temperature ladder whose reciprocals are linearly
/// spaced (so the densities form a geometric sequence).
#[derive(Debug, Clone, PartialEq)]
pub struct AnnealingSchedule {
    temperatures: Vec<f64>,
}

impl AnnealingSchedule {
    /// Build the ladder with `1/eta_k` interpolating `1/eta1 .. 1/eta`
    /// linearly; endpoints are exact.
    pub fn geometric(eta1: f64, eta: f64, m: usize) -> Result<Self> {
        if !(eta > 0.0) || !(eta < eta1) {
            return Err(Error::invalid(format!(
                "need 0 < eta < eta1 (got eta = {eta}, eta1 = {eta1})"
            )));
        }
        if m < 2 {
            return Err(Error::invalid("geometric schedule needs M >= 2"));
        }
        let beta1 = 1.0 / eta1;
        let beta_m = 1.0 / eta;
        let step = (beta_m - beta1) / (m - 1) as f64;
        let mut temperatures = Vec::with_capacity(m);
        temperatures.push(eta1);
        for k in 1..m - 1 {
            temperatures.push(1.0 / (beta1 + k as f64 * step));
        }
        temperatures.push(eta);
        Ok(AnnealingSchedule { temperatures })
    }

    /// Single-level schedule (no resampling ever happens); permitted only for
    /// the rejection-equivalence degenerate case.
    pub fn single(eta: f64) -> Result<Self> {
        if !(eta > 0.0) {
            return Err(Error::invalid("temperature must be positive"));
        }
        Ok(AnnealingSchedule {
            temperatures: vec![eta],
        })
    }

    pub fn from_temperatures(temperatures: Vec<f64>) -> Result<Self> {
        if temperatures.is_empty() {
            return Err(Error::invalid("schedule must not be empty"));
        }
        if temperatures.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::invalid("temperatures must be positive"));
        }
        for w in temperatures.windows(2) {
            if !(w[1] < w[0]) {
                return Err(Error::invalid("temperatures must be strictly decreasing"));
            }
        }
        let s = AnnealingSchedule { temperatures };
        if s.len() >= 3 {
            let gap = s.inverse_gap();
            for k in 0..s.len() - 1 {
                let g = 1.0 / s.temperatures[k + 1] - 1.0 / s.temperatures[k];
                if (g - gap).abs() > 1e-12 * gap.abs().max(1.0) {
                    return Err(Error::invalid(
                        "reciprocal temperatures are not linearly spaced",
                    ));
                }
            }
        }
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.temperatures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.temperatures.is_empty()
    }

    pub fn temperatures(&self) -> &[f64] {
        &self.temperatures
    }

    pub fn eta1(&self) -> f64 {
        self.temperatures[0]
    }

    pub fn eta_final(&self) -> f64 {
        *self.temperatures.last().unwrap()
    }

    /// The constant inverse-temperature increment `1/eta_{k+1} - 1/eta_k`.
    pub fn inverse_gap(&self) -> f64 {
        if self.len() < 2 {
            return 0.0;
        }
        (1.0 / self.eta_final() - 1.0 / self.eta1()) / (self.len() - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanMode {
    LocalModel,
    Langevin,
}

/// Planned time per level: a step count for the local-mixing kernel,
/// continuous time for Langevin (the driver converts to `ceil(T/dt)` steps).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlanTime {
    Steps(u64),
    Continuous(f64),
}

#[derive(Debug, Clone)]
pub struct ParameterPlan {
    pub mode: PlanMode,
    pub delta: f64,
    pub nu: f64,
    pub eta: f64,
    pub eta1: f64,
    pub alpha: Option<f64>,
    pub gamma_hat_r: f64,
    pub m: u64,
    pub n: u64,
    pub t: PlanTime,
}

impl ParameterPlan {
    pub fn schedule(&self) -> Result<AnnealingSchedule> {
        if self.m == 1 {
            AnnealingSchedule::single(self.eta)
        } else {
            AnnealingSchedule::geometric(self.eta1, self.eta, self.m as usize)
        }
    }
}

fn check_positive(pairs: &[(&str, f64)]) -> Result<()> {
    for (name, v) in pairs {
        if !(*v > 0.0) {
            return Err(Error::Planner(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(())
}

/// `M = ceil(1/(nu eta))`, raised when necessary so the inverse-temperature
/// increment of the resulting geometric ladder stays at most `nu` (the two
/// coincide for `nu <= 1` with `eta1 = 1`).
pub fn planned_level_count(nu: f64, eta: f64, eta1: f64) -> u64 {
    let by_count = ceil_tol(1.0 / (nu * eta));
    let by_gap = ceil_tol(1.0 + (1.0 / eta - 1.0 / eta1) / nu);
    by_count.max(by_gap).max(2)
}

/// Plan (M, N, T) for the local-mixing kernel:
/// `M = ceil(1/(nu eta))`, `N = ceil(C_N M^2 / delta^2)` and `T` the
/// delta/C_T mixing-time bound at the initial temperature.
pub fn plan_local(
    delta: f64,
    nu: f64,
    eta: f64,
    eta1: f64,
    constants: &ConstantsBundle,
    chi_at_eta1: f64,
) -> Result<ParameterPlan> {
    check_positive(&[("delta", delta), ("nu", nu), ("eta", eta), ("eta1", eta1)])?;
    if !(delta < 1.0) {
        return Err(Error::Planner("delta must be < 1".into()));
    }
    if !(chi_at_eta1 > 0.0 && chi_at_eta1 < 1.0) {
        return Err(Error::Planner("chi at eta1 must lie in (0,1)".into()));
    }
    if !(eta < eta1) {
        return Err(Error::Planner("eta must be below eta1".into()));
    }
    let (c_t, c_n) = (constants.c_t, constants.c_n);
    if !c_t.is_finite() || !c_n.is_finite() {
        return Err(Error::Planner("constants bundle lacks finite C_T/C_N".into()));
    }
    let m = planned_level_count(nu, eta, eta1);
    let n = ceil_tol(c_n * (m * m) as f64 / (delta * delta)).max(2);
    let t = mixing_time_bound(chi_at_eta1, delta / c_t)?;
    Ok(ParameterPlan {
        mode: PlanMode::LocalModel,
        delta,
        nu,
        eta,
        eta1,
        alpha: None,
        gamma_hat_r: 1.0,
        m,
        n,
        t: PlanTime::Steps(t),
    })
}

/// Plan (M, N, T) for Langevin propagation:
/// `T = C_T (M^((1+alpha) gamma_r) + log(1/delta) + 1/eta)` in continuous time.
pub fn plan_langevin(
    delta: f64,
    nu: f64,
    eta: f64,
    alpha: f64,
    gamma_hat_r: f64,
    c_t: f64,
    c_n: f64,
) -> Result<ParameterPlan> {
    check_positive(&[
        ("delta", delta),
        ("nu", nu),
        ("eta", eta),
        ("alpha", alpha),
        ("C_T", c_t),
        ("C_N", c_n),
    ])?;
    if !(gamma_hat_r >= 1.0) {
        return Err(Error::Planner("gamma_hat_r must be >= 1".into()));
    }
    let m = planned_level_count(nu, eta, 1.0);
    let t = c_t * ((m as f64).powf((1.0 + alpha) * gamma_hat_r) + (1.0 / delta).ln() + 1.0 / eta);
    let n = ceil_tol(c_n * (m * m) as f64 / (delta * delta)).max(2);
    Ok(ParameterPlan {
        mode: PlanMode::Langevin,
        delta,
        nu,
        eta,
        eta1: 1.0,
        alpha: Some(alpha),
        gamma_hat_r,
        m,
        n,
        t: PlanTime::Continuous(t),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::constants_bundle;

    #[test]
    fn reciprocals_one_to_four() {
        let s = AnnealingSchedule::geometric(1.0, 0.25, 4).unwrap();
        let expect = [1.0, 0.5, 1.0 / 3.0, 0.25];
        for (a, b) in s.temperatures().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        }
    }

    #[test]
    fn reciprocals_one_to_two() {
        let s = AnnealingSchedule::geometric(1.0, 0.5, 3).unwrap();
        let expect = [1.0, 2.0 / 3.0, 0.5];
        for (a, b) in s.temperatures().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn endpoints_only() {
        let s = AnnealingSchedule::geometric(1.0, 0.5, 2).unwrap();
        assert_eq!(s.temperatures(), &[1.0, 0.5]);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(AnnealingSchedule::geometric(1.0, 1.0, 4).is_err());
        assert!(AnnealingSchedule::geometric(1.0, 1.5, 4).is_err());
        assert!(AnnealingSchedule::geometric(1.0, 0.5, 1).is_err());
    }

    #[test]
    fn plan_local_worked_example() {
        // C_r = 1, C_LBV = 0, J = 2 gives C_T = 24, C_N = 144.
        let bundle = constants_bundle(2, 1.0, 0.0).unwrap();
        let plan = plan_local(0.1, 1.0, 0.1, 1.0, &bundle, 0.5).unwrap();
        assert_eq!(plan.m, 10);
        assert_eq!(plan.n, 1_440_000);
        assert_eq!(plan.t, PlanTime::Steps(9));
    }

    #[test]
    fn plan_local_powers_of_two() {
        let bundle = ConstantsBundle {
            j: 2,
            c_r: 1.0,
            c_lbv: 0.0,
            c_beta: 1.0,
            c_t: 2.0,
            c_n: 1.0,
        };
        let plan = plan_local(0.25, 1.0, 0.5, 1.0, &bundle, 0.5).unwrap();
        assert_eq!(plan.m, 2);
        assert_eq!(plan.n, 64);
        assert_eq!(plan.t, PlanTime::Steps(4));
    }

    #[test]
    fn plan_langevin_worked_example() {
        let plan = plan_langevin(0.1, 1.0, 0.2, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(plan.m, 5);
        assert_eq!(plan.n, 2500);
        match plan.t {
            PlanTime::Continuous(t) => {
                assert!((t - (25.0 + 10.0f64.ln() + 5.0)).abs() < 1e-12)
            }
            _ => panic!("expected continuous time"),
        }
    }

    #[test]
    fn plan_langevin_nu_one_matches_inverse_eta() {
        for eta in [0.5, 0.25, 0.2, 0.125, 0.1] {
            let plan = plan_langevin(0.1, 1.0, eta, 1.0, 1.0, 1.0, 1.0).unwrap();
            assert_eq!(plan.m, (1.0f64 / eta).ceil() as u64);
        }
    }

    #[test]
    fn schedule_gap_respects_nu() {
        // With M from the planner, consecutive inverse temperatures differ by
        // at most nu.
        for (delta, nu, eta) in [(0.1, 1.0, 0.1), (0.2, 0.5, 0.07), (0.1, 2.0, 0.3)] {
            let bundle = constants_bundle(2, 1.0, 0.0).unwrap();
            let plan = plan_local(delta, nu, eta, 1.0, &bundle, 0.5).unwrap();
            let s = plan.schedule().unwrap();
            assert!(s.inverse_gap() <= nu + 1e-12, "gap {} > nu {nu}", s.inverse_gap());
        }
    }

    #[test]
    fn planner_outputs_are_monotone() {
        let bundle = constants_bundle(2, 1.0, 0.0).unwrap();
        let base = plan_local(0.1, 1.0, 0.1, 1.0, &bundle, 0.5).unwrap();
        let tighter = plan_local(0.05, 1.0, 0.1, 1.0, &bundle, 0.5).unwrap();
        assert!(tighter.n >= base.n);
        let (PlanTime::Steps(t0), PlanTime::Steps(t1)) = (base.t, tighter.t) else {
            panic!()
        };
        assert!(t1 >= t0);
        let colder = plan_local(0.1, 1.0, 0.05, 1.0, &bundle, 0.5).unwrap();
        assert!(colder.m >= base.m);
    }
}
