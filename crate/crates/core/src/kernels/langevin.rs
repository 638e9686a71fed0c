//! Euler--Maruyama discretization of the overdamped Langevin equation
//! `dY = -grad U(Y) dt + sqrt(2 eps) dW`.

use crate::error::{Error, Result};
use crate::math::ceil_tol;
use crate::stream::Stream;
use crate::targets::Energy;
use rand::Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LangevinConfig {
    pub dt: f64,
}

impl LangevinConfig {
    pub fn new(dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::invalid("dt must be positive"));
        }
        if dt > 0.1 {
            return Err(Error::invalid(format!(
                "dt = {dt} exceeds the stability guard 0.1"
            )));
        }
        Ok(LangevinConfig { dt })
    }

    pub fn steps_per_unit(&self) -> f64 {
        1.0 / self.dt
    }

    pub fn steps_for(&self, total_time: f64) -> u64 {
        ceil_tol(total_time / self.dt)
    }
}

/// One explicit step: `x' = x - grad U(x) dt + sqrt(2 eps dt) xi`, wrapped into
/// the fundamental domain on tori. `xi` is a caller-supplied standard-normal
/// vector; `grad_buf` is scratch of the same length.
#[inline]
pub fn langevin_step(
    x: &mut [f64],
    model: &dyn Energy,
    eps: f64,
    dt: f64,
    xi: &[f64],
    grad_buf: &mut [f64],
) -> Result<()> {
    model.grad_into(x, grad_buf);
    let noise = (2.0 * eps * dt).sqrt();
    let mut finite = true;
    for j in 0..x.len() {
        x[j] += -grad_buf[j] * dt + noise * xi[j];
        finite &= x[j].is_finite();
    }
    if !finite {
        return Err(Error::EnergyEvaluation { point: x.to_vec() });
    }
    model.domain().wrap(x);
    Ok(())
}

/// Run `ceil(total_time/dt)` steps, drawing exactly that many d-vectors from
/// the stream. `observe` is called after every step.
///
/// The raw integrator accepts any `dt > 0`; the `dt <= 0.1` stability guard
/// lives in [`LangevinConfig`], which the driver goes through.
pub fn langevin_run_observed(
    x: &mut [f64],
    model: &dyn Energy,
    eps: f64,
    total_time: f64,
    dt: f64,
    rng: &mut Stream,
    mut observe: impl FnMut(u64, &[f64]),
) -> Result<u64> {
    if !(total_time > 0.0) {
        return Err(Error::invalid("total_time must be positive"));
    }
    if !(dt > 0.0) {
        return Err(Error::invalid("dt must be positive"));
    }
    let steps = ceil_tol(total_time / dt);
    let d = x.len();
    let mut xi = vec![0.0f64; d];
    let mut grad = vec![0.0f64; d];
    for s in 0..steps {
        for z in xi.iter_mut() {
            *z = rng.sample(StandardNormal);
        }
        langevin_step(x, model, eps, dt, &xi, &mut grad)?;
        observe(s, x);
    }
    Ok(steps)
}

pub fn langevin_run(
    x: &mut [f64],
    model: &dyn Energy,
    eps: f64,
    total_time: f64,
    dt: f64,
    rng: &mut Stream,
) -> Result<u64> {
    langevin_run_observed(x, model, eps, total_time, dt, rng, |_, _| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::{purpose, stream};
    use crate::targets::{ConstantEnergy, DomainSpec, QuadraticEnergy};

    #[test]
    fn pure_drift_contracts_quadratic() {
        let m = QuadraticEnergy::standard(2);
        let mut x = vec![1.0, -2.0];
        let xi = vec![0.0, 0.0];
        let mut grad = vec![0.0; 2];
        langevin_step(&mut x, &m, 1.0, 0.1, &xi, &mut grad).unwrap();
        assert!((x[0] - 0.9).abs() < 1e-15);
        assert!((x[1] + 1.8).abs() < 1e-15);
    }

    #[test]
    fn torus_wraps_into_cell() {
        let m = ConstantEnergy::new(DomainSpec::torus(1), 0.0);
        let mut x = vec![0.9];
        // Zero drift; displacement +0.2 comes from the noise term with
        // sqrt(2 eps dt) = 0.2 and xi = 1.
        let xi = vec![1.0];
        let mut grad = vec![0.0; 1];
        langevin_step(&mut x, &m, 0.2, 0.1, &xi, &mut grad).unwrap();
        assert!((x[0] - 0.1).abs() < 1e-12, "{}", x[0]);
    }

    #[test]
    fn step_count_and_determinism() {
        let m = QuadraticEnergy::standard(1);
        let mut x = vec![0.5];
        let mut rng = stream(3, purpose::PROPAGATE, 0, 0);
        let steps = langevin_run(&mut x, &m, 1.0, 1.0, 0.5, &mut rng).unwrap();
        assert_eq!(steps, 2);

        let mut x1 = vec![0.5];
        let mut rng1 = stream(3, purpose::PROPAGATE, 0, 0);
        let n1 = langevin_run(&mut x1, &m, 1.0, 1.0, 0.1, &mut rng1).unwrap();
        assert_eq!(n1, 10);
        let mut x2 = vec![0.5];
        let mut rng2 = stream(3, purpose::PROPAGATE, 0, 0);
        let n2 = langevin_run(&mut x2, &m, 1.0, 1.0, 0.1, &mut rng2).unwrap();
        assert_eq!(n2, 10);
        assert_eq!(x1, x2);
    }

    #[test]
    fn config_guards_dt() {
        assert!(LangevinConfig::new(0.2).is_err());
        assert!(LangevinConfig::new(0.0).is_err());
        assert!(LangevinConfig::new(0.05).is_ok());
    }

    #[test]
    fn exact_step_count_at_boundary() {
        let cfg = LangevinConfig::new(0.05).unwrap();
        assert_eq!(cfg.steps_for(1.0), 20);
        assert_eq!(cfg.steps_for(0.9999999999), 20);
        assert_eq!(cfg.steps_for(1.01), 21);
    }
}
