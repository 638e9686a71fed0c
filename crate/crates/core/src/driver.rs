//! Orchestrates the annealed SMC loop: propagate at each temperature level,
//! reweight and resample between levels, return the final ensemble.

use crate::annealing::AnnealingSchedule;
use crate::diagnostics::mass_fractions;
use crate::error::{Error, Result};
use crate::kernels::{langevin_step, local_step, LangevinConfig, LocalModel};
use crate::math::ceil_tol;
use crate::particles::Particles;
use crate::resampler::{inter_level_log_weights, resample};
use crate::stream::{purpose, stream, Stream};
use crate::targets::{Energy, WellClassifier};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::time::Instant;

/// Particles are processed in fixed-size blocks so that floating-point
/// reductions have one canonical order regardless of thread count.
const CHUNK: usize = 1024;

#[derive(Clone, Copy)]
pub enum KernelSpec<'a> {
    Langevin { config: LangevinConfig },
    Local { model: &'a dyn LocalModel },
}

/// Level running time: continuous for Langevin (converted to `ceil(T/dt)`
/// steps), a step count for the local kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LevelTime {
    Continuous(f64),
    Steps(u64),
}

pub enum InitialState<'a> {
    /// Every particle starts at this point (the deliberately adversarial
    /// single-well default).
    Point(Vec<f64>),
    /// Per-particle draws from a seeded sampler.
    Sampler(&'a (dyn Fn(&mut Stream) -> Vec<f64> + Sync)),
    /// An explicit starting ensemble.
    Particles(Particles),
}

pub struct RunConfig<'a> {
    pub model: &'a dyn Energy,
    pub schedule: &'a AnnealingSchedule,
    pub n: usize,
    pub level_time: LevelTime,
    pub kernel: KernelSpec<'a>,
    pub init: InitialState<'a>,
    pub seed: u64,
    pub classifier: Option<&'a dyn WellClassifier>,
    /// When set, the running estimate `(1/N) sum h` is recorded after every
    /// propagation step.
    pub trace_h: Option<&'a (dyn Fn(&[f64]) -> f64 + Sync)>,
}

#[derive(Debug, Clone)]
pub struct LevelRow {
    /// 1-based level index.
    pub level: usize,
    pub eta: f64,
    /// ESS of the weights toward the next level; `N` at the final level.
    pub ess: f64,
    /// Max log weight toward the next level; 0 at the final level.
    pub max_log_weight: f64,
    pub mass_fractions: Vec<f64>,
    pub wall_secs: f64,
}

#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub rows: Vec<LevelRow>,
    pub kernel_invocations: usize,
    pub resample_count: usize,
    pub steps_per_level: u64,
    /// Running estimate per global step when a trace function was supplied.
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Ensemble {
    pub particles: Particles,
    /// 1-based index of the level the ensemble was last propagated at.
    pub level: usize,
    pub seed: u64,
}

/// `(1/N) sum_i h(x_i)`.
pub fn estimate(ensemble: &Ensemble, h: impl Fn(&[f64]) -> f64) -> f64 {
    let n = ensemble.particles.len();
    let mut acc = 0.0;
    for row in ensemble.particles.rows() {
        acc += h(row);
    }
    acc / n as f64
}

pub fn run_asmc(cfg: &RunConfig) -> Result<(Ensemble, RunReport)> {
    run_asmc_observed(cfg, |_| {})
}

/// Like [`run_asmc`] but invokes `on_level` with each completed level row, so
/// long runs can stream their report to disk mid-flight.
pub fn run_asmc_observed(
    cfg: &RunConfig,
    mut on_level: impl FnMut(&LevelRow),
) -> Result<(Ensemble, RunReport)> {
    let m = cfg.schedule.len();
    let dim = cfg.model.dimension();
    if m >= 2 && cfg.n < 2 {
        return Err(Error::invalid("N must be >= 2 when the schedule has M >= 2"));
    }
    if cfg.n < 1 {
        return Err(Error::invalid("N must be >= 1"));
    }
    let steps_per_level = match (&cfg.kernel, cfg.level_time) {
        (KernelSpec::Langevin { config }, LevelTime::Continuous(t)) => {
            if !(t > 0.0) {
                return Err(Error::invalid("level time must be positive"));
            }
            config.steps_for(t)
        }
        (KernelSpec::Langevin { .. }, LevelTime::Steps(s)) => s,
        (KernelSpec::Local { .. }, LevelTime::Steps(s)) => s,
        (KernelSpec::Local { .. }, LevelTime::Continuous(t)) => ceil_tol(t),
    };
    if steps_per_level == 0 {
        return Err(Error::invalid("level time yields zero steps"));
    }
    if let KernelSpec::Local { model } = &cfg.kernel {
        if model.dim() != dim {
            return Err(Error::invalid("local model dimension disagrees with energy"));
        }
    }

    let mut particles = init_particles(cfg, dim)?;
    let mut report = RunReport {
        steps_per_level,
        ..RunReport::default()
    };
    if cfg.trace_h.is_some() {
        report.trace.reserve(m * steps_per_level as usize);
    }

    let temps = cfg.schedule.temperatures().to_vec();
    for (idx, &eta_k) in temps.iter().enumerate() {
        let level = idx + 1;
        let started = Instant::now();
        let trace_part = propagate(cfg, &mut particles, eta_k, level, steps_per_level)?;
        report.kernel_invocations += 1;
        if let Some(mut t) = trace_part {
            for v in t.iter_mut() {
                *v /= cfg.n as f64;
            }
            report.trace.extend_from_slice(&t);
        }

        let fractions = match cfg.classifier {
            Some(c) => mass_fractions(&particles, c),
            None => vec![1.0],
        };

        let (ess, max_log_weight) = if level < m {
            let eta_next = temps[idx + 1];
            let weights = inter_level_log_weights(&particles, cfg.model, eta_k, eta_next)
                .map_err(|e| at_level(e, level))?;
            let ess = weights.effective_sample_size();
            let max_lw = weights.max_log_weight();
            let mut rng = stream(cfg.seed, purpose::RESAMPLE, level as u64, 0);
            particles = resample(&particles, &weights, &mut rng).map_err(|e| at_level(e, level))?;
            report.resample_count += 1;
            (ess, max_lw)
        } else {
            (cfg.n as f64, 0.0)
        };

        let row = LevelRow {
            level,
            eta: eta_k,
            ess,
            max_log_weight,
            mass_fractions: fractions,
            wall_secs: started.elapsed().as_secs_f64(),
        };
        on_level(&row);
        report.rows.push(row);
    }

    Ok((
        Ensemble {
            particles,
            level: m,
            seed: cfg.seed,
        },
        report,
    ))
}

fn at_level(e: Error, level: usize) -> Error {
    match e {
        Error::DegenerateWeights { reason, .. } => Error::DegenerateWeights { level, reason },
        other => other,
    }
}

fn init_particles(cfg: &RunConfig, dim: usize) -> Result<Particles> {
    match &cfg.init {
        InitialState::Point(p) => {
            if p.len() != dim {
                return Err(Error::invalid("initial point dimension disagrees with model"));
            }
            Ok(Particles::filled(cfg.n, p))
        }
        InitialState::Sampler(f) => {
            let mut particles = Particles::zeros(cfg.n, dim);
            for i in 0..cfg.n {
                let mut rng = stream(cfg.seed, purpose::INIT, 0, i as u64);
                let p = f(&mut rng);
                if p.len() != dim {
                    return Err(Error::invalid("initial sampler dimension disagrees with model"));
                }
                particles.row_mut(i).copy_from_slice(&p);
            }
            Ok(particles)
        }
        InitialState::Particles(p) => {
            if p.len() != cfg.n || p.dim() != dim {
                return Err(Error::invalid("initial ensemble has the wrong shape"));
            }
            Ok(p.clone())
        }
    }
}

/// Propagate every particle for `steps` kernel steps at temperature `eta_k`.
/// Returns the per-step sum of the trace function over particles, if tracing.
fn propagate(
    cfg: &RunConfig,
    particles: &mut Particles,
    eta_k: f64,
    level: usize,
    steps: u64,
) -> Result<Option<Vec<f64>>> {
    let dim = particles.dim();
    let trace_h = cfg.trace_h;
    let seed = cfg.seed;

    let outcomes: Vec<Result<Vec<f64>>> = match &cfg.kernel {
        KernelSpec::Langevin { config } => {
            let dt = config.dt;
            let model = cfg.model;
            particles
                .as_mut_slice()
                .par_chunks_mut(CHUNK * dim)
                .enumerate()
                .map(|(chunk_idx, block)| {
                    let base = chunk_idx * CHUNK;
                    let mut acc = trace_h.map(|_| vec![0.0f64; steps as usize]);
                    let mut xi = vec![0.0f64; dim];
                    let mut grad = vec![0.0f64; dim];
                    for (p, x) in block.chunks_mut(dim).enumerate() {
                        let particle = base + p;
                        let mut rng =
                            stream(seed, purpose::PROPAGATE, level as u64, particle as u64);
                        for s in 0..steps {
                            for z in xi.iter_mut() {
                                *z = rng.sample(StandardNormal);
                            }
                            langevin_step(x, model, eta_k, dt, &xi, &mut grad).map_err(|_| {
                                Error::NonFinitePosition { level, particle }
                            })?;
                            if let (Some(acc), Some(h)) = (acc.as_mut(), trace_h) {
                                acc[s as usize] += h(x);
                            }
                        }
                    }
                    Ok(acc.unwrap_or_default())
                })
                .collect()
        }
        KernelSpec::Local { model } => {
            particles
                .as_mut_slice()
                .par_chunks_mut(CHUNK * dim)
                .enumerate()
                .map(|(chunk_idx, block)| {
                    let base = chunk_idx * CHUNK;
                    let mut acc = trace_h.map(|_| vec![0.0f64; steps as usize]);
                    let mut sampler = model.sampler_at(eta_k)?;
                    for (p, x) in block.chunks_mut(dim).enumerate() {
                        let particle = base + p;
                        let mut rng =
                            stream(seed, purpose::PROPAGATE, level as u64, particle as u64);
                        for s in 0..steps {
                            local_step(x, sampler.as_mut(), &mut rng)?;
                            if let (Some(acc), Some(h)) = (acc.as_mut(), trace_h) {
                                acc[s as usize] += h(x);
                            }
                        }
                    }
                    Ok(acc.unwrap_or_default())
                })
                .collect()
        }
    };

    // Merge in chunk order: the reduction order is fixed by CHUNK alone.
    let mut merged = trace_h.map(|_| vec![0.0f64; steps as usize]);
    for outcome in outcomes {
        let part = outcome?;
        if let Some(m) = merged.as_mut() {
            for (a, b) in m.iter_mut().zip(&part) {
                *a += b;
            }
        }
    }
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::StayProbability;
    use crate::targets::{ConstantEnergy, DomainSpec, QuadraticEnergy};

    fn quad_cfg<'a>(
        model: &'a QuadraticEnergy,
        schedule: &'a AnnealingSchedule,
    ) -> RunConfig<'a> {
        RunConfig {
            model,
            schedule,
            n: 64,
            level_time: LevelTime::Continuous(0.5),
            kernel: KernelSpec::Langevin {
                config: LangevinConfig::new(0.05).unwrap(),
            },
            init: InitialState::Point(vec![0.0]),
            seed: 99,
            classifier: None,
            trace_h: None,
        }
    }

    #[test]
    fn kernel_and_resampler_counts_follow_the_loop_structure() {
        let model = QuadraticEnergy::standard(1);
        let schedule = AnnealingSchedule::geometric(1.0, 0.25, 4).unwrap();
        let cfg = quad_cfg(&model, &schedule);
        let (ensemble, report) = run_asmc(&cfg).unwrap();
        assert_eq!(report.kernel_invocations, 4);
        assert_eq!(report.resample_count, 3);
        assert_eq!(report.rows.len(), 4);
        assert_eq!(ensemble.level, 4);
        assert_eq!(ensemble.particles.len(), 64);
    }

    #[test]
    fn single_level_schedule_never_resamples() {
        let model = QuadraticEnergy::standard(1);
        let schedule = AnnealingSchedule::single(0.5).unwrap();
        let mut cfg = quad_cfg(&model, &schedule);
        cfg.n = 16;
        let (_, report) = run_asmc(&cfg).unwrap();
        assert_eq!(report.kernel_invocations, 1);
        assert_eq!(report.resample_count, 0);
        assert_eq!(report.rows.len(), 1);
    }

    #[test]
    fn seed_determinism_bitwise() {
        let model = QuadraticEnergy::standard(2);
        let schedule = AnnealingSchedule::geometric(1.0, 0.25, 3).unwrap();
        let mut cfg = quad_cfg(&model, &schedule);
        cfg.init = InitialState::Point(vec![0.0, 0.0]);
        let (e1, r1) = run_asmc(&cfg).unwrap();
        let (e2, r2) = run_asmc(&cfg).unwrap();
        assert_eq!(e1.particles, e2.particles);
        assert_eq!(r1.rows.len(), r2.rows.len());
        for (a, b) in r1.rows.iter().zip(&r2.rows) {
            assert_eq!(a.ess, b.ess);
            assert_eq!(a.max_log_weight, b.max_log_weight);
        }
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let model = QuadraticEnergy::standard(1);
        let schedule = AnnealingSchedule::geometric(1.0, 0.5, 3).unwrap();
        let h = |x: &[f64]| x[0];
        let run_with = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                let mut cfg = quad_cfg(&model, &schedule);
                cfg.n = 2500; // spans several chunks
                cfg.trace_h = Some(&h);
                let (e, r) = run_asmc(&cfg).unwrap();
                (e.particles, r.trace)
            })
        };
        let (p1, t1) = run_with(1);
        let (p2, t2) = run_with(2);
        assert_eq!(p1, p2);
        assert_eq!(t1, t2);
    }

    #[test]
    fn constant_energy_keeps_uniform_weights() {
        let model = ConstantEnergy::new(DomainSpec::euclidean(1), 3.0);
        let schedule = AnnealingSchedule::geometric(1.0, 0.25, 4).unwrap();
        let cfg = RunConfig {
            model: &model,
            schedule: &schedule,
            n: 128,
            level_time: LevelTime::Continuous(0.4),
            kernel: KernelSpec::Langevin {
                config: LangevinConfig::new(0.05).unwrap(),
            },
            init: InitialState::Point(vec![0.0]),
            seed: 5,
            classifier: None,
            trace_h: None,
        };
        let (_, report) = run_asmc(&cfg).unwrap();
        for row in &report.rows[..3] {
            assert!((row.ess - 128.0).abs() < 1e-9, "ess {}", row.ess);
            // Raw log weight for constant U = 3 with unit inverse-temperature
            // increments is exactly -3 for every particle.
            assert!((row.max_log_weight + 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn local_kernel_runs_under_the_driver() {
        let model =
            crate::kernels::six_state_two_well(0.3, 0.0, StayProbability::Constant(0.5)).unwrap();
        let schedule = AnnealingSchedule::geometric(1.0, 0.25, 4).unwrap();
        let h = |x: &[f64]| if x[0] < 2.5 { 1.0 } else { 0.0 };
        let cfg = RunConfig {
            model: &model,
            schedule: &schedule,
            n: 4000,
            level_time: LevelTime::Steps(4),
            kernel: KernelSpec::Local { model: &model },
            init: InitialState::Point(vec![0.0]),
            seed: 31,
            classifier: None,
            trace_h: Some(&h),
        };
        let (ensemble, report) = run_asmc(&cfg).unwrap();
        assert_eq!(report.trace.len(), 16);
        let est = estimate(&ensemble, h);
        let truth = model.expectation(0.25, &[1.0, 1.0, 1.0, 0.0, 0.0, 0.0]);
        assert!((est - truth).abs() < 0.05, "estimate {est} vs truth {truth}");
    }
}
