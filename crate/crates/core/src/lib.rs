//! Annealed sequential Monte Carlo for sampling low-temperature multimodal
//! Gibbs distributions.
//!
//! The ensemble is moved down a geometric temperature ladder by repeating
//! propagate / reweight / resample cycles: a Markov kernel that mixes well
//! within energy valleys explores each level, and multinomial resampling with
//! inter-level density ratios rebalances the mass between valleys. The crate
//! provides the sampler itself ([`driver`]), Langevin and idealized
//! local-mixing kernels ([`kernels`]), the theorem-driven parameter planner
//! ([`annealing`]), computable constants and reference oracles
//! ([`diagnostics`]), and plain LMC / rejection baselines ([`baselines`]).

pub mod annealing;
pub mod baselines;
pub mod diagnostics;
pub mod driver;
pub mod error;
pub mod kernels;
pub mod math;
pub mod particles;
pub mod resampler;
pub mod stream;
pub mod targets;

pub use error::{Error, Result};
