//! Monte Carlo error estimation over independent seeded replicates.

use crate::error::{Error, Result};
use crate::stream::replicate_seed;
use rayon::prelude::*;

/// Replicate statistics of a seeded estimator against a reference value.
#[derive(Debug, Clone)]
pub struct ErrorSummary {
    pub reference: f64,
    pub r_requested: usize,
    pub r_used: usize,
    pub r_aborted: usize,
    /// Mean signed error over the replicates that completed.
    pub mean_error: f64,
    pub mean_abs_error: f64,
    /// sqrt((1/R) sum (est_r - reference)^2): the L2 error estimate.
    pub rms_error: f64,
    /// Sample standard deviation of the estimates.
    pub std_error: f64,
    /// 1.96 * std / sqrt(R): normal-approximation CI for the mean.
    pub ci_half_width: f64,
    /// The replicate estimates, in replicate order.
    pub estimates: Vec<f64>,
}

/// Run `r` replicates of a seeded estimator and summarize its error against
/// `reference`. Replicates that abort are excluded and counted.
pub fn mc_error(
    run: &(dyn Fn(u64) -> Result<f64> + Sync),
    reference: f64,
    r: usize,
    base_seed: u64,
) -> Result<ErrorSummary> {
    if r < 2 {
        return Err(Error::invalid("mc_error needs at least 2 replicates"));
    }
    let outcomes: Vec<Result<f64>> = (0..r)
        .into_par_iter()
        .map(|i| run(replicate_seed(base_seed, i as u64)))
        .collect();
    let mut estimates = Vec::with_capacity(r);
    let mut aborted = 0;
    for o in outcomes {
        match o {
            Ok(v) => estimates.push(v),
            Err(_) => aborted += 1,
        }
    }
    if estimates.is_empty() {
        return Err(Error::invalid("every replicate aborted"));
    }
    Ok(summarize(&estimates, reference, r, aborted))
}

/// Summary of precomputed replicate estimates.
pub fn summarize(estimates: &[f64], reference: f64, requested: usize, aborted: usize) -> ErrorSummary {
    let n = estimates.len() as f64;
    let mean_est = estimates.iter().sum::<f64>() / n;
    let mean_error = mean_est - reference;
    let mean_abs_error = estimates.iter().map(|e| (e - reference).abs()).sum::<f64>() / n;
    let rms_error =
        (estimates.iter().map(|e| (e - reference) * (e - reference)).sum::<f64>() / n).sqrt();
    let var = if estimates.len() > 1 {
        estimates.iter().map(|e| (e - mean_est) * (e - mean_est)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let std_error = var.sqrt();
    ErrorSummary {
        reference,
        r_requested: requested,
        r_used: estimates.len(),
        r_aborted: aborted,
        mean_error,
        mean_abs_error,
        rms_error,
        std_error,
        ci_half_width: 1.96 * std_error / n.sqrt(),
        estimates: estimates.to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn exact_estimator_has_zero_rms() {
        let run = |_seed: u64| Ok(0.75);
        let s = mc_error(&run, 0.75, 10, 1).unwrap();
        assert_eq!(s.rms_error, 0.0);
        assert_eq!(s.mean_error, 0.0);
        assert_eq!(s.r_used, 10);
    }

    #[test]
    fn alternating_estimator() {
        // reference +/- 1 with R = 2: RMS 1, mean error 0.
        let s = summarize(&[1.5, -0.5], 0.5, 2, 0);
        assert_eq!(s.rms_error, 1.0);
        assert_eq!(s.mean_error, 0.0);
        assert_eq!(s.mean_abs_error, 1.0);
    }

    #[test]
    fn rms_dominates_mean_error() {
        let s = summarize(&[0.2, 0.5, 0.9, 0.4], 0.45, 4, 0);
        assert!(s.rms_error >= s.mean_error.abs());
    }

    #[test]
    fn aborted_replicates_are_counted_and_excluded() {
        let run = |seed: u64| {
            if seed % 3 == 0 {
                Err(crate::error::Error::invalid("boom"))
            } else {
                Ok(1.0)
            }
        };
        let s = mc_error(&run, 1.0, 30, 7).unwrap();
        assert_eq!(s.r_used + s.r_aborted, 30);
        assert!(s.r_aborted > 0);
        assert_eq!(s.rms_error, 0.0);
    }

    #[test]
    fn fair_coin_rms_matches_binomial_standard_error() {
        // Estimating p = 0.5 with 100 coin flips: RMS ~ 0.05 within 25%.
        let run = |seed: u64| {
            let mut rng = crate::stream::stream(seed, crate::stream::purpose::REPLICATE, 0, 0);
            let heads = (0..100).filter(|_| rng.gen::<bool>()).count();
            Ok(heads as f64 / 100.0)
        };
        let s = mc_error(&run, 0.5, 200, 42).unwrap();
        assert!(
            (s.rms_error - 0.05).abs() < 0.0125,
            "rms {} not within 25% of 0.05",
            s.rms_error
        );
    }
}
