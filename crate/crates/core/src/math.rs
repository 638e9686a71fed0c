//! Small numeric helpers shared across modules.

/// log(sum(exp(v))) with the usual max shift.
///
/// Returns `-inf` for an empty slice or when every entry is `-inf`.
pub fn logsumexp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Ceiling that tolerates float noise just above an integer.
///
/// Planner quantities like 1/(nu*eta) routinely land within one ulp of an
/// integer; a plain `ceil` would then overshoot by one level.
pub fn ceil_tol(x: f64) -> u64 {
    let c = x.ceil();
    if c - x >= 1.0 - 1e-9 {
        (c - 1.0).max(0.0) as u64
    } else {
        c.max(0.0) as u64
    }
}

/// Linear-interpolation quantile of an unsorted sample (type-7).
pub fn quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = pos - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    }
}

/// Least-squares slope of y against x.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        num += (xi - mx) * (yi - my);
        den += (xi - mx) * (xi - mx);
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logsumexp_handles_large_magnitudes() {
        let v = [-1000.0, -1002.0];
        let expected = -1000.0 + (1.0 + (-2.0f64).exp()).ln();
        assert!((logsumexp(&v) - expected).abs() < 1e-12);
    }

    #[test]
    fn logsumexp_all_neg_inf() {
        assert_eq!(logsumexp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
    }

    #[test]
    fn ceil_tol_handles_float_noise() {
        assert_eq!(ceil_tol(10.0 + 1e-12), 10);
        assert_eq!(ceil_tol(9.999_999_999_999_998), 10);
        assert_eq!(ceil_tol(10.1), 11);
        assert_eq!(ceil_tol(4.0), 4);
    }

    #[test]
    fn quantile_edges() {
        let v = [3.0, 1.0, 2.0, 4.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert_eq!(quantile(&v, 0.5), 2.5);
    }

    #[test]
    fn slope_of_line() {
        let x = [1.0, 2.0, 3.0];
        let y = [2.0, 4.0, 6.0];
        assert!((slope(&x, &y) - 2.0).abs() < 1e-12);
    }
}
