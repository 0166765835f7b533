//! Small statistics helpers shared by the reports: binomial deviations at
//! the fixed 3-sigma policy and order statistics over round counts.

/// Standard deviation of a binomial proportion with success probability
/// `p` over `trials` draws.
pub fn binomial_sigma(p: f64, trials: u64) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    (p.clamp(0.0, 1.0) * (1.0 - p.clamp(0.0, 1.0)) / trials as f64).sqrt()
}

/// Symmetric 3-sigma interval around an observed proportion, clipped to
/// `[0, 1]`.
pub fn three_sigma_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let rate = successes as f64 / trials as f64;
    let s = 3.0 * binomial_sigma(rate, trials);
    ((rate - s).max(0.0), (rate + s).min(1.0))
}

/// Median of a sample; the mean of the middle pair for even sizes.
pub fn median(values: &[u64]) -> f64 {
    assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid] as f64
    } else {
        (sorted[mid - 1] + sorted[mid]) as f64 / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_handles_both_parities() {
        assert_eq!(median(&[5]), 5.0);
        assert_eq!(median(&[1, 9]), 5.0);
        assert_eq!(median(&[3, 1, 2]), 2.0);
        assert_eq!(median(&[4, 1, 3, 2]), 2.5);
    }

    #[test]
    fn sigma_and_interval() {
        let s = binomial_sigma(0.5, 100);
        assert!((s - 0.05).abs() < 1e-12);
        let (lo, hi) = three_sigma_interval(50, 100);
        assert!((lo - 0.35).abs() < 1e-12);
        assert!((hi - 0.65).abs() < 1e-12);
        let (lo, hi) = three_sigma_interval(100, 100);
        assert_eq!((lo, hi), (1.0, 1.0));
    }
}
