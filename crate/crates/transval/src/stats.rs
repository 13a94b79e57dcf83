//! Order-independent summation helpers.
//!
//! Monte Carlo trials may be computed by any number of workers, but every
//! reduction walks a fixed index order with pairwise (cascade) summation, so
//! the reported means and standard errors are bit-identical regardless of
//! scheduling.

/// Pairwise sum; associativity tree depends only on the slice length.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Two-pass sample mean and standard error of the mean.
///
/// A single observation has zero standard error by convention; callers that
/// need a meaningful spread must supply at least two values.
pub fn mean_std_error(xs: &[f64]) -> (f64, f64) {
    assert!(!xs.is_empty(), "mean of an empty sample");
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = xs.iter().map(|&x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Root-sum-square of independent standard errors.
pub fn combined_std_error(errors: &[f64]) -> f64 {
    errors.iter().map(|e| e * e).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let xs = [1.0, 2.0, 3.5, -1.25];
        assert_eq!(pairwise_sum(&xs), 5.25);
    }

    #[test]
    fn pairwise_sum_is_deterministic_for_large_input() {
        let xs: Vec<f64> = (0..10_001).map(|i| (i as f64).sin()).collect();
        let a = pairwise_sum(&xs);
        let b = pairwise_sum(&xs);
        assert_eq!(a.to_bits(), b.to_bits());
        // sanity: close to the naive sum
        let naive: f64 = xs.iter().sum();
        assert!((a - naive).abs() < 1e-9);
    }

    #[test]
    fn mean_and_se_hand_case() {
        let (mean, se) = mean_std_error(&[1.0, 2.0, 3.0, 4.0]);
        assert!((mean - 2.5).abs() < 1e-15);
        // sample var = 5/3, se = sqrt(5/12)
        assert!((se - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn single_observation_has_zero_se() {
        let (mean, se) = mean_std_error(&[7.25]);
        assert_eq!(mean, 7.25);
        assert_eq!(se, 0.0);
    }

    #[test]
    fn combined_se_is_root_sum_square() {
        assert!((combined_std_error(&[3.0, 4.0]) - 5.0).abs() < 1e-15);
    }
}
