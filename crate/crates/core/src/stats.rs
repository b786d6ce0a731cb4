//! Monte-Carlo summary statistics.

/// Sample mean and its standard error `s / √M`.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let m = xs.len();
    if m == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(xs) / m as f64;
    if m == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    let var = ss / (m - 1) as f64;
    (mean, (var / m as f64).sqrt())
}

/// Delete-one jackknife standard error of `f(mean(xs))`.
///
/// The leave-one-out means are formed in O(M) from the running total.
pub fn jackknife_se<F: Fn(f64) -> f64>(xs: &[f64], f: F) -> f64 {
    let m = xs.len();
    if m < 2 {
        return 0.0;
    }
    let total = pairwise_sum(xs);
    let mf = m as f64;
    let loo: Vec<f64> = xs.iter().map(|x| f((total - x) / (mf - 1.0))).collect();
    let bar = pairwise_sum(&loo) / mf;
    let ss: f64 = loo.iter().map(|v| (v - bar) * (v - bar)).sum();
    ((mf - 1.0) / mf * ss).sqrt()
}

/// Summation in a fixed binary-tree order, independent of thread count.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 64;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_se_of_constant_is_exact() {
        let (m, se) = mean_se(&[2.5; 10]);
        assert_eq!(m, 2.5);
        assert_eq!(se, 0.0);
    }

    #[test]
    fn jackknife_of_identity_matches_classical_se() {
        let xs: Vec<f64> = (0..50).map(|i| ((i * 37) % 11) as f64).collect();
        let (_, se) = mean_se(&xs);
        let jk = jackknife_se(&xs, |x| x);
        assert!((se - jk).abs() < 1e-12);
    }

    #[test]
    fn jackknife_of_reciprocal_follows_delta_method() {
        let xs: Vec<f64> = (0..1000)
            .map(|i| 3.0 + ((i * 7919) % 101) as f64 / 100.0 - 0.5)
            .collect();
        let (mean, se) = mean_se(&xs);
        let jk = jackknife_se(&xs, |x| 1.0 / x);
        let delta = se / (mean * mean);
        assert!((jk - delta).abs() / delta < 1e-2);
    }

    #[test]
    fn pairwise_matches_naive() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 499500.0);
    }
}
