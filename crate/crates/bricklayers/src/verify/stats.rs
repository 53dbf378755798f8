//! Test statistics used by the verification suites.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal, StudentsT};

/// Pearson chi-square goodness of fit against expected cell probabilities.
/// Cells with expected probability 0 must have observed count 0 and are
/// skipped. Returns (statistic, p-value).
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> (f64, f64) {
    assert_eq!(observed.len(), probs.len());
    let n: u64 = observed.iter().sum();
    let nf = n as f64;
    let mut stat = 0.0;
    let mut df = 0i64;
    for (&o, &p) in observed.iter().zip(probs) {
        if p <= 0.0 {
            assert_eq!(o, 0, "observed mass in a zero-probability cell");
            continue;
        }
        let e = nf * p;
        let d = o as f64 - e;
        stat += d * d / e;
        df += 1;
    }
    let df = (df - 1).max(1) as f64;
    let dist = ChiSquared::new(df).expect("df > 0");
    (stat, 1.0 - dist.cdf(stat))
}

/// One-sample Kolmogorov-Smirnov test against Exp(rate). Sorts the sample.
/// Returns the asymptotic p-value.
pub fn ks_test_exponential(samples: &mut [f64], rate: f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in samples.iter().enumerate() {
        let f = 1.0 - (-rate * x).exp();
        let lo = i as f64 / n;
        let hi = (i as f64 + 1.0) / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    ks_p_value(d, samples.len())
}

/// Asymptotic Kolmogorov distribution tail: P(D > d) for sample size n.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let lambda = (n as f64).sqrt() * d;
    // Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} e^{-2 k^2 lambda^2}
    let mut q = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        q += if k % 2 == 1 { 2.0 * term } else { -2.0 * term };
        if term < 1e-16 {
            break;
        }
    }
    q.clamp(0.0, 1.0)
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Paired z-test for mean difference 0. Returns (z, two-sided p).
/// With thousands of replicas the normal approximation is exact enough.
pub fn paired_z_test(diffs: &[f64]) -> (f64, f64) {
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1.0);
    if var == 0.0 {
        return (0.0, 1.0);
    }
    let z = mean / (var / n).sqrt();
    let normal = Normal::new(0.0, 1.0).unwrap();
    (z, 2.0 * (1.0 - normal.cdf(z.abs())))
}

/// Sample mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Mann-Kendall trend test. Returns (S, z, two-sided p). Positive S means
/// an increasing trend.
pub fn mann_kendall(xs: &[f64]) -> (i64, f64, f64) {
    let n = xs.len();
    let mut s = 0i64;
    for i in 0..n {
        for j in (i + 1)..n {
            s += match xs[j].partial_cmp(&xs[i]).unwrap() {
                std::cmp::Ordering::Greater => 1,
                std::cmp::Ordering::Less => -1,
                std::cmp::Ordering::Equal => 0,
            };
        }
    }
    // tie-corrected variance
    let mut sorted: Vec<f64> = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0f64;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * (t - 1.0) * (2.0 * t + 5.0);
        i = j + 1;
    }
    let nf = n as f64;
    let var = (nf * (nf - 1.0) * (2.0 * nf + 5.0) - tie_term) / 18.0;
    if var <= 0.0 {
        return (s, 0.0, 1.0);
    }
    let z = if s > 0 {
        (s as f64 - 1.0) / var.sqrt()
    } else if s < 0 {
        (s as f64 + 1.0) / var.sqrt()
    } else {
        0.0
    };
    let normal = Normal::new(0.0, 1.0).unwrap();
    (s, z, 2.0 * (1.0 - normal.cdf(z.abs())))
}

/// Weighted least squares fit of y = a + b x. Weights are inverse
/// variances. Returns (intercept, slope, slope standard error).
pub fn wls_line(xs: &[f64], ys: &[f64], weights: &[f64]) -> (f64, f64, f64) {
    assert!(xs.len() == ys.len() && ys.len() == weights.len());
    let sw: f64 = weights.iter().sum();
    let sx: f64 = xs.iter().zip(weights).map(|(x, w)| x * w).sum();
    let sy: f64 = ys.iter().zip(weights).map(|(y, w)| y * w).sum();
    let xbar = sx / sw;
    let ybar = sy / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for ((&x, &y), &w) in xs.iter().zip(ys).zip(weights) {
        sxx += w * (x - xbar) * (x - xbar);
        sxy += w * (x - xbar) * (y - ybar);
    }
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    // with weights = 1/var(y_i), var(slope) = 1/sxx
    (intercept, slope, (1.0 / sxx).sqrt())
}

/// Batch-means estimate for a time average: splits the batch means and
/// returns (overall mean, half-width of the t confidence interval).
pub fn batch_means_ci(batch_means: &[f64], confidence: f64) -> (f64, f64) {
    let b = batch_means.len();
    assert!(b >= 3, "need at least 3 batches");
    let (mean, se) = mean_se(batch_means);
    let t = StudentsT::new(0.0, 1.0, (b - 1) as f64).unwrap();
    let q = t.inverse_cdf(0.5 + confidence / 2.0);
    (mean, q * se)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn chi_square_uniform_counts() {
        let obs = [28u64, 31, 40, 35];
        let ps = [0.25f64; 4];
        let (stat, p) = chi_square_gof(&obs, &ps);
        assert!((stat - 2.417910447761194).abs() < 1e-9);
        assert!(p > 0.05);
    }

    #[test]
    fn ks_accepts_true_exponential_and_rejects_wrong_rate() {
        let mut rng = crate::rng::substream(&[1, 2, 3]);
        let mut xs: Vec<f64> = (0..20_000)
            .map(|_| -(1.0 - rng.gen::<f64>()).ln() / 2.5)
            .collect();
        let p_good = ks_test_exponential(&mut xs.clone(), 2.5);
        assert!(p_good > 0.01);
        let p_bad = ks_test_exponential(&mut xs, 3.2);
        assert!(p_bad < 1e-6);
    }

    #[test]
    fn wilson_interval_brackets_p() {
        let (lo, hi) = wilson_interval(50, 100, 1.96);
        assert!(lo < 0.5 && 0.5 < hi);
        let (lo0, _) = wilson_interval(0, 100, 1.96);
        assert_eq!(lo0, 0.0);
    }

    #[test]
    fn mann_kendall_detects_trend_and_accepts_noise() {
        let up: Vec<f64> = (0..50).map(|i| i as f64 + 0.1).collect();
        let (_, z, p) = mann_kendall(&up);
        assert!(z > 0.0 && p < 1e-6);
        let mut rng = crate::rng::substream(&[9, 9]);
        let noise: Vec<f64> = (0..200).map(|_| rng.gen::<f64>()).collect();
        let (_, _, p) = mann_kendall(&noise);
        assert!(p > 0.01);
    }

    #[test]
    fn wls_recovers_line() {
        let xs: Vec<f64> = (1..=10).map(|x| x as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 2.0 * x).collect();
        let ws = vec![1.0; 10];
        let (a, b, _) = wls_line(&xs, &ys, &ws);
        assert!((a - 3.0).abs() < 1e-12);
        assert!((b + 2.0).abs() < 1e-12);
    }
}
