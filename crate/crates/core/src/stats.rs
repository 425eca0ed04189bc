//! Small statistics toolkit for the Monte Carlo checks.

use serde::{Deserialize, Serialize};

/// Streaming mean/variance (Welford). `merge` is associative, so replica
/// results can be reduced in any grouping.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let d = other.mean - self.mean;
        self.mean += d * other.count as f64 / n;
        self.m2 += other.m2 + d * d * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            f64::NAN
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::default();
        for x in iter {
            m.push(x);
        }
        m
    }
}

/// Batch-means estimate for a correlated series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchMeans {
    pub mean: f64,
    pub std_error: f64,
    pub batches: usize,
    /// `n · Var(x) / (b · Var(batch mean))`.
    pub effective_sample_size: f64,
}

/// Splits `series` into consecutive batches of `batch_len` (a trailing
/// partial batch is dropped from the error estimate but not from the mean).
pub fn batch_means(series: &[f64], batch_len: usize) -> BatchMeans {
    let batch_len = batch_len.max(1);
    let all: Moments = series.iter().copied().collect();
    let batches: Moments = series
        .chunks_exact(batch_len)
        .map(|c| c.iter().sum::<f64>() / batch_len as f64)
        .collect();
    let std_error = (batches.variance() / batches.count as f64).sqrt();
    let ess = if batches.variance() > 0.0 {
        series.len() as f64 * all.variance() / (batch_len as f64 * batches.variance())
    } else {
        series.len() as f64
    };
    BatchMeans {
        mean: all.mean,
        std_error,
        batches: batches.count as usize,
        effective_sample_size: ess,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

impl KsResult {
    pub fn passes(&self, level: f64) -> bool {
        self.p_value > level
    }
}

/// Survival function of the Kolmogorov distribution,
/// `Q(λ) = 2 Σ_{k≥1} (-1)^{k-1} e^{-2k²λ²}`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_p_value(d: f64, effective_n: f64) -> f64 {
    let sn = effective_n.sqrt();
    kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d)
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    KsResult {
        statistic: d,
        p_value: ks_p_value(d, n),
    }
}

/// Two-sample Kolmogorov–Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(f64::total_cmp);
    xb.sort_by(f64::total_cmp);
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    KsResult {
        statistic: d,
        p_value: ks_p_value(d, na * nb / (na + nb)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;

    #[test]
    fn moments_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..100).map(|i| ((i * 37) % 11) as f64 * 0.5).collect();
        let whole: Moments = xs.iter().copied().collect();
        let mut left: Moments = xs[..33].iter().copied().collect();
        let right: Moments = xs[33..].iter().copied().collect();
        left.merge(&right);
        assert_eq!(left.count, whole.count);
        assert!((left.mean - whole.mean).abs() < 1e-12);
        assert!((left.variance() - whole.variance()).abs() < 1e-12);
    }

    #[test]
    fn kolmogorov_survival_reference_values() {
        // Classical critical values: Q(1.3581) = 0.05, Q(1.6276) = 0.01.
        assert!((kolmogorov_survival(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_survival(1.6276) - 0.01).abs() < 1e-4);
    }

    #[test]
    fn ks_accepts_uniform_and_rejects_shifted() {
        let mut rng = stream_rng(1, 0);
        let a: Vec<f64> = (0..5000).map(|_| rng.gen()).collect();
        let b: Vec<f64> = (0..5000).map(|_| rng.gen()).collect();
        assert!(ks_one_sample(&a, |x| x.clamp(0.0, 1.0)).passes(0.01));
        assert!(ks_two_sample(&a, &b).passes(0.01));
        let shifted: Vec<f64> = b.iter().map(|x| x * 0.9).collect();
        assert!(!ks_two_sample(&a, &shifted).passes(0.01));
    }

    #[test]
    fn batch_means_of_iid_series_has_unit_efficiency() {
        let mut rng = stream_rng(2, 0);
        let xs: Vec<f64> = (0..20_000).map(|_| rng.gen()).collect();
        let bm = batch_means(&xs, 200);
        assert_eq!(bm.batches, 100);
        assert!((bm.effective_sample_size / 20_000.0 - 1.0).abs() < 0.5);
        assert!((bm.mean - 0.5).abs() < 4.0 * bm.std_error);
    }
}
