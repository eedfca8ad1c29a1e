//! Small statistics toolkit shared by the simulator and the oracles.

use serde::Serialize;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// A point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    /// `(value - reference) / stderr`
    pub fn z_score(&self, reference: f64) -> f64 {
        (self.value - reference) / self.stderr
    }

    /// True when `reference` lies within `n` standard errors.
    pub fn within(&self, reference: f64, n: f64) -> bool {
        (self.value - reference).abs() <= n * self.stderr
    }
}

/// Batch-means estimate of a ratio `sum(num) / sum(den)`.
///
/// Each `(num, den)` pair is one batch. The point estimate uses the pooled
/// totals; the standard error is the delta-method one built from the batch
/// residuals `num_i - R den_i`, which weights batches of unequal length
/// correctly.
pub fn batch_ratio(batches: &[(f64, f64)]) -> Estimate {
    let (num, den) = batches
        .iter()
        .fold((0.0, 0.0), |(n, d), &(bn, bd)| (n + bn, d + bd));
    let value = num / den;
    let b = batches.len();
    if b < 2 {
        return Estimate { value, stderr: f64::NAN };
    }
    let mean_den = den / b as f64;
    let var = batches
        .iter()
        .map(|&(n, d)| (n - value * d).powi(2))
        .sum::<f64>()
        / (b - 1) as f64;
    Estimate { value, stderr: (var / b as f64).sqrt() / mean_den }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Mean with its i.i.d. standard error.
pub fn mean_estimate(xs: &[f64]) -> Estimate {
    Estimate {
        value: mean(xs),
        stderr: (variance(xs) / xs.len() as f64).sqrt(),
    }
}

/// Sample variance with the standard error `sqrt((m4 - s^4)/n)`.
pub fn variance_estimate(xs: &[f64]) -> Estimate {
    let n = xs.len() as f64;
    let m = mean(xs);
    let s2 = variance(xs);
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    Estimate {
        value: s2,
        stderr: ((m4 - s2 * s2) / n).sqrt(),
    }
}

/// Pearson correlation of paired samples.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let (mx, my) = (mean(xs), mean(ys));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    sxy / (sxx * syy).sqrt()
}

/// Fisher z-statistic for `H0: rho = 0`, approximately standard normal.
pub fn correlation_z(r: f64, n: usize) -> f64 {
    r.atanh() * ((n as f64) - 3.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF.
pub fn ks_test<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> KsResult {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / nf - f).max(f - i as f64 / nf);
    }
    // Stephens' small-sample correction to the asymptotic law.
    let sqrt_n = nf.sqrt();
    let t = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    KsResult { statistic: d, p_value: kolmogorov_survival(t), n }
}

/// `P(K > t)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    if t < 0.3 {
        // The alternating series converges slowly here; the survival is 1 to
        // double precision.
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * t * t).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
