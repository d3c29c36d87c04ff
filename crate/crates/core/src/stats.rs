//! Interval estimates and two-sample tests used by the experiments.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// 0.975 quantile of the standard normal.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for a binomial proportion. Returns `(lo, hi)`
/// with `0 <= lo <= successes/trials <= hi <= 1`.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = (center - half).clamp(0.0, 1.0).min(p);
    let hi = (center + half).clamp(0.0, 1.0).max(p);
    (lo, hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Degrees of freedom for chi-square tests, 0 otherwise.
    pub dof: usize,
}

impl TestResult {
    pub fn passes(&self, level: f64) -> bool {
        self.p_value >= level
    }
}

/// Chi-square test of homogeneity for two histograms over the same
/// categories. Sparse categories are pooled from the top until every pooled
/// column has an expected count of at least 5 in both samples.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> TestResult {
    let len = a.len().max(b.len());
    let get = |h: &[u64], i: usize| h.get(i).copied().unwrap_or(0) as f64;
    let total_a: f64 = a.iter().sum::<u64>() as f64;
    let total_b: f64 = b.iter().sum::<u64>() as f64;
    let total = total_a + total_b;
    if total_a == 0.0 || total_b == 0.0 {
        return TestResult { statistic: 0.0, p_value: 1.0, dof: 0 };
    }
    let min_share = total_a.min(total_b) / total;

    // Pool columns scanning from the top down.
    let mut cols: Vec<(f64, f64)> = Vec::new();
    let (mut acc_a, mut acc_b) = (0.0, 0.0);
    for i in (0..len).rev() {
        acc_a += get(a, i);
        acc_b += get(b, i);
        if (acc_a + acc_b) * min_share >= 5.0 {
            cols.push((acc_a, acc_b));
            acc_a = 0.0;
            acc_b = 0.0;
        }
    }
    if acc_a + acc_b > 0.0 {
        match cols.last_mut() {
            Some(last) => {
                last.0 += acc_a;
                last.1 += acc_b;
            }
            None => cols.push((acc_a, acc_b)),
        }
    }
    if cols.len() < 2 {
        return TestResult { statistic: 0.0, p_value: 1.0, dof: 0 };
    }
    let mut stat = 0.0;
    for &(ca, cb) in &cols {
        let col = ca + cb;
        let ea = col * total_a / total;
        let eb = col * total_b / total;
        stat += (ca - ea).powi(2) / ea + (cb - eb).powi(2) / eb;
    }
    let dof = cols.len() - 1;
    let chi = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    TestResult { statistic: stat, p_value: chi.sf(stat), dof }
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value. With
/// ties (discrete data) the test is conservative.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> TestResult {
    if a.is_empty() || b.is_empty() {
        return TestResult { statistic: 0.0, p_value: 1.0, dof: 0 };
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let en = (na * nb / (na + nb)).sqrt();
    let p_value = kolmogorov_q((en + 0.12 + 0.11 / en) * d);
    TestResult { statistic: d, p_value, dof: 0 }
}

/// Survival function of the Kolmogorov distribution.
fn kolmogorov_q(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let term = (-2.0 * (j * j) as f64 * x * x).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (`n - 1` denominator).
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}
