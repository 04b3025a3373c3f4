//! Small statistical helpers shared by estimators, verification checks and
//! the test suites.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Sample mean.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Standard error of the sample mean.
pub fn standard_error(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Standard error of a binomial proportion estimate.
pub fn proportion_se(p_hat: f64, n: u64) -> f64 {
    (p_hat * (1.0 - p_hat) / n as f64).sqrt()
}

/// Pearson chi-square statistic against expected counts. Cells with
/// `expected < min_expected` are pooled into the last kept cell. Returns the
/// statistic and the degrees of freedom (cells - 1).
pub fn chi_square_statistic(observed: &[u64], expected: &[f64], min_expected: f64) -> (f64, usize) {
    assert_eq!(observed.len(), expected.len());
    let mut stat = 0.0;
    let mut cells = 0usize;
    let mut pooled_obs = 0.0;
    let mut pooled_exp = 0.0;
    for (&o, &e) in observed.iter().zip(expected) {
        if e < min_expected {
            pooled_obs += o as f64;
            pooled_exp += e;
        } else {
            let d = o as f64 - e;
            stat += d * d / e;
            cells += 1;
        }
    }
    if pooled_exp >= min_expected {
        let d = pooled_obs - pooled_exp;
        stat += d * d / pooled_exp;
        cells += 1;
    }
    (stat, cells.saturating_sub(1))
}

/// Upper critical value of the chi-square distribution.
pub fn chi_square_critical(dof: usize, alpha: f64) -> f64 {
    ChiSquared::new(dof as f64).expect("positive dof").inverse_cdf(1.0 - alpha)
}

/// Two-sample chi-square homogeneity statistic over shared bins. Bins whose
/// combined count is below `min_combined` are pooled. Returns the statistic
/// and degrees of freedom.
pub fn two_sample_chi_square(a: &[u64], b: &[u64], min_combined: u64) -> (f64, usize) {
    assert_eq!(a.len(), b.len());
    let n1: u64 = a.iter().sum();
    let n2: u64 = b.iter().sum();
    let (mut pa, mut pb) = (0u64, 0u64);
    let mut cells: Vec<(f64, f64)> = Vec::new();
    for (&x, &y) in a.iter().zip(b) {
        if x + y < min_combined {
            pa += x;
            pb += y;
        } else {
            cells.push((x as f64, y as f64));
        }
    }
    if pa + pb >= min_combined {
        cells.push((pa as f64, pb as f64));
    }
    let (n1, n2) = (n1 as f64, n2 as f64);
    let mut stat = 0.0;
    for (x, y) in &cells {
        let d = x * n2 - y * n1;
        stat += d * d / (n1 * n2 * (x + y));
    }
    (stat, cells.len().saturating_sub(1))
}
