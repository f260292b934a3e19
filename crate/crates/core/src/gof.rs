//! Goodness-of-fit helpers used by the test suites and the CLI.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::sampling::SampleMatrix;

/// Test statistic with its p-value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

impl TestResult {
    pub fn passes(&self, level: f64) -> bool {
        self.p_value >= level
    }
}

/// Asymptotic Kolmogorov distribution tail `P(K > λ)`.
fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u32 % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov–Smirnov test against a continuous distribution
/// function, with Stephens' small-sample correction of the p-value.
pub fn ks_test<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> Result<TestResult> {
    let n = sample.len();
    if n == 0 {
        return Err(Error::InsufficientData("KS test on an empty sample".into()));
    }
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, &xi) in x.iter().enumerate() {
        let f = cdf(xi);
        d = d.max(f - i as f64 / nf).max((i + 1) as f64 / nf - f);
    }
    let sq = nf.sqrt();
    Ok(TestResult {
        statistic: d,
        p_value: kolmogorov_tail((sq + 0.12 + 0.11 / sq) * d),
    })
}

/// KS test of uniformity on `[0, 1]`.
pub fn ks_uniform(sample: &[f64]) -> Result<TestResult> {
    ks_test(sample, |x| x.clamp(0.0, 1.0))
}

/// Pearson χ² test of observed counts against cell probabilities. The
/// probabilities are rescaled to sum to one over the given cells.
pub fn chi_square(observed: &[u64], probs: &[f64]) -> Result<TestResult> {
    if observed.len() != probs.len() || observed.len() < 2 {
        return Err(Error::InsufficientData(
            "χ² test needs at least two matching cells".into(),
        ));
    }
    let n: u64 = observed.iter().sum();
    let total: f64 = probs.iter().sum();
    let mut stat = 0.0;
    for (&o, &p) in observed.iter().zip(probs) {
        let e = n as f64 * p / total;
        if e <= 0.0 {
            if o > 0 {
                return Ok(TestResult {
                    statistic: f64::INFINITY,
                    p_value: 0.0,
                });
            }
            continue;
        }
        stat += (o as f64 - e).powi(2) / e;
    }
    chi_square_result(stat, observed.len() - 1)
}

/// χ² test that two samples of counts over the same cells share a law.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> Result<TestResult> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::InsufficientData(
            "χ² test needs at least two matching cells".into(),
        ));
    }
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    let (ka, kb) = ((nb / na).sqrt(), (na / nb).sqrt());
    let mut stat = 0.0;
    let mut cells = 0;
    for (&x, &y) in a.iter().zip(b) {
        if x + y == 0 {
            continue;
        }
        cells += 1;
        stat += (ka * x as f64 - kb * y as f64).powi(2) / (x + y) as f64;
    }
    if cells < 2 {
        return Err(Error::InsufficientData(
            "fewer than two occupied cells".into(),
        ));
    }
    chi_square_result(stat, cells - 1)
}

fn chi_square_result(stat: f64, df: usize) -> Result<TestResult> {
    let dist = ChiSquared::new(df as f64).map_err(|e| Error::Numeric(e.to_string()))?;
    Ok(TestResult {
        statistic: stat,
        p_value: 1.0 - dist.cdf(stat),
    })
}

/// Merges trailing cells (from the right) until every expected count is at
/// least `min_expected`. Returns the merged counts and probabilities.
pub fn merge_small_cells(
    observed: &[u64],
    probs: &[f64],
    n: f64,
    min_expected: f64,
) -> (Vec<u64>, Vec<f64>) {
    let mut obs: Vec<u64> = Vec::new();
    let mut pr: Vec<f64> = Vec::new();
    let (mut acc_o, mut acc_p) = (0u64, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        acc_o += o;
        acc_p += p;
        if acc_p * n >= min_expected {
            obs.push(acc_o);
            pr.push(acc_p);
            acc_o = 0;
            acc_p = 0.0;
        }
    }
    if acc_p > 0.0 || acc_o > 0 {
        if let (Some(o), Some(p)) = (obs.last_mut(), pr.last_mut()) {
            *o += acc_o;
            *p += acc_p;
        } else {
            obs.push(acc_o);
            pr.push(acc_p);
        }
    }
    (obs, pr)
}

/// Empirical distribution function of the rows evaluated on the grid
/// `{1/k, …, 1}^d`, returned in row-major grid order.
fn grid_ecdf(s: &SampleMatrix, k: usize) -> Vec<f64> {
    let d = s.d();
    let cells = k.pow(d as u32);
    let mut counts = vec![0.0; cells];
    for row in s.rows() {
        let mut idx = 0;
        for &u in row {
            // Smallest grid index g with u ≤ (g + 1)/k.
            let g = ((u * k as f64).ceil() as usize).clamp(1, k) - 1;
            idx = idx * k + g;
        }
        counts[idx] += 1.0;
    }
    // Cumulative sums along each axis.
    let mut stride = 1;
    for _ in 0..d {
        for i in 0..cells {
            if (i / stride) % k != 0 {
                counts[i] += counts[i - stride];
            }
        }
        stride *= k;
    }
    let n = s.n() as f64;
    counts.iter_mut().for_each(|c| *c /= n);
    counts
}

/// `sup |Ĉ_a − Ĉ_b|` over the grid `{1/k, …, 1}^d` for the empirical
/// distribution functions of two copula samples.
pub fn empirical_copula_distance(a: &SampleMatrix, b: &SampleMatrix, k: usize) -> Result<f64> {
    if a.d() != b.d() {
        return Err(Error::DimensionMismatch {
            expected: a.d(),
            got: b.d(),
        });
    }
    if k == 0 || k.checked_pow(a.d() as u32).is_none_or(|c| c > 1 << 24) {
        return Err(Error::Domain(format!(
            "grid size {k} unusable in dimension {}",
            a.d()
        )));
    }
    let (ea, eb) = (grid_ecdf(a, k), grid_ecdf(b, k));
    Ok(ea
        .iter()
        .zip(&eb)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

/// Default grid resolution for [`empirical_copula_distance`].
pub fn default_grid(d: usize) -> usize {
    match d {
        0..=2 => 50,
        3 => 20,
        4 => 10,
        _ => 5,
    }
}
