//! Tail dependence, Kendall distributions and empirical dependence measures.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copulas::{Copula, CopulaModel, TruncationPoint};
use crate::error::{Error, Result};
use crate::frailty::RngStream;
use crate::generators::{ArchGenerator, Psi};
use crate::sampling::{average_ranks, SampleMatrix};
use rand::Rng;

/// How a tail dependence report was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailMethod {
    AnalyticLimit,
    NumericLimit,
    Empirical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailDepReport {
    pub lambda_lower: f64,
    pub lambda_upper: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub se_lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub se_upper: Option<f64>,
    pub method: TailMethod,
    /// For numeric limits: whether the last two extrapolated estimates agree
    /// to [`LIMIT_TOL`].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
}

impl TailDepReport {
    fn new(lambda_lower: f64, lambda_upper: f64, method: TailMethod) -> Self {
        Self {
            lambda_lower: lambda_lower.clamp(0.0, 1.0),
            lambda_upper: lambda_upper.clamp(0.0, 1.0),
            se_lower: None,
            se_upper: None,
            method,
            converged: None,
        }
    }
}

/// Agreement required between the last two extrapolated limit estimates.
pub const LIMIT_TOL: f64 = 1e-4;

/// Finite-difference step for partial derivatives of copulas.
pub const FD_STEP: f64 = 1e-6;

/// Tail dependence coefficients of the Archimedean copula with generator
/// `ψ(· + h)/ψ(h)`, in closed form.
pub fn tail_dep_tilted(g: &ArchGenerator, h: f64) -> Result<TailDepReport> {
    if !(h >= 0.0 && h.is_finite()) {
        return Err(Error::Domain(format!(
            "tilt must be finite and non-negative, got {h}"
        )));
    }
    // ψ'(2t + h)/ψ'(t + h) has the same limit at infinity for every h.
    let lower = g
        .regular_variation_index()
        .map_or(0.0, |rho| 2f64.powf(-rho));
    let upper = if h > 0.0 {
        0.0
    } else {
        2.0 - 2f64.powf(g.upper_tail_index())
    };
    Ok(TailDepReport::new(lower, upper, TailMethod::AnalyticLimit))
}

/// Richardson extrapolation of a sequence sampled at geometrically spaced
/// points, assuming a leading error term linear in the step.
fn extrapolate(estimates: &[f64], ratio: f64) -> (f64, bool) {
    let rich: Vec<f64> = estimates
        .windows(2)
        .map(|w| (ratio * w[1] - w[0]) / (ratio - 1.0))
        .filter(|x| x.is_finite())
        .collect();
    match rich.as_slice() {
        [.., a, b] => (*b, (a - b).abs() <= LIMIT_TOL),
        [b] => (*b, false),
        [] => (estimates.last().copied().unwrap_or(f64::NAN), false),
    }
}

/// Numerical version of [`tail_dep_tilted`]: the derivative-ratio limits
/// `λ_l = 2 lim_{t→∞} ψ'(2t+h)/ψ'(t+h)` and `λ_u = 2 − 2 lim_{t↓0} ψ'(2t+h)/ψ'(t+h)`
/// evaluated on geometric grids and extrapolated.
pub fn tail_dep_tilted_numeric(g: &ArchGenerator, h: f64) -> Result<TailDepReport> {
    if !(h >= 0.0 && h.is_finite()) {
        return Err(Error::Domain(format!(
            "tilt must be finite and non-negative, got {h}"
        )));
    }
    let ratio = |t: f64| 2.0 * (g.ln_neg_psi_d1(2.0 * t + h) - g.ln_neg_psi_d1(t + h)).exp();
    let lower: Vec<f64> = (2..=6).map(|k| ratio(10f64.powi(k))).collect();
    // Errors at infinity decay like 1/t: the step is 1/t.
    let (l, conv_l) = extrapolate(&lower, 10.0);
    let upper: Vec<f64> = (2..=6).map(|k| 2.0 - ratio(10f64.powi(-k))).collect();
    let (u, conv_u) = extrapolate(&upper, 10.0);
    let mut r = TailDepReport::new(l, u, TailMethod::NumericLimit);
    r.converged = Some(conv_l && conv_u);
    Ok(r)
}

/// Derivative of `f` at `x ∈ [0, 1]` by central differences, switching to
/// second-order one-sided stencils at the ends of the interval.
fn derivative<F: Fn(f64) -> f64>(f: F, x: f64, step: f64) -> f64 {
    if x - step < 0.0 {
        (-3.0 * f(x) + 4.0 * f(x + step) - f(x + 2.0 * step)) / (2.0 * step)
    } else if x + step > 1.0 {
        (3.0 * f(x) - 4.0 * f(x - step) + f(x - 2.0 * step)) / (2.0 * step)
    } else {
        (f(x + step) - f(x - step)) / (2.0 * step)
    }
}

/// Tail dependence coefficients of an exchangeable bivariate copula truncated
/// at `(t, t)`: `λ_l^{C_t} = λ_l^C / D₁C(0, t)` and
/// `λ_u^{C_t} = 2 − δ_C'(t) / D₁C(t, t)`, with `δ_C(t) = C(t, t)`.
pub fn tail_dep_exchangeable_equal_t(m: &CopulaModel, t: f64) -> Result<TailDepReport> {
    if m.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: m.dim(),
        });
    }
    if !m.is_exchangeable() {
        return Err(Error::Unsupported(
            "equal-threshold tail dependence of a non-exchangeable model".into(),
        ));
    }
    TruncationPoint::new(m, &[t, t])?;
    let (lambda_l, _) = m.tail_coefficients()?;
    let c = |u1: f64, u2: f64| m.cdf_unchecked(&[u1.clamp(0.0, 1.0), u2.clamp(0.0, 1.0)]);
    let d1_zero = derivative(|x| c(x, t), 0.0, FD_STEP).min(1.0);
    let d1_diag = derivative(|x| c(x, t), t, FD_STEP).min(1.0);
    let delta = derivative(|x| c(x, x), t, FD_STEP);
    let lower = if lambda_l == 0.0 {
        0.0
    } else if d1_zero > 0.0 {
        lambda_l / d1_zero
    } else {
        return Err(Error::Numeric(format!("D₁C(0, {t}) vanishes")));
    };
    if !(d1_diag > 0.0) {
        return Err(Error::Numeric(format!("D₁C({t}, {t}) vanishes")));
    }
    let upper = 2.0 - delta / d1_diag;
    let mut r = TailDepReport::new(lower, upper.max(0.0), TailMethod::NumericLimit);
    r.converged = Some(true);
    Ok(r)
}

/// Kendall distribution `K_{C_t}(u) = P(C_t(U_t) ≤ u)` of the truncation of
/// the `d`-dimensional Archimedean copula with generator `g` at `t`
/// (`d = t.dim() ∈ {2, 3}`). `C(t)` is recomputed from `g`.
pub fn kendall_dist_truncated(g: &ArchGenerator, t: &TruncationPoint, u: f64) -> Result<f64> {
    let d = t.dim();
    if !(2..=3).contains(&d) {
        return Err(Error::Unsupported(format!(
            "Kendall distribution in dimension {d} (derivatives up to order 2 only)"
        )));
    }
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::Domain(format!(
            "Kendall distribution argument {u} outside [0, 1]"
        )));
    }
    if u == 0.0 {
        return Ok(0.0);
    }
    if u == 1.0 {
        return Ok(1.0);
    }
    let c = g.psi(t.t().iter().map(|&x| g.psi_inv(x)).sum());
    let x = g.psi_inv(c * u);
    let gap = x - g.psi_inv(c);
    let mut sum = 0.0;
    let mut fact = 1.0;
    for k in 0..d {
        if k > 0 {
            fact *= k as f64;
        }
        let deriv = g.psi_deriv(x, k as u32)?;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += gap.powi(k as i32) * sign * deriv / fact;
    }
    Ok((sum / c).clamp(0.0, 1.0))
}

/// Empirical tail dependence at threshold `q` from the pseudo-observations of
/// a bivariate sample, with a bootstrap standard error.
///
/// Denominators use the empirical margins (`#{R_1 ≤ q(n+1)}` instead of
/// `nq`), which makes comonotone data give exactly one.
pub fn empirical_tail_dep(data: &SampleMatrix, q: f64, seed: u64) -> Result<TailDepReport> {
    if data.d() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: data.d(),
        });
    }
    if data.n() < 1000 {
        return Err(Error::InsufficientData(format!(
            "empirical tail dependence needs n ≥ 1000, got {}",
            data.n()
        )));
    }
    if !(q > 0.0 && q < 0.5) {
        return Err(Error::Domain(format!(
            "threshold q must lie in (0, 0.5), got {q}"
        )));
    }
    let n = data.n();
    let scale = 1.0 / (n as f64 + 1.0);
    let r1: Vec<f64> = average_ranks(&data.column(0))
        .iter()
        .map(|r| r * scale)
        .collect();
    let r2: Vec<f64> = average_ranks(&data.column(1))
        .iter()
        .map(|r| r * scale)
        .collect();
    let flags: Vec<u8> = (0..n)
        .map(|i| {
            let (a, b) = (r1[i], r2[i]);
            (a <= q) as u8
                | ((b <= q) as u8) << 1
                | ((a > 1.0 - q) as u8) << 2
                | ((b > 1.0 - q) as u8) << 3
        })
        .collect();
    let estimate = |idx: &mut dyn Iterator<Item = usize>| {
        let mut c = [0usize; 6];
        for i in idx {
            let f = flags[i];
            c[0] += (f & 1 != 0) as usize;
            c[1] += (f & 2 != 0) as usize;
            c[2] += (f & 3 == 3) as usize;
            c[3] += (f & 4 != 0) as usize;
            c[4] += (f & 8 != 0) as usize;
            c[5] += (f & 12 == 12) as usize;
        }
        let ratio = |num: usize, a: usize, b: usize| {
            let den = 0.5 * (a + b) as f64;
            if den > 0.0 {
                num as f64 / den
            } else {
                0.0
            }
        };
        (ratio(c[2], c[0], c[1]), ratio(c[5], c[3], c[4]))
    };
    let (lower, upper) = estimate(&mut (0..n));
    let boot: Vec<(f64, f64)> = (0..BOOTSTRAP_RESAMPLES)
        .into_par_iter()
        .map(|b| {
            let mut rng = RngStream::with_stream(seed, b as u64);
            estimate(&mut (0..n).map(|_| rng.random_range(0..n)))
        })
        .collect();
    let sd = |xs: Vec<f64>| {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
    };
    let mut r = TailDepReport::new(lower, upper, TailMethod::Empirical);
    r.se_lower = Some(sd(boot.iter().map(|b| b.0).collect()));
    r.se_upper = Some(sd(boot.iter().map(|b| b.1).collect()));
    Ok(r)
}

/// Number of bootstrap resamples for empirical tail dependence.
pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// Fenwick tree over ranks `0..n`.
struct Fenwick(Vec<u32>);

impl Fenwick {
    fn new(n: usize) -> Self {
        Fenwick(vec![0; n + 1])
    }
    fn add(&mut self, i: usize) {
        let mut i = i + 1;
        while i < self.0.len() {
            self.0[i] += 1;
            i += i & i.wrapping_neg();
        }
    }
    /// Number of inserted ranks `< i`.
    fn below(&self, i: usize) -> u64 {
        let mut i = i;
        let mut s = 0u64;
        while i > 0 {
            s += self.0[i] as u64;
            i -= i & i.wrapping_neg();
        }
        s
    }
}

/// Dense ranks `0..k` with equal values sharing a rank; returns the ranks and `k`.
fn dense_ranks(x: &[f64]) -> (Vec<usize>, usize) {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0; x.len()];
    let mut k = 0;
    for w in 0..idx.len() {
        if w > 0 && x[idx[w]] != x[idx[w - 1]] {
            k += 1;
        }
        r[idx[w]] = k;
    }
    (r, k + 1)
}

/// Sample Kendall's tau with its asymptotic standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KendallTau {
    /// Tau-b (equal to tau-a without ties).
    pub tau: f64,
    pub se: f64,
}

/// Kendall's tau of two columns in `O(n log n)`; per-observation concordance
/// scores give the U-statistic standard error `2 sd(W) / √n`.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<KendallTau> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "Kendall's tau needs n ≥ 2, got {n}"
        )));
    }
    let (rx, kx) = dense_ranks(x);
    let (ry, ky) = dense_ranks(y);
    if kx == 1 || ky == 1 {
        return Err(Error::InsufficientData(
            "Kendall's tau of a constant column".into(),
        ));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| rx[i]);
    // score[i] = #concordant − #discordant partners of observation i.
    let mut score = vec![0i64; n];
    let mut sweep = |iter: &mut dyn Iterator<Item = &[usize]>, forward: bool| {
        let mut tree = Fenwick::new(ky);
        let mut seen = 0u64;
        for group in iter {
            for &i in group {
                let below = tree.below(ry[i]) as i64;
                let above = seen as i64 - tree.below(ry[i] + 1) as i64;
                score[i] += if forward {
                    below - above
                } else {
                    above - below
                };
            }
            for &i in group {
                tree.add(ry[i]);
                seen += 1;
            }
        }
    };
    let groups: Vec<&[usize]> = order.chunk_by(|&a, &b| rx[a] == rx[b]).collect();
    sweep(&mut groups.iter().copied(), true);
    sweep(&mut groups.iter().rev().copied(), false);
    let s: i64 = score.iter().sum::<i64>() / 2;
    let pairs = |ranks: &[usize], k: usize| {
        let mut counts = vec![0u64; k];
        ranks.iter().for_each(|&r| counts[r] += 1);
        counts
            .iter()
            .map(|&c| c * c.saturating_sub(1) / 2)
            .sum::<u64>() as f64
    };
    let n0 = (n * (n - 1) / 2) as f64;
    let tau = s as f64 / ((n0 - pairs(&rx, kx)) * (n0 - pairs(&ry, ky))).sqrt();
    let w: Vec<f64> = score.iter().map(|&c| c as f64 / (n - 1) as f64).collect();
    let mw = w.iter().sum::<f64>() / n as f64;
    let var_w = w.iter().map(|v| (v - mw).powi(2)).sum::<f64>() / (n - 1).max(1) as f64;
    Ok(KendallTau {
        tau,
        se: 2.0 * (var_w / n as f64).sqrt(),
    })
}

/// Pairwise Kendall's tau of columns `j1` and `j2`.
pub fn empirical_kendall_tau(data: &SampleMatrix, j1: usize, j2: usize) -> Result<f64> {
    Ok(empirical_kendall_tau_se(data, j1, j2)?.tau)
}

pub fn empirical_kendall_tau_se(data: &SampleMatrix, j1: usize, j2: usize) -> Result<KendallTau> {
    if j1 >= data.d() || j2 >= data.d() {
        return Err(Error::Index(format!(
            "columns {j1}, {j2} of a {}-column sample",
            data.d()
        )));
    }
    kendall_tau(&data.column(j1), &data.column(j2))
}

/// Rank-based symmetry statistic `sup |Ĉ(u, v) − Ĉ(v, u)|` over the grid
/// `{1/k, …, 1}²`, computed from pseudo-observations. Reported only: the
/// exchangeability of truncated survival copulas at unequal thresholds is an
/// open question.
pub fn exchangeability_statistic(data: &SampleMatrix, k: usize) -> Result<f64> {
    if data.d() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: data.d(),
        });
    }
    if data.n() < 2 || k == 0 {
        return Err(Error::InsufficientData(
            "symmetry statistic needs n ≥ 2 and k ≥ 1".into(),
        ));
    }
    let n = data.n();
    let scale = 1.0 / (n as f64 + 1.0);
    let r1 = average_ranks(&data.column(0));
    let r2 = average_ranks(&data.column(1));
    let mut cells = vec![0.0f64; k * k];
    for i in 0..n {
        let a = (((r1[i] * scale) * k as f64).ceil() as usize).clamp(1, k) - 1;
        let b = (((r2[i] * scale) * k as f64).ceil() as usize).clamp(1, k) - 1;
        cells[a * k + b] += 1.0;
    }
    for a in 0..k {
        for b in 0..k {
            let mut v = cells[a * k + b];
            if a > 0 {
                v += cells[(a - 1) * k + b];
            }
            if b > 0 {
                v += cells[a * k + b - 1];
            }
            if a > 0 && b > 0 {
                v -= cells[(a - 1) * k + b - 1];
            }
            cells[a * k + b] = v;
        }
    }
    let mut worst: f64 = 0.0;
    for a in 0..k {
        for b in 0..a {
            worst = worst.max((cells[a * k + b] - cells[b * k + a]).abs() / n as f64);
        }
    }
    Ok(worst)
}
