//! Frailty samplers: the laws `F = LS⁻¹[ψ]` of the implemented generators and
//! their exponentially tilted versions `F̃(dv) = e^{−hv} F(dv) / ψ(h)`.
//!
//! Discrete laws are returned as `f64`: Sibuya variates are heavy tailed
//! enough to overflow any fixed-width integer.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, Geometric, Open01};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

use crate::error::{domain, Result};
use crate::generators::{ArchGenerator, Family};

/// Seeded ChaCha stream. Streams with the same seed and different indices are
/// independent, which is how parallel workers get their randomness.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
    seed: u64,
    stream: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, seed, stream }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Stream `index` under the same seed.
    pub fn substream(&self, index: u64) -> Self {
        Self::with_stream(self.seed, index)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

pub(crate) fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Open01)
}

pub(crate) fn exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Exp1)
}

/// `log(1 − p)` for `p ∈ (0, 1)`.
fn ln_one_minus(p: f64) -> f64 {
    (-p).ln_1p()
}

/// Logarithmic series law `P(V = k) = p^k / (−log(1 − p) k)`, Kemp's LK
/// algorithm.
pub fn sample_log<R: Rng + ?Sized>(p: f64, rng: &mut R) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("logarithmic parameter must lie in (0, 1), got {p}"));
    }
    Ok(log_series(p, ln_one_minus(p), rng))
}

/// LK with `log(1 − p)` supplied by the caller, which can often compute it
/// more accurately than `log1p(−p)` when `p` is close to 1.
fn log_series<R: Rng + ?Sized>(p: f64, ln_1mp: f64, rng: &mut R) -> f64 {
    let v: f64 = open01(rng);
    if v >= p {
        return 1.0;
    }
    let u: f64 = open01(rng);
    let q = -(u * ln_1mp).exp_m1();
    if v <= q * q {
        let k = (1.0 + v.ln() / q.ln()).floor();
        return if k.is_finite() { k.max(1.0) } else { f64::MAX };
    }
    if v >= q {
        1.0
    } else {
        2.0
    }
}

/// `log P(V > n) = log ∏_{i=1}^n (1 − α/i)` for `V ~ Sibuya(α)`, `α ∈ (0, 1)`.
fn sibuya_ln_survival(alpha: f64, n: f64) -> f64 {
    if n < 1.0 {
        return 0.0;
    }
    ln_gamma(n + 1.0 - alpha) - ln_gamma(n + 1.0) - ln_gamma(1.0 - alpha)
}

/// Beyond this point Sibuya draws are taken from the asymptotic tail
/// `P(V > n) ≈ n^{−α} / Γ(1 − α)`; integers are no longer exact in `f64`.
const SIBUYA_EXACT_LIMIT: u64 = 1 << 50;

/// `Sibuya(α)`, `p_k = α/k ∏_{j<k} (1 − α/j)`, by tail inversion with an
/// exponential then binary search.
pub fn sample_sibuya<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return domain(format!("Sibuya parameter must lie in (0, 1], got {alpha}"));
    }
    Ok(sibuya(alpha, rng))
}

fn sibuya<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    if alpha == 1.0 {
        return 1.0;
    }
    let ln_u = open01(rng).ln();
    // Smallest n ≥ 1 with P(V > n) ≤ U.
    let hit = |n: u64| sibuya_ln_survival(alpha, n as f64) <= ln_u;
    if hit(1) {
        return 1.0;
    }
    let mut hi: u64 = 2;
    while !hit(hi) {
        if hi >= SIBUYA_EXACT_LIMIT {
            let x = ((-ln_u - ln_gamma(1.0 - alpha)) / alpha).exp();
            return if x.is_finite() {
                x.floor().max(hi as f64)
            } else {
                f64::MAX
            };
        }
        hi *= 2;
    }
    let mut lo = hi / 2;
    // Invariant: !hit(lo), hit(hi).
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if hit(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi as f64
}

/// Proposal used by the tilted Sibuya sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SibuyaBranch {
    /// Choose as the algorithm prescribes.
    Auto,
    /// Propose `Sibuya(α)`, accept with probability `p^{V−1}`.
    Sibuya,
    /// Propose `Log(p)`, accept with probability `∏_{j<V} (1 − α/j)`.
    Log,
}

/// A tilted Sibuya draw together with the number of proposals it took.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltedSibuyaDraw {
    pub value: f64,
    pub attempts: u64,
}

/// The branch the algorithm selects for `(α, p)`: Sibuya proposals iff
/// `p ≤ −log((1 − p)^α)`.
pub fn tilted_sibuya_branch(alpha: f64, p: f64) -> SibuyaBranch {
    if p <= -alpha * ln_one_minus(p) {
        SibuyaBranch::Sibuya
    } else {
        SibuyaBranch::Log
    }
}

/// Exponentially tilted Sibuya law, `p̃_k = p^k p_k / (1 − (1 − p)^α)`.
pub fn sample_tilted_sibuya<R: Rng + ?Sized>(alpha: f64, p: f64, rng: &mut R) -> Result<f64> {
    Ok(sample_tilted_sibuya_with(alpha, p, SibuyaBranch::Auto, rng)?.value)
}

/// [`sample_tilted_sibuya`] with an explicit branch and the attempt count.
pub fn sample_tilted_sibuya_with<R: Rng + ?Sized>(
    alpha: f64,
    p: f64,
    branch: SibuyaBranch,
    rng: &mut R,
) -> Result<TiltedSibuyaDraw> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return domain(format!("Sibuya parameter must lie in (0, 1], got {alpha}"));
    }
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("tilt parameter p must lie in (0, 1), got {p}"));
    }
    Ok(tilted_sibuya(alpha, p, ln_one_minus(p), branch, rng))
}

fn tilted_sibuya<R: Rng + ?Sized>(
    alpha: f64,
    p: f64,
    ln_1mp: f64,
    branch: SibuyaBranch,
    rng: &mut R,
) -> TiltedSibuyaDraw {
    if alpha == 1.0 {
        return TiltedSibuyaDraw {
            value: 1.0,
            attempts: 1,
        };
    }
    let branch = match branch {
        SibuyaBranch::Auto => {
            if p <= -alpha * ln_1mp {
                SibuyaBranch::Sibuya
            } else {
                SibuyaBranch::Log
            }
        }
        b => b,
    };
    let ln_p = p.ln();
    let mut attempts = 0;
    loop {
        attempts += 1;
        let ln_u = open01(rng).ln();
        let (v, ln_accept) = match branch {
            SibuyaBranch::Log => {
                let v = log_series(p, ln_1mp, rng);
                (v, sibuya_ln_survival(alpha, v - 1.0))
            }
            _ => {
                let v = sibuya(alpha, rng);
                (v, (v - 1.0) * ln_p)
            }
        };
        if ln_u <= ln_accept {
            return TiltedSibuyaDraw { value: v, attempts };
        }
    }
}

/// Positive stable law with Laplace transform `exp(−t^α)` (Kanter's
/// representation).
pub fn sample_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return domain(format!("stable index must lie in (0, 1], got {alpha}"));
    }
    Ok(stable(alpha, rng))
}

pub(crate) fn stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    if alpha == 1.0 {
        return 1.0;
    }
    let u = PI * open01(rng);
    let e = exp1(rng);
    let a = (alpha * u).sin() / u.sin().powf(1.0 / alpha);
    let b = (((1.0 - alpha) * u).sin() / e).powf((1.0 - alpha) / alpha);
    a * b
}

/// A tilted stable draw together with the number of component proposals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltedStableDraw {
    pub value: f64,
    pub attempts: u64,
}

/// Number of summands used by the tilted stable sampler.
pub fn tilted_stable_pieces(alpha: f64, h: f64) -> u64 {
    (h.powf(alpha).round() as u64).max(1)
}

/// Exponentially tilted stable law, Laplace transform
/// `exp(−((t + h)^α − h^α))`.
pub fn sample_tilted_stable<R: Rng + ?Sized>(alpha: f64, h: f64, rng: &mut R) -> Result<f64> {
    Ok(sample_tilted_stable_with(alpha, h, rng)?.value)
}

pub fn sample_tilted_stable_with<R: Rng + ?Sized>(
    alpha: f64,
    h: f64,
    rng: &mut R,
) -> Result<TiltedStableDraw> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return domain(format!("stable index must lie in (0, 1], got {alpha}"));
    }
    if !(h >= 0.0 && h.is_finite()) {
        return domain(format!("tilt must be finite and non-negative, got {h}"));
    }
    Ok(tilted_stable(alpha, h, rng))
}

pub(crate) fn tilted_stable<R: Rng + ?Sized>(alpha: f64, h: f64, rng: &mut R) -> TiltedStableDraw {
    if alpha == 1.0 {
        return TiltedStableDraw {
            value: 1.0,
            attempts: 1,
        };
    }
    if h == 0.0 {
        return TiltedStableDraw {
            value: stable(alpha, rng),
            attempts: 1,
        };
    }
    let m = tilted_stable_pieces(alpha, h);
    let scale = (m as f64).powf(-1.0 / alpha);
    let mut sum = 0.0;
    let mut attempts = 0;
    for _ in 0..m {
        loop {
            attempts += 1;
            let x = scale * stable(alpha, rng);
            if open01(rng) <= (-h * x).exp() {
                sum += x;
                break;
            }
        }
    }
    TiltedStableDraw {
        value: sum,
        attempts,
    }
}

/// Precomputed sampler for the frailty of a (tilted) generator.
#[derive(Debug, Clone, PartialEq)]
pub enum FrailtySampler {
    /// Point mass at 1.
    Unit,
    Gamma {
        shape: f64,
        rate: f64,
    },
    /// Geometric on `{1, 2, …}` with the given success probability.
    Geometric {
        success: f64,
    },
    Log {
        p: f64,
        ln_1mp: f64,
    },
    TiltedStable {
        alpha: f64,
        h: f64,
    },
    /// Sibuya(α) tilted by `p = e^{−h}`; `p = 1` means no tilt.
    TiltedSibuya {
        alpha: f64,
        p: f64,
        ln_1mp: f64,
    },
    /// `V̊ = S V^{1/α}` with `V` from the base frailty tilted by `h^α` and
    /// `S` stable tilted by `h V^{1/α}`.
    OuterPower {
        base: Box<FrailtySampler>,
        alpha: f64,
        h: f64,
    },
}

impl FrailtySampler {
    /// Frailty of `g` tilted by `h ≥ 0`.
    pub fn new(g: &ArchGenerator, h: f64) -> Result<Self> {
        if !(h >= 0.0 && h.is_finite()) {
            return domain(format!("tilt must be finite and non-negative, got {h}"));
        }
        match g {
            ArchGenerator::Base(b) => Self::base(b.family(), b.theta(), h),
            ArchGenerator::OuterPower(op) => {
                let alpha = op.alpha();
                let inner = Self::base(op.base().family(), op.base().theta(), h.powf(alpha))?;
                if alpha == 1.0 {
                    return Ok(inner);
                }
                Ok(FrailtySampler::OuterPower {
                    base: Box::new(inner),
                    alpha,
                    h,
                })
            }
        }
    }

    fn base(family: Family, theta: f64, h: f64) -> Result<Self> {
        Ok(match family {
            Family::Independence => FrailtySampler::Unit,
            Family::Clayton => FrailtySampler::Gamma {
                shape: 1.0 / theta,
                rate: 1.0 + h,
            },
            Family::Amh => {
                if theta == 0.0 {
                    FrailtySampler::Unit
                } else {
                    FrailtySampler::Geometric {
                        success: 1.0 - theta * (-h).exp(),
                    }
                }
            }
            Family::Frank => {
                // p e^{−h} with p = 1 − e^{−θ}; 1 − p e^{−h} = (1 − e^{−h}) + e^{−h−θ}.
                let p = -(-theta).exp_m1() * (-h).exp();
                let ln_1mp = if h == 0.0 {
                    -theta
                } else {
                    (-(-h).exp_m1() + (-h - theta).exp()).ln()
                };
                FrailtySampler::Log { p, ln_1mp }
            }
            Family::Gumbel => {
                if theta == 1.0 {
                    FrailtySampler::Unit
                } else {
                    FrailtySampler::TiltedStable {
                        alpha: 1.0 / theta,
                        h,
                    }
                }
            }
            Family::Joe => {
                if theta == 1.0 {
                    FrailtySampler::Unit
                } else {
                    let p = (-h).exp();
                    FrailtySampler::TiltedSibuya {
                        alpha: 1.0 / theta,
                        p,
                        ln_1mp: (-(-h).exp_m1()).ln(),
                    }
                }
            }
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            FrailtySampler::Unit => 1.0,
            FrailtySampler::Gamma { shape, rate } => Gamma::new(*shape, 1.0 / rate)
                .expect("validated parameters")
                .sample(rng),
            FrailtySampler::Geometric { success } => {
                if *success >= 1.0 {
                    1.0
                } else {
                    Geometric::new(*success)
                        .expect("validated parameters")
                        .sample(rng) as f64
                        + 1.0
                }
            }
            FrailtySampler::Log { p, ln_1mp } => log_series(*p, *ln_1mp, rng),
            FrailtySampler::TiltedStable { alpha, h } => tilted_stable(*alpha, *h, rng).value,
            FrailtySampler::TiltedSibuya { alpha, p, ln_1mp } => {
                if *p >= 1.0 {
                    sibuya(*alpha, rng)
                } else {
                    tilted_sibuya(*alpha, *p, *ln_1mp, SibuyaBranch::Auto, rng).value
                }
            }
            FrailtySampler::OuterPower { base, alpha, h } => {
                let v = base.sample(rng);
                let root = v.powf(1.0 / alpha);
                let s = tilted_stable(*alpha, h * root, rng).value;
                s * root
            }
        }
    }
}

/// One draw from the frailty of `g` tilted by `h`.
pub fn sample_frailty<R: Rng + ?Sized>(g: &ArchGenerator, h: f64, rng: &mut R) -> Result<f64> {
    Ok(FrailtySampler::new(g, h)?.sample(rng))
}
