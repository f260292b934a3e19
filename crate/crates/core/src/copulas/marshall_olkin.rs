//! Bivariate Marshall–Olkin copulas and their right truncation.

use super::{Copula, TruncationPoint};
use crate::error::{domain, Error, Result};

/// `C(u₁, u₂) = min{u₁^{1−α₁} u₂, u₁ u₂^{1−α₂}}` with `α₁, α₂ ∈ (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarshallOlkin {
    alpha1: f64,
    alpha2: f64,
}

impl MarshallOlkin {
    pub fn new(alpha1: f64, alpha2: f64) -> Result<Self> {
        for a in [alpha1, alpha2] {
            if !(a > 0.0 && a < 1.0) {
                return domain(format!(
                    "Marshall–Olkin parameters must lie in (0, 1), got {a}"
                ));
            }
        }
        Ok(Self { alpha1, alpha2 })
    }

    pub fn alpha1(&self) -> f64 {
        self.alpha1
    }

    pub fn alpha2(&self) -> f64 {
        self.alpha2
    }

    fn alphas(&self) -> [f64; 2] {
        [self.alpha1, self.alpha2]
    }

    /// Closed-form generalized inverse of `x ↦ C(x; t₋ⱼ)`.
    pub(crate) fn section_inv(&self, j: usize, y: f64, t: &[f64]) -> f64 {
        let a = self.alphas();
        let (aj, ao, to) = (a[j], a[1 - j], t[1 - j]);
        let kink = to.powf(1.0 - ao + ao / aj);
        let x = if y <= kink {
            y / to.powf(1.0 - ao)
        } else {
            (y / to).powf(1.0 / (1.0 - aj))
        };
        x.min(t[j])
    }
}

impl Copula for MarshallOlkin {
    fn dim(&self) -> usize {
        2
    }

    fn cdf_unchecked(&self, u: &[f64]) -> f64 {
        let (u1, u2) = (u[0], u[1]);
        (u1.powf(1.0 - self.alpha1) * u2).min(u1 * u2.powf(1.0 - self.alpha2))
    }
}

/// Which closed form applies: `t₂^{α₂} ≤ t₁^{α₁}` or the reverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoCase {
    One,
    Two,
}

/// Right-truncated Marshall–Olkin copula.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedMo {
    model: MarshallOlkin,
    case: MoCase,
    /// `t₂^{α₂}/t₁^{α₁}` in case one, `t₁^{α₁}/t₂^{α₂}` in case two; at most 1.
    ratio: f64,
    /// Breakpoint in `u₁` (case one) or `u₂` (case two).
    breakpoint: f64,
    c: f64,
}

pub fn truncate_mo(m: &MarshallOlkin, t: &TruncationPoint) -> Result<TruncatedMo> {
    if t.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: t.dim(),
        });
    }
    let (t1, t2) = (t.t()[0], t.t()[1]);
    let (a1, a2) = (m.alpha1, m.alpha2);
    let (p1, p2) = (a1 * t1.ln(), a2 * t2.ln());
    let (case, ratio, breakpoint) = if p2 <= p1 {
        let r = (p2 - p1).exp();
        (MoCase::One, r, r.powf((1.0 - a1) / a1))
    } else {
        let r = (p1 - p2).exp();
        (MoCase::Two, r, r.powf((1.0 - a2) / a2))
    };
    Ok(TruncatedMo {
        model: *m,
        case,
        ratio,
        breakpoint,
        c: t.c_of_t(),
    })
}

impl TruncatedMo {
    pub fn model(&self) -> &MarshallOlkin {
        &self.model
    }

    pub fn case(&self) -> MoCase {
        self.case
    }

    pub fn breakpoint(&self) -> f64 {
        self.breakpoint
    }

    pub fn c_of_t(&self) -> f64 {
        self.c
    }

    /// Point `u₂` of the singular component above `u₁`, if the curve passes
    /// over `u₁`.
    pub fn singular_curve(&self, u1: f64) -> Option<f64> {
        let (a1, a2) = (self.model.alpha1, self.model.alpha2);
        if !(0.0..=1.0).contains(&u1) {
            return None;
        }
        match self.case {
            MoCase::One => {
                if u1 > self.breakpoint {
                    return None;
                }
                let v = (1.0 / self.ratio).powf(1.0 - a1) * u1.powf(a1);
                Some(v.powf(1.0 / a2).min(1.0))
            }
            MoCase::Two => {
                let v = self.ratio.powf(1.0 - a2) * u1.powf(a1);
                Some(v.powf(1.0 / a2).min(1.0))
            }
        }
    }
}

impl Copula for TruncatedMo {
    fn dim(&self) -> usize {
        2
    }

    fn cdf_unchecked(&self, u: &[f64]) -> f64 {
        let (u1, u2) = (u[0], u[1]);
        if u1 <= 0.0 || u2 <= 0.0 {
            return 0.0;
        }
        let (a1, a2) = (self.model.alpha1, self.model.alpha2);
        let r = self.ratio;
        let v = match self.case {
            MoCase::One => {
                if u1 <= self.breakpoint {
                    ((r * u1).powf(1.0 - a1) * u2).min(u1 * u2.powf(1.0 - a2))
                } else {
                    (u1 * u2).min(u1.powf(1.0 / (1.0 - a1)) * u2.powf(1.0 - a2) / r)
                }
            }
            MoCase::Two => {
                if u2 <= self.breakpoint {
                    (u1.powf(1.0 - a1) * u2).min(r.powf(1.0 - a2) * u1 * u2.powf(1.0 - a2))
                } else {
                    (u1.powf(1.0 - a1) * u2.powf(1.0 / (1.0 - a2)) / r).min(u1 * u2)
                }
            }
        };
        v.min(u1.min(u2))
    }
}

/// `sup |C_t(u^α) − C_{t^{1/α}}(u)^α|` over the grid, for a Marshall–Olkin
/// copula (an extreme value copula).
pub fn ev_scaling_check(
    m: &MarshallOlkin,
    t: &[f64],
    alpha: f64,
    grid: &[[f64; 2]],
) -> Result<f64> {
    if !(alpha > 0.0) {
        return domain(format!("scaling exponent must be positive, got {alpha}"));
    }
    let tp = TruncationPoint::new(m, t)?;
    let ts: Vec<f64> = t.iter().map(|&x| x.powf(1.0 / alpha)).collect();
    let tps = TruncationPoint::new(m, &ts)?;
    let lhs = truncate_mo(m, &tp)?;
    let rhs = truncate_mo(m, &tps)?;
    let mut worst: f64 = 0.0;
    for u in grid {
        let a = lhs.cdf_unchecked(&[u[0].powf(alpha), u[1].powf(alpha)]);
        let b = rhs.cdf_unchecked(u).powf(alpha);
        worst = worst.max((a - b).abs());
    }
    Ok(worst)
}
