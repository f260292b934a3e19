//! Archimedean generators.
//!
//! A generator `ψ: [0, ∞) → [0, 1]` with `ψ(0) = 1` defines the Archimedean
//! copula `C(u) = ψ(ψ⁻¹(u₁) + … + ψ⁻¹(u_d))`. Three kinds are provided:
//!
//! * [`Generator`]: the one-parameter families (independence, Clayton,
//!   Ali–Mikhail–Haq, Frank, Gumbel, Joe);
//! * [`OuterPowerGenerator`]: `ψ̊(t) = ψ(t^α)` for `α ∈ (0, 1]`;
//! * [`TiltedGenerator`]: `ψ̃(t) = ψ(t + h) / ψ(h)` for a tilt `h ≥ 0`.
//!
//! [`ArchGenerator`] unifies the first two, which are the generators a model
//! can be built from; tilted generators arise from truncation.
//!
//! All evaluations are total on `[0, ∞]`: `ψ(∞) = 0` and `ψ⁻¹(0) = ∞`, so
//! infinite intermediate values flow through nested formulas unchanged.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Generator family of a one-parameter Archimedean copula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Independence,
    Clayton,
    Amh,
    Frank,
    Gumbel,
    Joe,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Independence,
        Family::Clayton,
        Family::Amh,
        Family::Frank,
        Family::Gumbel,
        Family::Joe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Independence => "independence",
            Family::Clayton => "clayton",
            Family::Amh => "amh",
            Family::Frank => "frank",
            Family::Gumbel => "gumbel",
            Family::Joe => "joe",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "independence" | "indep" => Ok(Family::Independence),
            "clayton" => Ok(Family::Clayton),
            "amh" | "ali-mikhail-haq" => Ok(Family::Amh),
            "frank" => Ok(Family::Frank),
            "gumbel" => Ok(Family::Gumbel),
            "joe" => Ok(Family::Joe),
            other => Err(Error::Spec(format!("unknown generator family `{other}`"))),
        }
    }
}

/// Evaluation interface shared by every generator kind.
pub trait Psi {
    /// `ψ(t)`; negative arguments are treated as 0.
    fn psi(&self, t: f64) -> f64;

    /// `ψ⁻¹(u)`; `ψ⁻¹(0) = ∞`, arguments above 1 map to 0.
    fn psi_inv(&self, u: f64) -> f64;

    /// First derivative `ψ'(t)`.
    fn psi_d1(&self, t: f64) -> f64;

    /// Second derivative `ψ''(t)`.
    fn psi_d2(&self, t: f64) -> f64;

    /// `log(−ψ'(t))`, finite far into the tail where `ψ'` itself underflows.
    fn ln_neg_psi_d1(&self, t: f64) -> f64;

    /// Derivative of order 0, 1 or 2.
    fn psi_deriv(&self, t: f64, order: u32) -> Result<f64> {
        if !(t >= 0.0) {
            return domain(format!("derivative argument must be non-negative, got {t}"));
        }
        match order {
            0 => Ok(self.psi(t)),
            1 => Ok(self.psi_d1(t)),
            2 => Ok(self.psi_d2(t)),
            k => Err(Error::Unsupported(format!(
                "generator derivatives of order {k} (only orders 0, 1, 2 are implemented)"
            ))),
        }
    }

    /// `ψ⁻¹(u)` with the argument checked to lie in `[0, 1]`.
    fn checked_psi_inv(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return domain(format!("generator inverse needs u in [0, 1], got {u}"));
        }
        Ok(self.psi_inv(u))
    }

    /// `ψ(t)` with the argument checked to be non-negative.
    fn checked_psi(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return domain(format!("generator argument must be non-negative, got {t}"));
        }
        Ok(self.psi(t))
    }
}

/// A one-parameter Archimedean generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Generator {
    family: Family,
    theta: f64,
    // Frank only: p = 1 − e^{−θ} and log p.
    frank_p: f64,
    frank_ln_p: f64,
}

impl Generator {
    /// Builds a generator, validating the parameter range of the family.
    /// The parameter is ignored for [`Family::Independence`].
    pub fn new(family: Family, theta: f64) -> Result<Self> {
        let ok = match family {
            Family::Independence => true,
            Family::Clayton | Family::Frank => theta > 0.0 && theta.is_finite(),
            Family::Amh => (0.0..1.0).contains(&theta),
            Family::Gumbel | Family::Joe => theta >= 1.0 && theta.is_finite(),
        };
        if !ok {
            return domain(format!(
                "parameter {theta} out of range for the {family} family"
            ));
        }
        let theta = if family == Family::Independence {
            1.0
        } else {
            theta
        };
        let (frank_p, frank_ln_p) = if family == Family::Frank {
            (-(-theta).exp_m1(), (-(-theta).exp()).ln_1p())
        } else {
            (0.0, 0.0)
        };
        Ok(Self {
            family,
            theta,
            frank_p,
            frank_ln_p,
        })
    }

    pub fn independence() -> Self {
        Self::new(Family::Independence, 1.0).expect("independence is always valid")
    }

    pub fn clayton(theta: f64) -> Result<Self> {
        Self::new(Family::Clayton, theta)
    }

    pub fn amh(theta: f64) -> Result<Self> {
        Self::new(Family::Amh, theta)
    }

    pub fn frank(theta: f64) -> Result<Self> {
        Self::new(Family::Frank, theta)
    }

    pub fn gumbel(theta: f64) -> Result<Self> {
        Self::new(Family::Gumbel, theta)
    }

    pub fn joe(theta: f64) -> Result<Self> {
        Self::new(Family::Joe, theta)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Population Kendall's tau where it has a simple closed form.
    pub fn kendall_tau(&self) -> Option<f64> {
        match self.family {
            Family::Independence => Some(0.0),
            Family::Clayton => Some(self.theta / (self.theta + 2.0)),
            Family::Gumbel => Some(1.0 - 1.0 / self.theta),
            _ => None,
        }
    }

    /// Inverse of [`Generator::kendall_tau`] for Clayton and Gumbel.
    pub fn from_kendall_tau(family: Family, tau: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&tau) {
            return domain(format!("Kendall's tau must lie in [0, 1), got {tau}"));
        }
        match family {
            Family::Clayton => Self::clayton(2.0 * tau / (1.0 - tau)),
            Family::Gumbel => Self::gumbel(1.0 / (1.0 - tau)),
            other => Err(Error::Unsupported(format!(
                "parameter from Kendall's tau for the {other} family"
            ))),
        }
    }

    /// Frank `1 − p e^{−t}` without cancellation for large θ.
    fn frank_one_minus(&self, t: f64) -> f64 {
        let x = self.frank_p * (-t).exp();
        if x < 0.5 {
            1.0 - x
        } else {
            -(-t).exp_m1() + (-(self.theta + t)).exp()
        }
    }

    fn frank_ln_one_minus(&self, t: f64) -> f64 {
        let x = self.frank_p * (-t).exp();
        if x < 0.5 {
            (-x).ln_1p()
        } else {
            self.frank_one_minus(t).ln()
        }
    }
}

impl Psi for Generator {
    fn psi(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        let th = self.theta;
        match self.family {
            Family::Independence => (-t).exp(),
            Family::Clayton => (1.0 + t).powf(-1.0 / th),
            Family::Amh => {
                let e = (-t).exp();
                (1.0 - th) * e / (1.0 - th * e)
            }
            Family::Frank => {
                if t == f64::INFINITY {
                    return 0.0;
                }
                -self.frank_ln_one_minus(t) / th
            }
            Family::Gumbel => (-t.powf(1.0 / th)).exp(),
            Family::Joe => {
                let v = -(ln_one_minus_exp_neg(t) / th).exp_m1();
                v.max(0.0)
            }
        }
    }

    fn psi_inv(&self, u: f64) -> f64 {
        if u >= 1.0 {
            return 0.0;
        }
        if u <= 0.0 {
            return f64::INFINITY;
        }
        let th = self.theta;
        match self.family {
            Family::Independence => -u.ln(),
            Family::Clayton => (-th * u.ln()).exp_m1(),
            Family::Amh => ((1.0 - th) * (1.0 - u) / u).ln_1p(),
            Family::Frank => {
                // ψ⁻¹(u) = −log((1 − e^{−θu}) / p).
                let a = -(-th * u).exp_m1();
                if a > 0.5 * self.frank_p {
                    // Ratio near one: use 1 − ratio = e^{−θu}(1 − e^{−θ(1−u)}) / p.
                    let r = (-th * u).exp() * (-(-th * (1.0 - u)).exp_m1()) / self.frank_p;
                    -(-r).ln_1p()
                } else {
                    -(a.ln() - self.frank_ln_p)
                }
            }
            Family::Gumbel => (-u.ln()).powf(th),
            Family::Joe => {
                // −log(1 − (1 − u)^θ)
                let x = th * (-u).ln_1p();
                let e = x.exp();
                if e < 0.5 {
                    -(-e).ln_1p()
                } else {
                    -(-x.exp_m1()).ln()
                }
            }
        }
    }

    fn psi_d1(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        let th = self.theta;
        match self.family {
            Family::Independence => -(-t).exp(),
            Family::Clayton => -(1.0 / th) * (1.0 + t).powf(-1.0 / th - 1.0),
            Family::Amh => {
                let e = (-t).exp();
                let den = 1.0 - th * e;
                -(1.0 - th) * e / (den * den)
            }
            Family::Frank => {
                let x = self.frank_p * (-t).exp();
                -x / (th * self.frank_one_minus(t))
            }
            Family::Gumbel => {
                let a = 1.0 / th;
                -a * t.powf(a - 1.0) * (-t.powf(a)).exp()
            }
            Family::Joe => {
                let a = 1.0 / th;
                let y = -(-t).exp_m1();
                -a * y.powf(a - 1.0) * (-t).exp()
            }
        }
    }

    fn psi_d2(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        let th = self.theta;
        match self.family {
            Family::Independence => (-t).exp(),
            Family::Clayton => {
                let a = 1.0 / th;
                a * (a + 1.0) * (1.0 + t).powf(-a - 2.0)
            }
            Family::Amh => {
                let e = (-t).exp();
                let den = 1.0 - th * e;
                (1.0 - th) * e * (1.0 + th * e) / (den * den * den)
            }
            Family::Frank => {
                let x = self.frank_p * (-t).exp();
                let w = self.frank_one_minus(t);
                x / (th * w * w)
            }
            Family::Gumbel => {
                let a = 1.0 / th;
                let ta = t.powf(a);
                a * t.powf(a - 2.0) * (-ta).exp() * (a * ta - a + 1.0)
            }
            Family::Joe => {
                let a = 1.0 / th;
                let e = (-t).exp();
                let y = -(-t).exp_m1();
                a * y.powf(a - 2.0) * e * (1.0 - a * e)
            }
        }
    }

    fn ln_neg_psi_d1(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        let th = self.theta;
        match self.family {
            Family::Independence => -t,
            Family::Clayton => -th.ln() - (1.0 / th + 1.0) * t.ln_1p(),
            Family::Amh => {
                let e = (-t).exp();
                (1.0 - th).ln() - t - 2.0 * (-th * e).ln_1p()
            }
            Family::Frank => self.frank_ln_p - t - th.ln() - self.frank_ln_one_minus(t),
            Family::Gumbel => {
                let a = 1.0 / th;
                a.ln() + (a - 1.0) * t.ln() - t.powf(a)
            }
            Family::Joe => {
                let a = 1.0 / th;
                a.ln() + (a - 1.0) * ln_one_minus_exp_neg(t) - t
            }
        }
    }
}

/// `log(1 − e^{−t})` for `t ≥ 0`.
fn ln_one_minus_exp_neg(t: f64) -> f64 {
    let e = (-t).exp();
    if e > 0.5 {
        (-(-t).exp_m1()).ln()
    } else {
        (-e).ln_1p()
    }
}

/// Outer power generator `ψ̊(t) = ψ(t^α)`, `α ∈ (0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterPowerGenerator {
    base: Generator,
    alpha: f64,
}

impl OuterPowerGenerator {
    pub fn new(base: Generator, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return domain(format!("outer power alpha must lie in (0, 1], got {alpha}"));
        }
        Ok(Self { base, alpha })
    }

    pub fn base(&self) -> &Generator {
        &self.base
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// `outer_power(g, α)` as a free function.
pub fn outer_power(g: Generator, alpha: f64) -> Result<OuterPowerGenerator> {
    OuterPowerGenerator::new(g, alpha)
}

impl Psi for OuterPowerGenerator {
    fn psi(&self, t: f64) -> f64 {
        self.base.psi(t.max(0.0).powf(self.alpha))
    }

    fn psi_inv(&self, u: f64) -> f64 {
        self.base.psi_inv(u).powf(1.0 / self.alpha)
    }

    fn psi_d1(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        let a = self.alpha;
        if a == 1.0 {
            return self.base.psi_d1(t);
        }
        self.base.psi_d1(t.powf(a)) * a * t.powf(a - 1.0)
    }

    fn psi_d2(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        let a = self.alpha;
        if a == 1.0 {
            return self.base.psi_d2(t);
        }
        let s = t.powf(a);
        self.base.psi_d2(s) * a * a * t.powf(2.0 * a - 2.0)
            + self.base.psi_d1(s) * a * (a - 1.0) * t.powf(a - 2.0)
    }

    fn ln_neg_psi_d1(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        let a = self.alpha;
        if a == 1.0 {
            return self.base.ln_neg_psi_d1(t);
        }
        self.base.ln_neg_psi_d1(t.powf(a)) + a.ln() + (a - 1.0) * t.ln()
    }
}

/// A generator a copula model can be built from: a plain family member or its
/// outer power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArchGenerator {
    Base(Generator),
    OuterPower(OuterPowerGenerator),
}

impl ArchGenerator {
    /// The underlying one-parameter generator.
    pub fn base(&self) -> &Generator {
        match self {
            ArchGenerator::Base(g) => g,
            ArchGenerator::OuterPower(op) => op.base(),
        }
    }

    /// Outer power exponent; 1 for plain generators.
    pub fn alpha(&self) -> f64 {
        match self {
            ArchGenerator::Base(_) => 1.0,
            ArchGenerator::OuterPower(op) => op.alpha(),
        }
    }

    pub fn family(&self) -> Family {
        self.base().family()
    }

    pub fn tilt(&self, h: f64) -> Result<TiltedGenerator> {
        TiltedGenerator::new(*self, h)
    }

    /// Index `κ` such that `1 − ψ(t)` is regularly varying at 0 with index κ;
    /// gives the upper tail coefficient `2 − 2^κ` of the untruncated copula.
    pub(crate) fn upper_tail_index(&self) -> f64 {
        let g = self.base();
        let base = match g.family() {
            Family::Gumbel | Family::Joe => 1.0 / g.theta(),
            _ => 1.0,
        };
        base * self.alpha()
    }

    /// `ψ` is regularly varying at infinity with index `−ρ`; returns `ρ` when
    /// that holds (Clayton base), `None` for the faster-decaying families.
    pub(crate) fn regular_variation_index(&self) -> Option<f64> {
        let g = self.base();
        match g.family() {
            Family::Clayton => Some(self.alpha() / g.theta()),
            _ => None,
        }
    }
}

impl From<Generator> for ArchGenerator {
    fn from(g: Generator) -> Self {
        ArchGenerator::Base(g)
    }
}

impl From<OuterPowerGenerator> for ArchGenerator {
    fn from(g: OuterPowerGenerator) -> Self {
        ArchGenerator::OuterPower(g)
    }
}

macro_rules! dispatch {
    ($self:ident, $g:ident => $e:expr) => {
        match $self {
            ArchGenerator::Base($g) => $e,
            ArchGenerator::OuterPower($g) => $e,
        }
    };
}

impl Psi for ArchGenerator {
    fn psi(&self, t: f64) -> f64 {
        dispatch!(self, g => g.psi(t))
    }
    fn psi_inv(&self, u: f64) -> f64 {
        dispatch!(self, g => g.psi_inv(u))
    }
    fn psi_d1(&self, t: f64) -> f64 {
        dispatch!(self, g => g.psi_d1(t))
    }
    fn psi_d2(&self, t: f64) -> f64 {
        dispatch!(self, g => g.psi_d2(t))
    }
    fn ln_neg_psi_d1(&self, t: f64) -> f64 {
        dispatch!(self, g => g.ln_neg_psi_d1(t))
    }
}

/// Tilted generator `ψ̃(t) = ψ(t + h) / ψ(h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltedGenerator {
    base: ArchGenerator,
    tilt: f64,
    psi_h: f64,
}

impl TiltedGenerator {
    pub fn new(base: impl Into<ArchGenerator>, h: f64) -> Result<Self> {
        let base = base.into();
        if !(h >= 0.0 && h.is_finite()) {
            return domain(format!("tilt must be finite and non-negative, got {h}"));
        }
        let psi_h = base.psi(h);
        if !(psi_h > 0.0) {
            return domain(format!("ψ(h) = 0 at tilt h = {h}"));
        }
        Ok(Self {
            base,
            tilt: h,
            psi_h,
        })
    }

    pub fn base(&self) -> &ArchGenerator {
        &self.base
    }

    pub fn tilt_h(&self) -> f64 {
        self.tilt
    }

    /// Cached `ψ(h)`; equals `C(t)` when the tilt comes from truncation at `t`.
    pub fn psi_h(&self) -> f64 {
        self.psi_h
    }

    /// Tilting a tilted generator adds the tilts.
    pub fn tilt(&self, h: f64) -> Result<TiltedGenerator> {
        if !(h >= 0.0) {
            return domain(format!("tilt must be non-negative, got {h}"));
        }
        TiltedGenerator::new(self.base, self.tilt + h)
    }
}

/// `tilt(g, h)` as a free function.
pub fn tilt(g: impl Into<ArchGenerator>, h: f64) -> Result<TiltedGenerator> {
    TiltedGenerator::new(g, h)
}

impl Psi for TiltedGenerator {
    fn psi(&self, t: f64) -> f64 {
        if self.tilt == 0.0 {
            return self.base.psi(t);
        }
        (self.base.psi(t.max(0.0) + self.tilt) / self.psi_h).min(1.0)
    }

    fn psi_inv(&self, u: f64) -> f64 {
        if self.tilt == 0.0 {
            return self.base.psi_inv(u);
        }
        if u >= 1.0 {
            return 0.0;
        }
        (self.base.psi_inv(self.psi_h * u) - self.tilt).max(0.0)
    }

    fn psi_d1(&self, t: f64) -> f64 {
        self.base.psi_d1(t.max(0.0) + self.tilt) / self.psi_h
    }

    fn psi_d2(&self, t: f64) -> f64 {
        self.base.psi_d2(t.max(0.0) + self.tilt) / self.psi_h
    }

    fn ln_neg_psi_d1(&self, t: f64) -> f64 {
        self.base.ln_neg_psi_d1(t.max(0.0) + self.tilt) - self.psi_h.ln()
    }
}
