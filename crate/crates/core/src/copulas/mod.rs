//! Copula models and their right truncation.
//!
//! [`CopulaModel`] covers the independence and comonotonicity copulas,
//! (outer power) Archimedean, nested Archimedean, bivariate Marshall–Olkin,
//! bivariate survival copulas and products of independent blocks. Every model
//! can be evaluated, its single-argument sections `x ↦ C(x; t₋ⱼ)` can be
//! inverted, and it can be truncated from the right at a
//! [`TruncationPoint`], giving a [`TruncatedCopula`].

mod marshall_olkin;
mod nested;
mod truncated;

use crate::error::{domain, Error, Result};
use crate::generators::{ArchGenerator, Psi};
use crate::numerics::{clip_unit, generalized_inverse};

pub use marshall_olkin::{ev_scaling_check, truncate_mo, MarshallOlkin, MoCase, TruncatedMo};
pub use nested::{nested_biv_margin, truncate_nested, NestedArchimedean, Sector, TruncatedNested};
pub use truncated::{
    truncate_componentwise, truncate_general, truncate_numeric, TruncatedCopula, TruncatedForm,
};

/// Round-off tolerated on inputs that must lie in the unit interval.
pub const UNIT_TOL: f64 = 1e-12;

/// Anything that evaluates like a copula.
pub trait Copula {
    fn dim(&self) -> usize;

    /// Distribution function at a point already known to lie in `[0, 1]^d`.
    fn cdf_unchecked(&self, u: &[f64]) -> f64;

    /// Distribution function with dimension and range checks. Inputs within
    /// [`UNIT_TOL`] of the unit cube are clipped onto it.
    fn cdf(&self, u: &[f64]) -> Result<f64> {
        let d = self.dim();
        if u.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: u.len(),
            });
        }
        let mut clipped = Vec::with_capacity(d);
        for &x in u {
            match clip_unit(x, UNIT_TOL) {
                Some(v) => clipped.push(v),
                None => return domain(format!("copula argument {x} outside [0, 1]")),
            }
        }
        Ok(self.cdf_unchecked(&clipped))
    }
}

/// A copula model.
#[derive(Debug, Clone, PartialEq)]
pub enum CopulaModel {
    Independence {
        dim: usize,
    },
    Comonotone {
        dim: usize,
    },
    Archimedean {
        generator: ArchGenerator,
        dim: usize,
    },
    Nested(NestedArchimedean),
    MarshallOlkin(MarshallOlkin),
    /// Survival copula: the law of `1 − U` for `U` from the inner model.
    Survival(Box<CopulaModel>),
    /// Independent blocks: `C(u) = ∏ C_s(u_s)`.
    Product(Vec<CopulaModel>),
}

impl CopulaModel {
    /// Independence copula; a dimension of one is allowed so it can serve as
    /// a singleton block inside [`CopulaModel::Product`].
    pub fn independence(dim: usize) -> Result<Self> {
        if dim < 1 {
            return domain("independence copula needs dimension ≥ 1");
        }
        Ok(CopulaModel::Independence { dim })
    }

    pub fn comonotone(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(CopulaModel::Comonotone { dim })
    }

    pub fn archimedean(generator: impl Into<ArchGenerator>, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(CopulaModel::Archimedean {
            generator: generator.into(),
            dim,
        })
    }

    pub fn nested(root: impl Into<ArchGenerator>, sectors: Vec<Sector>) -> Result<Self> {
        Ok(CopulaModel::Nested(NestedArchimedean::new(
            root.into(),
            sectors,
        )?))
    }

    pub fn marshall_olkin(alpha1: f64, alpha2: f64) -> Result<Self> {
        Ok(CopulaModel::MarshallOlkin(MarshallOlkin::new(
            alpha1, alpha2,
        )?))
    }

    /// Survival copula of `inner`, evaluated by inclusion-exclusion over
    /// `2^d` terms, hence limited to [`MAX_SURVIVAL_DIM`] dimensions.
    pub fn survival(inner: CopulaModel) -> Result<Self> {
        if !(2..=MAX_SURVIVAL_DIM).contains(&inner.dim()) {
            return Err(Error::Unsupported(format!(
                "survival copulas of dimension {} (2 to {MAX_SURVIVAL_DIM})",
                inner.dim()
            )));
        }
        Ok(CopulaModel::Survival(Box::new(inner)))
    }

    pub fn product(blocks: Vec<CopulaModel>) -> Result<Self> {
        let d: usize = blocks.iter().map(CopulaModel::dim).sum();
        if blocks.is_empty() {
            return domain("product copula needs at least one block");
        }
        check_dim(d)?;
        Ok(CopulaModel::Product(blocks))
    }

    /// True for models that are permutation symmetric for every parameter.
    pub fn is_exchangeable(&self) -> bool {
        match self {
            CopulaModel::Independence { .. }
            | CopulaModel::Comonotone { .. }
            | CopulaModel::Archimedean { .. } => true,
            CopulaModel::MarshallOlkin(mo) => mo.alpha1() == mo.alpha2(),
            CopulaModel::Survival(inner) => inner.is_exchangeable(),
            CopulaModel::Nested(n) => n.sectors().len() == 1,
            CopulaModel::Product(blocks) => {
                blocks.len() == 1 && blocks[0].is_exchangeable()
                    || blocks
                        .iter()
                        .all(|b| matches!(b, CopulaModel::Independence { .. }))
            }
        }
    }

    /// Coefficients `(λ_l, λ_u)` of the untruncated bivariate model, where
    /// known in closed form.
    pub fn tail_coefficients(&self) -> Result<(f64, f64)> {
        if self.dim() != 2 {
            return Err(Error::Unsupported(
                "tail dependence coefficients of non-bivariate models".into(),
            ));
        }
        match self {
            CopulaModel::Independence { .. } => Ok((0.0, 0.0)),
            CopulaModel::Comonotone { .. } => Ok((1.0, 1.0)),
            CopulaModel::Archimedean { generator, .. } => {
                let lower = generator
                    .regular_variation_index()
                    .map_or(0.0, |rho| 2f64.powf(-rho));
                let upper = 2.0 - 2f64.powf(generator.upper_tail_index());
                Ok((lower, upper))
            }
            CopulaModel::MarshallOlkin(mo) => Ok((0.0, mo.alpha1().min(mo.alpha2()))),
            CopulaModel::Survival(inner) => {
                let (l, u) = inner.tail_coefficients()?;
                Ok((u, l))
            }
            CopulaModel::Product(blocks) if blocks.len() == 1 => blocks[0].tail_coefficients(),
            CopulaModel::Product(_) => Ok((0.0, 0.0)),
            CopulaModel::Nested(n) if n.sectors().len() == 1 => CopulaModel::Archimedean {
                generator: n.sectors()[0].generator,
                dim: 2,
            }
            .tail_coefficients(),
            CopulaModel::Nested(n) => CopulaModel::Archimedean {
                generator: *n.root(),
                dim: 2,
            }
            .tail_coefficients(),
        }
    }

    /// `C(x; t₋ⱼ)`: the distribution function at `t` with coordinate `j`
    /// replaced by `x`.
    pub fn margin_section(&self, j: usize, x: f64, t: &TruncationPoint) -> Result<f64> {
        self.check_section_args(j, t)?;
        let x = match clip_unit(x, UNIT_TOL) {
            Some(v) => v.min(t.t()[j]),
            None => return domain(format!("section argument {x} outside [0, t_j]")),
        };
        Ok(self.section_unchecked(j, x, t.t()))
    }

    pub(crate) fn section_unchecked(&self, j: usize, x: f64, t: &[f64]) -> f64 {
        let mut v = t.to_vec();
        v[j] = x;
        self.cdf_unchecked(&v)
    }

    /// Generalized inverse of the section `x ↦ C(x; t₋ⱼ)` on `[0, t_j]`.
    /// Closed form where the model allows it, bisection otherwise.
    pub fn margin_section_inv(&self, j: usize, y: f64, t: &TruncationPoint) -> Result<f64> {
        self.check_section_args(j, t)?;
        let y = self.check_section_level(y, t)?;
        Ok(self.section_inv_unchecked(j, y, t.t()))
    }

    /// Same as [`CopulaModel::margin_section_inv`] but always by bisection.
    pub fn margin_section_inv_bisection(
        &self,
        j: usize,
        y: f64,
        t: &TruncationPoint,
    ) -> Result<f64> {
        self.check_section_args(j, t)?;
        let y = self.check_section_level(y, t)?;
        Ok(self.section_inv_bisection(j, y, t.t()))
    }

    fn check_section_args(&self, j: usize, t: &TruncationPoint) -> Result<()> {
        if t.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: t.dim(),
            });
        }
        if j >= self.dim() {
            return Err(Error::Index(format!(
                "coordinate {j} of a {}-dimensional model",
                self.dim()
            )));
        }
        Ok(())
    }

    fn check_section_level(&self, y: f64, t: &TruncationPoint) -> Result<f64> {
        let top = t.c_of_t();
        if y.is_nan() || y < -UNIT_TOL || y > top * (1.0 + 1e-12) + UNIT_TOL {
            return domain(format!("section level {y} outside [0, C(t) = {top}]"));
        }
        Ok(y.clamp(0.0, top))
    }

    pub(crate) fn section_inv_bisection(&self, j: usize, y: f64, t: &[f64]) -> f64 {
        generalized_inverse(|x| self.section_unchecked(j, x, t), y, 0.0, t[j])
    }

    pub(crate) fn section_inv_unchecked(&self, j: usize, y: f64, t: &[f64]) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        let x = match self {
            CopulaModel::Independence { .. } => {
                let rest: f64 = t
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != j)
                    .map(|(_, v)| v)
                    .product();
                y / rest
            }
            CopulaModel::Comonotone { .. } => y,
            CopulaModel::Archimedean { generator, .. } => {
                let rest: f64 = t
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != j)
                    .map(|(_, &v)| generator.psi_inv(v))
                    .sum();
                generator.psi(generator.psi_inv(y) - rest)
            }
            CopulaModel::Nested(n) => n.section_inv(j, y, t),
            CopulaModel::MarshallOlkin(mo) => mo.section_inv(j, y, t),
            CopulaModel::Product(blocks) => {
                let mut offset = 0;
                let mut target = None;
                let mut others = 1.0;
                for (b, block) in blocks.iter().enumerate() {
                    let d = block.dim();
                    let tb = &t[offset..offset + d];
                    if (offset..offset + d).contains(&j) {
                        target = Some((b, j - offset, offset));
                    } else {
                        others *= block.cdf_unchecked(tb);
                    }
                    offset += d;
                }
                let (b, jl, off) = target.expect("index checked by caller");
                let block = &blocks[b];
                let tb = &t[off..off + block.dim()];
                if block.dim() == 1 {
                    y / others
                } else {
                    block.section_inv_unchecked(jl, y / others, tb)
                }
            }
            CopulaModel::Survival(_) => self.section_inv_bisection(j, y, t),
        };
        x.clamp(0.0, t[j])
    }

    /// `F_t(x) = C(min{x, t}) / C(t)`, the distribution function of `U | U ≤ t`.
    pub fn truncated_cdf(&self, t: &TruncationPoint, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() || t.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let mut m = Vec::with_capacity(x.len());
        for (&xi, &ti) in x.iter().zip(t.t()) {
            if !(xi >= 0.0) {
                return domain(format!("truncated cdf argument {xi} is negative"));
            }
            m.push(xi.min(ti));
        }
        Ok(self.cdf_unchecked(&m) / t.c_of_t())
    }

    /// Marginal distribution function `F_{t,j}(x) = C(x; t₋ⱼ) / C(t)`.
    pub fn truncated_margin_cdf(&self, j: usize, x: f64, t: &TruncationPoint) -> Result<f64> {
        Ok(self.margin_section(j, x, t)? / t.c_of_t())
    }
}

/// Largest dimension accepted by [`CopulaModel::survival`].
pub const MAX_SURVIVAL_DIM: usize = 12;

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return domain(format!("copula dimension must be at least 2, got {d}"));
    }
    Ok(())
}

impl Copula for CopulaModel {
    fn dim(&self) -> usize {
        match self {
            CopulaModel::Independence { dim }
            | CopulaModel::Comonotone { dim }
            | CopulaModel::Archimedean { dim, .. } => *dim,
            CopulaModel::Nested(n) => n.dim(),
            CopulaModel::MarshallOlkin(_) => 2,
            CopulaModel::Survival(inner) => inner.dim(),
            CopulaModel::Product(blocks) => blocks.iter().map(CopulaModel::dim).sum(),
        }
    }

    fn cdf_unchecked(&self, u: &[f64]) -> f64 {
        match self {
            CopulaModel::Independence { .. } => u.iter().product(),
            CopulaModel::Comonotone { .. } => u.iter().copied().fold(1.0, f64::min),
            CopulaModel::Archimedean { generator, .. } => {
                if u.iter().any(|&x| x <= 0.0) {
                    return 0.0;
                }
                generator.psi(u.iter().map(|&x| generator.psi_inv(x)).sum())
            }
            CopulaModel::Nested(n) => n.cdf_unchecked(u),
            CopulaModel::MarshallOlkin(mo) => mo.cdf_unchecked(u),
            CopulaModel::Survival(inner) if u.len() == 2 => {
                let v = u[0] + u[1] - 1.0 + inner.cdf_unchecked(&[1.0 - u[0], 1.0 - u[1]]);
                v.clamp(0.0, u[0].min(u[1]))
            }
            CopulaModel::Survival(inner) => {
                // P(U > 1 − u) = Σ_S (−1)^|S| C(w_S), w_j = 1 − u_j for j ∈ S.
                let d = u.len();
                let mut w = vec![1.0; d];
                let mut v = 0.0;
                for mask in 0u32..1 << d {
                    for (j, wj) in w.iter_mut().enumerate() {
                        *wj = if mask >> j & 1 == 1 { 1.0 - u[j] } else { 1.0 };
                    }
                    let sign = if mask.count_ones() % 2 == 0 {
                        1.0
                    } else {
                        -1.0
                    };
                    v += sign * inner.cdf_unchecked(&w);
                }
                v.clamp(0.0, u.iter().copied().fold(1.0, f64::min))
            }
            CopulaModel::Product(blocks) => {
                let mut offset = 0;
                let mut acc = 1.0;
                for b in blocks {
                    let d = b.dim();
                    acc *= b.cdf_unchecked(&u[offset..offset + d]);
                    offset += d;
                }
                acc
            }
        }
    }
}

/// Truncation point `t ∈ (0, 1]^d` together with the cached mass `C(t) > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationPoint {
    t: Vec<f64>,
    c_of_t: f64,
}

impl TruncationPoint {
    pub fn new(model: &impl Copula, t: &[f64]) -> Result<Self> {
        if t.len() != model.dim() {
            return Err(Error::DimensionMismatch {
                expected: model.dim(),
                got: t.len(),
            });
        }
        if let Some(&bad) = t.iter().find(|&&x| !(x > 0.0 && x <= 1.0)) {
            return domain(format!("truncation point coordinate {bad} outside (0, 1]"));
        }
        let c = model.cdf_unchecked(t);
        if !(c > 0.0) {
            return Err(Error::ZeroMass(c));
        }
        Ok(Self {
            t: t.to_vec(),
            c_of_t: c,
        })
    }

    /// The trivial truncation point `t = 1`.
    pub fn ones(model: &impl Copula) -> Self {
        Self {
            t: vec![1.0; model.dim()],
            c_of_t: 1.0,
        }
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn dim(&self) -> usize {
        self.t.len()
    }

    /// Cached `C(t)`.
    pub fn c_of_t(&self) -> f64 {
        self.c_of_t
    }

    pub fn is_trivial(&self) -> bool {
        self.t.iter().all(|&x| x == 1.0)
    }
}
