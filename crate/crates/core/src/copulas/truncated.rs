use super::marshall_olkin::{truncate_mo, TruncatedMo};
use super::nested::{truncate_nested, TruncatedNested};
use super::{Copula, CopulaModel, TruncationPoint};
use crate::error::{Error, Result};
use crate::generators::{Psi, TiltedGenerator};

/// How a truncated copula is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum TruncatedForm {
    Independence(usize),
    Comonotone(usize),
    Tilted {
        generator: TiltedGenerator,
        dim: usize,
    },
    Nested(TruncatedNested),
    MarshallOlkin(TruncatedMo),
    /// Independent blocks, each truncated at its own sub-vector of `t`.
    Blocks(Vec<TruncatedCopula>),
    /// `C({C⁻¹[C(t) u_j; t₋ⱼ]}) / C(t)` with section inverses by bisection
    /// (`bisection = true`) or by the model's closed form where available.
    Componentwise {
        bisection: bool,
    },
}

/// The copula of `U | U ≤ t` for `U ~ C`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedCopula {
    source: CopulaModel,
    t: TruncationPoint,
    form: TruncatedForm,
}

impl TruncatedCopula {
    pub fn source(&self) -> &CopulaModel {
        &self.source
    }

    pub fn truncation(&self) -> &TruncationPoint {
        &self.t
    }

    pub fn form(&self) -> &TruncatedForm {
        &self.form
    }

    /// True unless evaluation goes through the componentwise formula.
    pub fn is_closed_form(&self) -> bool {
        !matches!(self.form, TruncatedForm::Componentwise { .. })
    }

    /// The tilted generator if the truncation is Archimedean.
    pub fn tilted_generator(&self) -> Option<&TiltedGenerator> {
        match &self.form {
            TruncatedForm::Tilted { generator, .. } => Some(generator),
            _ => None,
        }
    }

    fn componentwise(&self, u: &[f64], bisection: bool) -> f64 {
        let c = self.t.c_of_t();
        let t = self.t.t();
        let x: Vec<f64> = u
            .iter()
            .enumerate()
            .map(|(j, &uj)| {
                if bisection {
                    self.source.section_inv_bisection(j, c * uj, t)
                } else {
                    self.source.section_inv_unchecked(j, c * uj, t)
                }
            })
            .collect();
        self.source.cdf_unchecked(&x) / c
    }
}

fn check(m: &CopulaModel, t: &TruncationPoint) -> Result<()> {
    if m.dim() != t.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            got: t.dim(),
        });
    }
    Ok(())
}

/// Right truncation of `m` at `t`, using a closed form whenever the model has
/// one.
pub fn truncate_general(m: &CopulaModel, t: &TruncationPoint) -> Result<TruncatedCopula> {
    check(m, t)?;
    let form = match m {
        CopulaModel::Independence { dim } => TruncatedForm::Independence(*dim),
        CopulaModel::Comonotone { dim } => TruncatedForm::Comonotone(*dim),
        CopulaModel::Archimedean { generator, dim } => TruncatedForm::Tilted {
            generator: generator.tilt(generator.psi_inv(t.c_of_t()))?,
            dim: *dim,
        },
        CopulaModel::Nested(n) => TruncatedForm::Nested(truncate_nested(n, t)?),
        CopulaModel::MarshallOlkin(mo) => TruncatedForm::MarshallOlkin(truncate_mo(mo, t)?),
        CopulaModel::Product(blocks) => {
            let mut parts = Vec::with_capacity(blocks.len());
            let mut offset = 0;
            for b in blocks {
                let d = b.dim();
                let tb = TruncationPoint::new(b, &t.t()[offset..offset + d])?;
                parts.push(truncate_general(b, &tb)?);
                offset += d;
            }
            TruncatedForm::Blocks(parts)
        }
        CopulaModel::Survival(_) => TruncatedForm::Componentwise { bisection: true },
    };
    Ok(TruncatedCopula {
        source: m.clone(),
        t: t.clone(),
        form,
    })
}

/// Right truncation through the componentwise formula with every section
/// inverse computed by bisection.
pub fn truncate_numeric(m: &CopulaModel, t: &TruncationPoint) -> Result<TruncatedCopula> {
    check(m, t)?;
    Ok(TruncatedCopula {
        source: m.clone(),
        t: t.clone(),
        form: TruncatedForm::Componentwise { bisection: true },
    })
}

/// Right truncation through the componentwise formula with the model's
/// closed-form section inverses.
pub fn truncate_componentwise(m: &CopulaModel, t: &TruncationPoint) -> Result<TruncatedCopula> {
    check(m, t)?;
    Ok(TruncatedCopula {
        source: m.clone(),
        t: t.clone(),
        form: TruncatedForm::Componentwise { bisection: false },
    })
}

impl Copula for TruncatedCopula {
    fn dim(&self) -> usize {
        self.t.dim()
    }

    fn cdf_unchecked(&self, u: &[f64]) -> f64 {
        let v = match &self.form {
            TruncatedForm::Independence(_) => u.iter().product(),
            TruncatedForm::Comonotone(_) => u.iter().copied().fold(1.0, f64::min),
            TruncatedForm::Tilted { generator, .. } => {
                if u.iter().any(|&x| x <= 0.0) {
                    return 0.0;
                }
                generator.psi(u.iter().map(|&x| generator.psi_inv(x)).sum())
            }
            TruncatedForm::Nested(tn) => tn.cdf_unchecked(u),
            TruncatedForm::MarshallOlkin(tm) => tm.cdf_unchecked(u),
            TruncatedForm::Blocks(parts) => {
                let mut offset = 0;
                let mut acc = 1.0;
                for p in parts {
                    let d = p.dim();
                    acc *= p.cdf_unchecked(&u[offset..offset + d]);
                    offset += d;
                }
                acc
            }
            TruncatedForm::Componentwise { bisection } => self.componentwise(u, *bisection),
        };
        v.clamp(0.0, u.iter().copied().fold(1.0, f64::min))
    }
}
