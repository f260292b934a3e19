//! Two-level nested Archimedean copulas and their right truncation.

use super::{Copula, TruncationPoint};
use crate::error::{Error, Result};
use crate::generators::{ArchGenerator, Family, Psi, TiltedGenerator};

/// One child copula of a nested model. The generator of a sector of
/// dimension one never enters any formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sector {
    pub generator: ArchGenerator,
    pub dim: usize,
}

impl Sector {
    pub fn new(generator: impl Into<ArchGenerator>, dim: usize) -> Self {
        Self {
            generator: generator.into(),
            dim,
        }
    }
}

/// `C(u) = C₀(C₁(u₁), …, C_S(u_S))` with Archimedean `C₀, …, C_S`.
#[derive(Debug, Clone, PartialEq)]
pub struct NestedArchimedean {
    root: ArchGenerator,
    sectors: Vec<Sector>,
    offsets: Vec<usize>,
    dim: usize,
}

impl NestedArchimedean {
    pub fn new(root: ArchGenerator, sectors: Vec<Sector>) -> Result<Self> {
        if sectors.is_empty() {
            return Err(Error::Domain(
                "nested model needs at least one sector".into(),
            ));
        }
        if let Some(s) = sectors.iter().position(|s| s.dim == 0) {
            return Err(Error::Domain(format!("sector {s} has dimension 0")));
        }
        for (s, sector) in sectors.iter().enumerate() {
            if sector.dim >= 2 {
                check_nesting(&root, &sector.generator)
                    .map_err(|msg| Error::Nesting(format!("sector {s}: {msg}")))?;
            }
        }
        let mut offsets = Vec::with_capacity(sectors.len());
        let mut dim = 0;
        for s in &sectors {
            offsets.push(dim);
            dim += s.dim;
        }
        if dim < 2 {
            return Err(Error::Domain(format!(
                "copula dimension must be at least 2, got {dim}"
            )));
        }
        Ok(Self {
            root,
            sectors,
            offsets,
            dim,
        })
    }

    pub fn root(&self) -> &ArchGenerator {
        &self.root
    }

    pub fn sectors(&self) -> &[Sector] {
        &self.sectors
    }

    /// Sector and position within the sector of coordinate `j`.
    pub fn locate(&self, j: usize) -> Option<(usize, usize)> {
        if j >= self.dim {
            return None;
        }
        let s = self.offsets.partition_point(|&o| o <= j) - 1;
        Some((s, j - self.offsets[s]))
    }

    /// Global coordinate of position `k` in sector `s`.
    pub fn coordinate(&self, s: usize, k: usize) -> Option<usize> {
        let sector = self.sectors.get(s)?;
        (k < sector.dim).then(|| self.offsets[s] + k)
    }

    pub(crate) fn sector_slice<'a>(&self, s: usize, u: &'a [f64]) -> &'a [f64] {
        &u[self.offsets[s]..self.offsets[s] + self.sectors[s].dim]
    }

    /// `C_s(u_s)` for the sector's own coordinates.
    pub(crate) fn sector_cdf(&self, s: usize, us: &[f64]) -> f64 {
        if us.len() == 1 {
            return us[0];
        }
        if us.iter().any(|&x| x <= 0.0) {
            return 0.0;
        }
        let g = &self.sectors[s].generator;
        g.psi(us.iter().map(|&x| g.psi_inv(x)).sum())
    }

    pub(crate) fn section_inv(&self, j: usize, y: f64, t: &[f64]) -> f64 {
        let (s, k) = self.locate(j).expect("index checked by caller");
        let psi0 = &self.root;
        let others: f64 = (0..self.sectors.len())
            .filter(|&r| r != s)
            .map(|r| psi0.psi_inv(self.sector_cdf(r, self.sector_slice(r, t))))
            .sum();
        let ys = psi0.psi((psi0.psi_inv(y) - others).max(0.0));
        let ts = self.sector_slice(s, t);
        if ts.len() == 1 {
            return ys;
        }
        let g = &self.sectors[s].generator;
        let rest: f64 = ts
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != k)
            .map(|(_, &v)| g.psi_inv(v))
            .sum();
        g.psi((g.psi_inv(ys) - rest).max(0.0))
    }
}

fn check_nesting(root: &ArchGenerator, child: &ArchGenerator) -> std::result::Result<(), String> {
    if root.family() == Family::Independence && root.alpha() == 1.0 {
        return Ok(());
    }
    if root == child {
        return Ok(());
    }
    let (b0, b1) = (root.base(), child.base());
    match (root, child) {
        (ArchGenerator::Base(_), ArchGenerator::Base(_)) => {
            if b0.family() != b1.family() {
                return Err(format!(
                    "no sufficient nesting condition available for {} inside {}",
                    b1.family(),
                    b0.family()
                ));
            }
            if b0.theta() <= b1.theta() {
                Ok(())
            } else {
                Err(format!(
                    "root parameter {} exceeds child parameter {}",
                    b0.theta(),
                    b1.theta()
                ))
            }
        }
        _ => {
            if b0.family() != b1.family() || b0.theta() != b1.theta() {
                return Err("outer power generators must share the same base generator".into());
            }
            if root.alpha() >= child.alpha() {
                Ok(())
            } else {
                Err(format!(
                    "root power {} is smaller than child power {}",
                    root.alpha(),
                    child.alpha()
                ))
            }
        }
    }
}

impl Copula for NestedArchimedean {
    fn dim(&self) -> usize {
        self.dim
    }

    fn cdf_unchecked(&self, u: &[f64]) -> f64 {
        if u.iter().any(|&x| x <= 0.0) {
            return 0.0;
        }
        let psi0 = &self.root;
        let arg: f64 = (0..self.sectors.len())
            .map(|s| psi0.psi_inv(self.sector_cdf(s, self.sector_slice(s, u))))
            .sum();
        psi0.psi(arg)
    }
}

/// Truncated nested Archimedean copula with its constants precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedNested {
    model: NestedArchimedean,
    c: f64,
    /// `h = ψ₀⁻¹[C(t)]`.
    h0: f64,
    /// `h̃_s = ψ₀⁻¹[C(t)] − ψ₀⁻¹[C_s(t_s)]`.
    h_tilde: Vec<f64>,
    /// `ψ₀⁻¹[C_s(t_s)]`.
    root_inv_cs: Vec<f64>,
    /// `ψ_s⁻¹[C_s(t_s)]`.
    sector_inv_cs: Vec<f64>,
}

pub fn truncate_nested(m: &NestedArchimedean, t: &TruncationPoint) -> Result<TruncatedNested> {
    if t.dim() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            got: t.dim(),
        });
    }
    let c = t.c_of_t();
    let psi0 = &m.root;
    let h0 = psi0.psi_inv(c);
    let mut h_tilde = Vec::with_capacity(m.sectors.len());
    let mut root_inv_cs = Vec::with_capacity(m.sectors.len());
    let mut sector_inv_cs = Vec::with_capacity(m.sectors.len());
    for (s, sector) in m.sectors.iter().enumerate() {
        let cs = m.sector_cdf(s, m.sector_slice(s, t.t()));
        let r = psi0.psi_inv(cs);
        root_inv_cs.push(r);
        h_tilde.push(h0 - r);
        sector_inv_cs.push(if sector.dim == 1 {
            0.0
        } else {
            sector.generator.psi_inv(cs)
        });
    }
    Ok(TruncatedNested {
        model: m.clone(),
        c,
        h0,
        h_tilde,
        root_inv_cs,
        sector_inv_cs,
    })
}

impl TruncatedNested {
    pub fn model(&self) -> &NestedArchimedean {
        &self.model
    }

    pub fn c_of_t(&self) -> f64 {
        self.c
    }

    pub fn root_tilt(&self) -> f64 {
        self.h0
    }

    pub fn sector_tilts(&self) -> &[f64] {
        &self.h_tilde
    }

    pub fn root_inv_sector_mass(&self) -> &[f64] {
        &self.root_inv_cs
    }

    /// `ψ_s⁻¹[ψ₀(ψ₀⁻¹[C(t) u] − h̃_s)]`.
    fn inner(&self, s: usize, u: f64) -> f64 {
        let psi0 = &self.model.root;
        let x = (psi0.psi_inv(self.c * u) - self.h_tilde[s]).max(0.0);
        self.model.sectors[s].generator.psi_inv(psi0.psi(x))
    }

    /// `ψ₀⁻¹[ψ_s(Σ_j inner − (d_s − 1) ψ_s⁻¹[C_s(t_s)])]`, the contribution of
    /// sector `s` to the root generator's argument.
    fn sector_term(&self, s: usize, us: &[f64]) -> f64 {
        let psi0 = &self.model.root;
        if us.len() == 1 {
            return (psi0.psi_inv(self.c * us[0]) - self.h_tilde[s]).max(0.0);
        }
        let g = &self.model.sectors[s].generator;
        let b = self.sector_inv_cs[s];
        let sum: f64 =
            us.iter().map(|&u| self.inner(s, u)).sum::<f64>() - (us.len() - 1) as f64 * b;
        psi0.psi_inv(g.psi(sum.max(0.0)))
    }

    /// Bivariate margin for coordinates `(s1, j1)` and `(s2, j2)` given as
    /// sector and position within the sector.
    pub fn biv_margin(
        &self,
        s1: usize,
        j1: usize,
        s2: usize,
        j2: usize,
        u1: f64,
        u2: f64,
    ) -> Result<f64> {
        let m = &self.model;
        let a = m
            .coordinate(s1, j1)
            .ok_or_else(|| Error::Index(format!("sector {s1}, position {j1}")))?;
        let b = m
            .coordinate(s2, j2)
            .ok_or_else(|| Error::Index(format!("sector {s2}, position {j2}")))?;
        if a == b {
            return Err(Error::Index(
                "bivariate margin needs two distinct coordinates".into(),
            ));
        }
        if u1 <= 0.0 || u2 <= 0.0 {
            return Ok(0.0);
        }
        let psi0 = &m.root;
        if s1 != s2 {
            let tilted = TiltedGenerator::new(*psi0, self.h0)?;
            return Ok(tilted.psi(tilted.psi_inv(u1) + tilted.psi_inv(u2)));
        }
        let s = s1;
        let g = &m.sectors[s].generator;
        let h = self.h_tilde[s];
        let sum = self.inner(s, u1) + self.inner(s, u2) - self.sector_inv_cs[s];
        Ok((psi0.psi(h + psi0.psi_inv(g.psi(sum.max(0.0)))) / self.c).min(u1.min(u2)))
    }
}

/// Free-function form of [`TruncatedNested::biv_margin`].
pub fn nested_biv_margin(
    tc: &TruncatedNested,
    s1: usize,
    j1: usize,
    s2: usize,
    j2: usize,
    u1: f64,
    u2: f64,
) -> Result<f64> {
    tc.biv_margin(s1, j1, s2, j2, u1, u2)
}

impl Copula for TruncatedNested {
    fn dim(&self) -> usize {
        self.model.dim
    }

    fn cdf_unchecked(&self, u: &[f64]) -> f64 {
        if u.iter().any(|&x| x <= 0.0) {
            return 0.0;
        }
        let m = &self.model;
        let arg: f64 = (0..m.sectors.len())
            .map(|s| self.sector_term(s, m.sector_slice(s, u)))
            .sum();
        let v = m.root.psi(arg) / self.c;
        v.min(u.iter().copied().fold(1.0, f64::min))
    }
}
