//! JSON model specifications.
//!
//! ```json
//! {"schema": "trunca/1", "type": "archimedean",
//!  "generator": {"family": "clayton", "theta": 2.0}, "dim": 2}
//! ```
//!
//! Other `type`s: `independence` and `comonotone` (with `dim`), `nested`
//! (`root` generator and `sectors`, a list of `{"generator", "dim"}`),
//! `marshall_olkin` (`alpha1`, `alpha2`), `survival` (`inner` model) and
//! `product` (`blocks`, a list of models).

use serde::{Deserialize, Serialize};

use crate::copulas::{CopulaModel, Sector};
use crate::error::{Error, Result};
use crate::generators::{outer_power, ArchGenerator, Family, Generator};

pub const SCHEMA: &str = "trunca/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer_alpha: Option<f64>,
}

impl GeneratorSpec {
    pub fn build(&self) -> Result<ArchGenerator> {
        let g = match (self.family, self.theta) {
            (Family::Independence, _) => Generator::independence(),
            (f, Some(theta)) => Generator::new(f, theta).map_err(spec_err)?,
            (f, None) => return Err(Error::Spec(format!("generator family `{f}` needs `theta`"))),
        };
        match self.outer_alpha {
            None => Ok(g.into()),
            Some(a) => Ok(outer_power(g, a).map_err(spec_err)?.into()),
        }
    }

    pub fn from_generator(g: &ArchGenerator) -> Self {
        let b = g.base();
        Self {
            family: b.family(),
            theta: (b.family() != Family::Independence).then(|| b.theta()),
            outer_alpha: match g {
                ArchGenerator::Base(_) => None,
                ArchGenerator::OuterPower(op) => Some(op.alpha()),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectorSpec {
    pub generator: GeneratorSpec,
    pub dim: usize,
}

/// Model description without the schema tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelKind {
    Independence {
        dim: usize,
    },
    Comonotone {
        dim: usize,
    },
    Archimedean {
        generator: GeneratorSpec,
        dim: usize,
    },
    Nested {
        root: GeneratorSpec,
        sectors: Vec<SectorSpec>,
    },
    MarshallOlkin {
        alpha1: f64,
        alpha2: f64,
    },
    Survival {
        inner: Box<ModelKind>,
    },
    Product {
        blocks: Vec<ModelKind>,
    },
}

impl ModelKind {
    pub fn build(&self) -> Result<CopulaModel> {
        let m = match self {
            ModelKind::Independence { dim } => {
                if *dim < 2 {
                    return Err(Error::Spec(format!(
                        "dimension must be at least 2, got {dim}"
                    )));
                }
                CopulaModel::independence(*dim)
            }
            ModelKind::Comonotone { dim } => CopulaModel::comonotone(*dim),
            ModelKind::Archimedean { generator, dim } => {
                CopulaModel::archimedean(generator.build()?, *dim)
            }
            ModelKind::Nested { root, sectors } => {
                let sectors = sectors
                    .iter()
                    .map(|s| Ok(Sector::new(s.generator.build()?, s.dim)))
                    .collect::<Result<Vec<_>>>()?;
                CopulaModel::nested(root.build()?, sectors)
            }
            ModelKind::MarshallOlkin { alpha1, alpha2 } => {
                CopulaModel::marshall_olkin(*alpha1, *alpha2)
            }
            ModelKind::Survival { inner } => CopulaModel::survival(inner.build()?),
            ModelKind::Product { blocks } => {
                // Blocks may be singletons, so build them without the d ≥ 2 check.
                let blocks = blocks
                    .iter()
                    .map(|b| match b {
                        ModelKind::Independence { dim } => CopulaModel::independence(*dim),
                        other => other.build(),
                    })
                    .collect::<Result<Vec<_>>>()?;
                CopulaModel::product(blocks)
            }
        };
        m.map_err(spec_err)
    }

    pub fn from_model(m: &CopulaModel) -> Self {
        match m {
            CopulaModel::Independence { dim } => ModelKind::Independence { dim: *dim },
            CopulaModel::Comonotone { dim } => ModelKind::Comonotone { dim: *dim },
            CopulaModel::Archimedean { generator, dim } => ModelKind::Archimedean {
                generator: GeneratorSpec::from_generator(generator),
                dim: *dim,
            },
            CopulaModel::Nested(n) => ModelKind::Nested {
                root: GeneratorSpec::from_generator(n.root()),
                sectors: n
                    .sectors()
                    .iter()
                    .map(|s| SectorSpec {
                        generator: GeneratorSpec::from_generator(&s.generator),
                        dim: s.dim,
                    })
                    .collect(),
            },
            CopulaModel::MarshallOlkin(mo) => ModelKind::MarshallOlkin {
                alpha1: mo.alpha1(),
                alpha2: mo.alpha2(),
            },
            CopulaModel::Survival(inner) => ModelKind::Survival {
                inner: Box::new(ModelKind::from_model(inner)),
            },
            CopulaModel::Product(blocks) => ModelKind::Product {
                blocks: blocks.iter().map(ModelKind::from_model).collect(),
            },
        }
    }
}

/// Top-level model file: a [`ModelKind`] plus the schema tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub schema: String,
    #[serde(flatten)]
    pub kind: ModelKind,
}

impl ModelSpec {
    pub fn from_model(m: &CopulaModel) -> Self {
        Self {
            schema: SCHEMA.to_string(),
            kind: ModelKind::from_model(m),
        }
    }

    pub fn build(&self) -> Result<CopulaModel> {
        if self.schema != SCHEMA {
            return Err(Error::Spec(format!(
                "unsupported schema `{}` (expected `{SCHEMA}`)",
                self.schema
            )));
        }
        self.kind.build()
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Spec(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model specs always serialize")
    }
}

/// Parses a model file's contents straight into a model.
pub fn parse_model(json: &str) -> Result<CopulaModel> {
    ModelSpec::from_json(json)?.build()
}

/// Parses a truncation point given as a JSON array or a comma-separated list.
pub fn parse_point(s: &str) -> Result<Vec<f64>> {
    let s = s.trim();
    let parsed: std::result::Result<Vec<f64>, String> = if s.starts_with('[') {
        serde_json::from_str(s).map_err(|e| e.to_string())
    } else {
        s.split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}")))
            .collect()
    };
    parsed.map_err(|e| Error::Spec(format!("cannot parse point: {e}")))
}

fn spec_err(e: Error) -> Error {
    match e {
        Error::Spec(_) => e,
        other => Error::Spec(other.to_string()),
    }
}
