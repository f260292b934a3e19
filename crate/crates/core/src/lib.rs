//! Right-truncated copulas: the copula of `U | U ≤ t` for `U ~ C`.
//!
//! [`generators`] holds Archimedean generators and their tilts,
//! [`copulas`] the models and their truncations, [`frailty`] and
//! [`sampling`] the samplers, [`analytics`] tail dependence and Kendall
//! distributions, [`gof`] the test statistics and [`spec`] the JSON model
//! format.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod copulas;
pub mod error;
pub mod frailty;
pub mod generators;
pub mod gof;
pub mod numerics;
pub mod sampling;
pub mod spec;

pub use copulas::{
    truncate_general, truncate_mo, truncate_nested, Copula, CopulaModel, TruncatedCopula,
    TruncationPoint,
};
pub use error::{Error, Result};
pub use frailty::RngStream;
pub use generators::{
    outer_power, tilt, ArchGenerator, Family, Generator, OuterPowerGenerator, Psi, TiltedGenerator,
};
pub use sampling::{Method, SampleMatrix, SampleMeta};
pub use spec::ModelSpec;
