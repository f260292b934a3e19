//! Copula samplers: the frailty (Marshall–Olkin) algorithm for Archimedean,
//! tilted and nested Archimedean models, the shock construction for
//! Marshall–Olkin copulas, and the rejection oracle for truncated models.
//!
//! Rows are produced in fixed-size chunks, chunk `k` drawing from stream `k`
//! of a seed taken from the caller's [`RngStream`]. Output therefore depends
//! on the seed only, not on the number of worker threads.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copulas::{
    Copula, CopulaModel, NestedArchimedean, TruncatedCopula, TruncatedForm, TruncationPoint,
};
use crate::error::{Error, Result};
use crate::frailty::{exp1, open01, stable, tilted_stable, FrailtySampler, RngStream};
use crate::generators::{ArchGenerator, Family, Psi, TiltedGenerator};
use crate::spec::ModelSpec;

/// Rows generated per RNG stream.
pub const CHUNK_ROWS: usize = 4096;

/// Sampling route for truncated models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Closed-form sampler where one exists, rejection otherwise.
    #[default]
    Auto,
    /// Closed-form sampler only; an error where none exists.
    Tilted,
    /// Rejection from the untruncated model followed by the margin transform.
    Oracle,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Method::Auto),
            "tilted" => Ok(Method::Tilted),
            "oracle" => Ok(Method::Oracle),
            other => Err(Error::Spec(format!(
                "unknown method `{other}` (auto, tilted, oracle)"
            ))),
        }
    }
}

/// Provenance of a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SampleMeta {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub acceptance_rate: Option<f64>,
}

/// `n × d` observations on the copula scale, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    n: usize,
    d: usize,
    data: Vec<f64>,
    pub meta: SampleMeta,
}

impl SampleMatrix {
    pub fn new(n: usize, d: usize, data: Vec<f64>, meta: SampleMeta) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InsufficientData(
                "a sample needs at least one row and column".into(),
            ));
        }
        if data.len() != n * d {
            return Err(Error::DimensionMismatch {
                expected: n * d,
                got: data.len(),
            });
        }
        if let Some(x) = data.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::Domain(format!("sample entry {x} outside [0, 1]")));
        }
        Ok(Self { n, d, data, meta })
    }

    pub fn from_rows(rows: &[Vec<f64>], meta: SampleMeta) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: r.len(),
            });
        }
        Self::new(rows.len(), d, rows.concat(), meta)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.d + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// Columns `cols`, in that order.
    pub fn select(&self, cols: &[usize]) -> Result<SampleMatrix> {
        if let Some(&j) = cols.iter().find(|&&j| j >= self.d) {
            return Err(Error::Index(format!(
                "column {j} of a {}-column sample",
                self.d
            )));
        }
        let data = self
            .rows()
            .flat_map(|r| cols.iter().map(move |&j| r[j]))
            .collect();
        Self::new(self.n, cols.len(), data, self.meta.clone())
    }
}

/// Fills `n` rows of width `d` in parallel, deterministically.
fn fill_rows<F>(n: usize, d: usize, rng: &mut RngStream, f: F) -> Vec<f64>
where
    F: Fn(&mut RngStream, &mut [f64]) + Sync,
{
    let base = rng.next_u64();
    let mut data = vec![0.0; n * d];
    data.par_chunks_mut(CHUNK_ROWS * d)
        .enumerate()
        .for_each(|(k, chunk)| {
            let mut r = RngStream::with_stream(base, k as u64);
            for row in chunk.chunks_exact_mut(d) {
                f(&mut r, row);
            }
        });
    data
}

#[derive(Debug, Clone)]
enum SectorSampler {
    /// Singleton sector: `ψ₀(E / V₀)`.
    Single,
    /// Same generator as the root: `V_s = V₀`.
    SameAsRoot,
    /// Sector frailty independent of `V₀` (independence root).
    Independent(FrailtySampler),
    /// `V_s = V₀^{1/α} S` with `S` positive stable.
    StablePower { alpha: f64 },
    /// Clayton in Clayton: `V_s = V₀^{1/α} S̃` with `S̃` stable tilted by `V₀^{1/α}`.
    TiltedStablePower { alpha: f64 },
}

#[derive(Debug, Clone)]
enum RowSampler {
    Independence,
    Comonotone,
    Archimedean {
        psi: TiltedGenerator,
        frailty: FrailtySampler,
    },
    Nested {
        root: ArchGenerator,
        frailty: FrailtySampler,
        sectors: Vec<(ArchGenerator, usize, SectorSampler)>,
    },
    MarshallOlkin {
        a1: f64,
        a2: f64,
    },
    Survival(Box<RowSampler>),
    Product(Vec<(RowSampler, usize)>),
}

impl RowSampler {
    fn for_model(m: &CopulaModel) -> Result<Self> {
        Ok(match m {
            CopulaModel::Independence { .. } => RowSampler::Independence,
            CopulaModel::Comonotone { .. } => RowSampler::Comonotone,
            CopulaModel::Archimedean { generator, .. } => RowSampler::Archimedean {
                psi: generator.tilt(0.0)?,
                frailty: FrailtySampler::new(generator, 0.0)?,
            },
            CopulaModel::Nested(n) => Self::nested(n)?,
            CopulaModel::MarshallOlkin(mo) => RowSampler::MarshallOlkin {
                a1: mo.alpha1(),
                a2: mo.alpha2(),
            },
            CopulaModel::Survival(inner) => RowSampler::Survival(Box::new(Self::for_model(inner)?)),
            CopulaModel::Product(blocks) => RowSampler::Product(
                blocks
                    .iter()
                    .map(|b| Ok((Self::for_model(b)?, b.dim())))
                    .collect::<Result<Vec<_>>>()?,
            ),
        })
    }

    fn tilted(g: &TiltedGenerator) -> Result<Self> {
        Ok(RowSampler::Archimedean {
            psi: *g,
            frailty: FrailtySampler::new(g.base(), g.tilt_h())?,
        })
    }

    fn nested(n: &NestedArchimedean) -> Result<Self> {
        let root = *n.root();
        let root_indep = root.family() == Family::Independence && root.alpha() == 1.0;
        let mut sectors = Vec::with_capacity(n.sectors().len());
        for (s, sector) in n.sectors().iter().enumerate() {
            let g = sector.generator;
            let kind = if sector.dim == 1 {
                SectorSampler::Single
            } else if root_indep {
                SectorSampler::Independent(FrailtySampler::new(&g, 0.0)?)
            } else if g == root {
                SectorSampler::SameAsRoot
            } else {
                match (root, g) {
                    (ArchGenerator::Base(b0), ArchGenerator::Base(bs))
                        if b0.family() == bs.family() =>
                    {
                        match b0.family() {
                            Family::Gumbel => SectorSampler::StablePower {
                                alpha: b0.theta() / bs.theta(),
                            },
                            Family::Clayton => SectorSampler::TiltedStablePower {
                                alpha: b0.theta() / bs.theta(),
                            },
                            f => {
                                return Err(Error::Unsupported(format!(
                                    "sampling nested {f} copulas with different parameters"
                                )))
                            }
                        }
                    }
                    _ if root.base() == g.base() => SectorSampler::StablePower {
                        alpha: g.alpha() / root.alpha(),
                    },
                    _ => {
                        return Err(Error::Unsupported(format!(
                            "sampling sector {s}: no frailty construction for this generator pair"
                        )))
                    }
                }
            };
            sectors.push((g, sector.dim, kind));
        }
        Ok(RowSampler::Nested {
            root,
            frailty: FrailtySampler::new(&root, 0.0)?,
            sectors,
        })
    }

    fn sample(&self, rng: &mut RngStream, row: &mut [f64]) {
        match self {
            RowSampler::Independence => row.iter_mut().for_each(|x| *x = open01(rng)),
            RowSampler::Comonotone => {
                let u = open01(rng);
                row.iter_mut().for_each(|x| *x = u);
            }
            RowSampler::Archimedean { psi, frailty } => {
                let v = frailty.sample(rng);
                row.iter_mut().for_each(|x| *x = psi.psi(exp1(rng) / v));
            }
            RowSampler::Nested {
                root,
                frailty,
                sectors,
            } => {
                let v0 = frailty.sample(rng);
                let mut offset = 0;
                for (g, d, kind) in sectors {
                    let out = &mut row[offset..offset + d];
                    offset += d;
                    let vs = match kind {
                        SectorSampler::Single => {
                            out[0] = root.psi(exp1(rng) / v0);
                            continue;
                        }
                        SectorSampler::SameAsRoot => v0,
                        SectorSampler::Independent(f) => f.sample(rng),
                        SectorSampler::StablePower { alpha } => {
                            v0.powf(1.0 / alpha) * stable(*alpha, rng)
                        }
                        SectorSampler::TiltedStablePower { alpha } => {
                            let scale = v0.powf(1.0 / alpha);
                            scale * tilted_stable(*alpha, scale, rng).value
                        }
                    };
                    out.iter_mut().for_each(|x| *x = g.psi(exp1(rng) / vs));
                }
            }
            RowSampler::MarshallOlkin { a1, a2 } => {
                let (v1, v2, v12) = (open01(rng), open01(rng), open01(rng));
                row[0] = v1.powf(1.0 / (1.0 - a1)).max(v12.powf(1.0 / a1));
                row[1] = v2.powf(1.0 / (1.0 - a2)).max(v12.powf(1.0 / a2));
            }
            RowSampler::Survival(inner) => {
                inner.sample(rng, row);
                row.iter_mut().for_each(|x| *x = 1.0 - *x);
            }
            RowSampler::Product(blocks) => {
                let mut offset = 0;
                for (b, d) in blocks {
                    b.sample(rng, &mut row[offset..offset + d]);
                    offset += d;
                }
            }
        }
    }
}

fn clamp_unit(data: &mut [f64]) {
    data.iter_mut().for_each(|x| *x = x.clamp(0.0, 1.0));
}

fn run(sampler: &RowSampler, n: usize, d: usize, rng: &mut RngStream) -> Vec<f64> {
    let mut data = fill_rows(n, d, rng, |r, row| sampler.sample(r, row));
    clamp_unit(&mut data);
    data
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("sample size must be at least 1".into()));
    }
    Ok(())
}

/// `n` draws from the (untruncated) model.
pub fn sample_model(m: &CopulaModel, n: usize, rng: &mut RngStream) -> Result<SampleMatrix> {
    check_n(n)?;
    let sampler = RowSampler::for_model(m)?;
    let meta = SampleMeta {
        model: Some(ModelSpec::from_model(m)),
        seed: Some(rng.seed()),
        method: "model".into(),
        ..Default::default()
    };
    SampleMatrix::new(n, m.dim(), run(&sampler, n, m.dim(), rng), meta)
}

/// `U_j = ψ̃(E_j / V)` with `V` from the tilted frailty. Pass a zero tilt for
/// the plain Archimedean copula.
pub fn sample_archimedean(
    g: &TiltedGenerator,
    d: usize,
    n: usize,
    rng: &mut RngStream,
) -> Result<SampleMatrix> {
    check_n(n)?;
    if d == 0 {
        return Err(Error::Domain("dimension must be at least 1".into()));
    }
    let sampler = RowSampler::tilted(g)?;
    let meta = SampleMeta {
        seed: Some(rng.seed()),
        method: "tilted".into(),
        ..Default::default()
    };
    SampleMatrix::new(n, d, run(&sampler, n, d, rng), meta)
}

/// Nested Archimedean sampling through the hierarchical frailty construction.
pub fn sample_nested(m: &NestedArchimedean, n: usize, rng: &mut RngStream) -> Result<SampleMatrix> {
    sample_model(&CopulaModel::Nested(m.clone()), n, rng)
}

/// Rejection sample from `U | U ≤ t` with its bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSample {
    /// Accepted rows, on the original scale (inside `[0, t]`).
    pub raw: SampleMatrix,
    pub tries: u64,
    pub acceptance_rate: f64,
}

/// Default cap on rejection proposals: `100 n / C(t)`.
pub fn default_max_tries(n: usize, t: &TruncationPoint) -> u64 {
    (100.0 * n as f64 / t.c_of_t()).min(u64::MAX as f64).ceil() as u64
}

/// Repeats sampling `U ~ C` until `U ≤ t`, `n` times.
pub fn oracle_sample(
    m: &CopulaModel,
    t: &TruncationPoint,
    n: usize,
    rng: &mut RngStream,
    max_tries: Option<u64>,
) -> Result<OracleSample> {
    check_n(n)?;
    if t.dim() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            got: t.dim(),
        });
    }
    let max_tries = max_tries.unwrap_or_else(|| default_max_tries(n, t));
    let sampler = RowSampler::for_model(m)?;
    let d = m.dim();
    let c = t.c_of_t();
    let tv = t.t();
    let seed = rng.seed();
    let mut out = Vec::with_capacity(n * d);
    let mut accepted = 0usize;
    let mut tries: u64 = 0;
    while accepted < n {
        let remaining = (n - accepted) as f64;
        let budget = (max_tries - tries) as f64;
        let batch = ((remaining / c) * 1.1 + 256.0)
            .min(budget)
            .min((1 << 20) as f64)
            .max(1.0) as usize;
        let data = run(&sampler, batch, d, rng);
        for row in data.chunks_exact(d) {
            tries += 1;
            if row.iter().zip(tv).all(|(x, t)| x <= t) {
                out.extend_from_slice(row);
                accepted += 1;
                if accepted == n {
                    break;
                }
            }
        }
        if accepted < n && tries >= max_tries {
            return Err(Error::TooManyTries {
                max_tries,
                accepted,
                rate: accepted as f64 / tries as f64,
                expected: c,
            });
        }
    }
    let rate = n as f64 / tries as f64;
    let meta = SampleMeta {
        model: Some(ModelSpec::from_model(m)),
        t: Some(tv.to_vec()),
        seed: Some(seed),
        method: "oracle-raw".into(),
        acceptance_rate: Some(rate),
    };
    Ok(OracleSample {
        raw: SampleMatrix::new(n, d, out, meta)?,
        tries,
        acceptance_rate: rate,
    })
}

/// Maps each column through `F_{t,j}(x) = C(x; t₋ⱼ) / C(t)`.
pub fn transform_margins(
    raw: &SampleMatrix,
    m: &CopulaModel,
    t: &TruncationPoint,
) -> Result<SampleMatrix> {
    if raw.d() != m.dim() || t.dim() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            got: raw.d(),
        });
    }
    let tv = t.t();
    for (i, row) in raw.rows().enumerate() {
        if let Some(j) = (0..row.len()).find(|&j| row[j] > tv[j] + 1e-12) {
            return Err(Error::Domain(format!(
                "row {i} has coordinate {j} = {} above t_j = {}",
                row[j], tv[j]
            )));
        }
    }
    let c = t.c_of_t();
    let d = raw.d();
    let mut data = raw.data().to_vec();
    data.par_chunks_mut(d).for_each(|row| {
        for j in 0..d {
            row[j] = (m.section_unchecked(j, row[j].min(tv[j]), tv) / c).clamp(0.0, 1.0);
        }
    });
    let mut meta = raw.meta.clone();
    meta.method = match meta.method.as_str() {
        "oracle-raw" => "oracle".into(),
        other => format!("{other}+margins"),
    };
    SampleMatrix::new(raw.n(), d, data, meta)
}

/// Whether [`Method::Tilted`] is available for this truncation.
pub fn has_direct_sampler(tc: &TruncatedCopula) -> bool {
    match tc.form() {
        TruncatedForm::Independence(_)
        | TruncatedForm::Comonotone(_)
        | TruncatedForm::Tilted { .. } => true,
        TruncatedForm::Blocks(parts) => parts.iter().all(has_direct_sampler),
        _ => false,
    }
}

/// Samples from a truncated copula by the best available route.
pub fn sample_truncated(
    tc: &TruncatedCopula,
    n: usize,
    rng: &mut RngStream,
) -> Result<SampleMatrix> {
    sample_truncated_with(tc, n, rng, Method::Auto)
}

pub fn sample_truncated_with(
    tc: &TruncatedCopula,
    n: usize,
    rng: &mut RngStream,
    method: Method,
) -> Result<SampleMatrix> {
    check_n(n)?;
    let seed = rng.seed();
    let meta = |method: &str, rate: Option<f64>| SampleMeta {
        model: Some(ModelSpec::from_model(tc.source())),
        t: Some(tc.truncation().t().to_vec()),
        seed: Some(seed),
        method: method.into(),
        acceptance_rate: rate,
    };
    let d = tc.dim();
    let oracle = |rng: &mut RngStream| -> Result<SampleMatrix> {
        let o = oracle_sample(tc.source(), tc.truncation(), n, rng, None)?;
        let mut s = transform_margins(&o.raw, tc.source(), tc.truncation())?;
        s.meta = meta("oracle", Some(o.acceptance_rate));
        Ok(s)
    };
    if method == Method::Oracle {
        return oracle(rng);
    }
    let direct = match tc.form() {
        TruncatedForm::Independence(_) => Some(run(&RowSampler::Independence, n, d, rng)),
        TruncatedForm::Comonotone(_) => Some(run(&RowSampler::Comonotone, n, d, rng)),
        TruncatedForm::Tilted { generator, .. } => {
            Some(run(&RowSampler::tilted(generator)?, n, d, rng))
        }
        TruncatedForm::Blocks(parts)
            if method == Method::Tilted && !parts.iter().all(has_direct_sampler) =>
        {
            None
        }
        TruncatedForm::Blocks(parts) => {
            let mut cols: Vec<SampleMatrix> = Vec::with_capacity(parts.len());
            for p in parts {
                cols.push(sample_truncated_with(p, n, rng, method)?);
            }
            let mut data = Vec::with_capacity(n * d);
            for i in 0..n {
                for c in &cols {
                    data.extend_from_slice(c.row(i));
                }
            }
            Some(data)
        }
        _ => None,
    };
    match (direct, method) {
        (Some(data), _) => SampleMatrix::new(n, d, data, meta("tilted", None)),
        (None, Method::Tilted) => Err(Error::Unsupported(
            "no direct sampler for this truncated model; use the oracle method".into(),
        )),
        (None, _) => oracle(rng),
    }
}

/// Columnwise average ranks scaled by `1/(n + 1)`.
pub fn pseudo_observations(data: &SampleMatrix) -> Result<SampleMatrix> {
    let (n, d) = (data.n(), data.d());
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "pseudo-observations need n ≥ 2, got {n}"
        )));
    }
    let mut out = vec![0.0; n * d];
    for j in 0..d {
        let col = data.column(j);
        let ranks = average_ranks(&col);
        for i in 0..n {
            out[i * d + j] = ranks[i] / (n as f64 + 1.0);
        }
    }
    let mut meta = data.meta.clone();
    meta.method = format!("{}+pseudo", meta.method);
    SampleMatrix::new(n, d, out, meta)
}

/// Ranks `1..=n` with ties replaced by their average.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut k = i;
        while k + 1 < n && x[idx[k + 1]] == x[idx[i]] {
            k += 1;
        }
        let r = (i + k) as f64 / 2.0 + 1.0;
        for &p in &idx[i..=k] {
            ranks[p] = r;
        }
        i = k + 1;
    }
    ranks
}

/// Writes `u1,…,ud` and one row per observation with 17 significant digits.
pub fn write_csv<W: Write>(mut w: W, s: &SampleMatrix) -> std::io::Result<()> {
    let header: Vec<String> = (1..=s.d()).map(|j| format!("u{j}")).collect();
    writeln!(w, "{}", header.join(","))?;
    let mut line = String::new();
    for row in s.rows() {
        line.clear();
        for (j, x) in row.iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&format!("{x:.16e}"));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Sidecar path `<out>.meta.json`.
pub fn meta_path(out: &Path) -> PathBuf {
    let mut p = out.as_os_str().to_owned();
    p.push(".meta.json");
    PathBuf::from(p)
}

/// Writes the CSV and its metadata sidecar.
pub fn write_sample_files(out: &Path, s: &SampleMatrix) -> Result<()> {
    let io = |e: std::io::Error| Error::Numeric(format!("writing {}: {e}", out.display()));
    let f = fs::File::create(out).map_err(io)?;
    let mut w = BufWriter::new(f);
    write_csv(&mut w, s).map_err(io)?;
    w.flush().map_err(io)?;
    let meta = serde_json::to_string_pretty(&s.meta).expect("metadata always serializes");
    fs::write(meta_path(out), meta + "\n").map_err(io)?;
    Ok(())
}

/// Reads a CSV with a header line and numeric columns in `[0, 1]`.
pub fn read_csv(path: &Path) -> Result<SampleMatrix> {
    let f = fs::File::open(path)
        .map_err(|e| Error::Spec(format!("reading {}: {e}", path.display())))?;
    let mut lines = BufReader::new(f).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InsufficientData(format!("{} is empty", path.display())))?
        .map_err(|e| Error::Spec(e.to_string()))?;
    let d = header.split(',').count();
    let mut data = Vec::new();
    let mut n = 0;
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::Spec(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Spec(format!("line {}: {e}", i + 2)))?;
        if row.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: row.len(),
            });
        }
        data.extend(row);
        n += 1;
    }
    let meta = SampleMeta {
        method: "data".into(),
        ..Default::default()
    };
    SampleMatrix::new(n, d, data, meta)
}
