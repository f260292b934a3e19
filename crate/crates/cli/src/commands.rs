use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde_json::{json, Value};
use trunca::analytics::{
    empirical_kendall_tau_se, empirical_tail_dep, kendall_dist_truncated,
    tail_dep_exchangeable_equal_t, tail_dep_tilted, tail_dep_tilted_numeric, TailDepReport,
};
use trunca::copulas::{truncate_numeric, TruncatedForm};
use trunca::gof::{default_grid, empirical_copula_distance, ks_test};
use trunca::sampling::{
    has_direct_sampler, oracle_sample, read_csv, sample_truncated_with, write_csv,
    write_sample_files,
};
use trunca::spec::{parse_model, parse_point};
use trunca::{
    truncate_general, Copula, CopulaModel, Method, Psi, RngStream, SampleMatrix, TruncatedCopula,
    TruncationPoint,
};

use crate::{CliError, EvalArgs, KendallArgs, OracleArgs, SampleArgs, TaildepArgs, TruncEvalArgs};

type CliResult<T = ()> = Result<T, CliError>;

pub fn load_model(path: &Path) -> CliResult<CopulaModel> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("reading {}: {e}", path.display())))?;
    Ok(parse_model(&text)?)
}

pub fn truncation_point(m: &CopulaModel, t: Option<&str>) -> CliResult<TruncationPoint> {
    match t {
        None => Ok(TruncationPoint::ones(m)),
        Some(s) => {
            let t = parse_point(s)?;
            if let Some(x) = t.iter().find(|&&x| !(x > 0.0 && x <= 1.0)) {
                return Err(CliError::Config(format!(
                    "truncation point coordinate {x} outside (0, 1]"
                )));
            }
            Ok(TruncationPoint::new(m, &t)?)
        }
    }
}

pub fn print_json(v: &Value) -> CliResult {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)
        .map_err(io::Error::from)
        .and_then(|_| writeln!(out))
        .map_err(|e| CliError::Runtime(format!("writing output: {e}")))
}

/// Points `a,b;c,d` or a JSON array of arrays, each of length `d`.
fn parse_points(s: &str, d: usize) -> CliResult<Vec<Vec<f64>>> {
    let s = s.trim();
    let pts: Vec<Vec<f64>> = if s.starts_with("[[") {
        serde_json::from_str(s)
            .map_err(|e| CliError::Config(format!("cannot parse points: {e}")))?
    } else {
        s.split(';')
            .filter(|p| !p.trim().is_empty())
            .map(parse_point)
            .collect::<Result<_, _>>()?
    };
    if pts.is_empty() {
        return Err(CliError::Config("no evaluation points given".into()));
    }
    if let Some(p) = pts.iter().find(|p| p.len() != d) {
        return Err(CliError::Config(format!(
            "point {p:?} does not have {d} coordinates"
        )));
    }
    Ok(pts)
}

/// The grid `{0, 1/k, …, 1}^d` in row-major order.
fn grid_points(k: usize, d: usize) -> CliResult<Vec<Vec<f64>>> {
    let side = k + 1;
    let total = side
        .checked_pow(d as u32)
        .filter(|&c| k > 0 && c <= 1_000_000);
    let Some(total) = total else {
        return Err(CliError::Config(format!(
            "grid of size {k} in dimension {d} is too large or empty"
        )));
    };
    Ok((0..total)
        .map(|mut i| {
            let mut p = vec![0.0; d];
            for j in (0..d).rev() {
                p[j] = (i % side) as f64 / k as f64;
                i /= side;
            }
            p
        })
        .collect())
}

fn eval_points(
    u: Option<&str>,
    grid: Option<usize>,
    d: usize,
    default_grid: Option<usize>,
) -> CliResult<Vec<Vec<f64>>> {
    match (u, grid.or(default_grid)) {
        (Some(u), _) => parse_points(u, d),
        (None, Some(k)) => grid_points(k, d),
        (None, None) => Err(CliError::Config(
            "give evaluation points with --u or --grid".into(),
        )),
    }
}

fn write_grid_csv(path: &Path, points: &[Vec<f64>], columns: &[(&str, &[f64])]) -> CliResult {
    let io_err = |e: io::Error| CliError::Runtime(format!("writing {}: {e}", path.display()));
    let mut w = BufWriter::new(fs::File::create(path).map_err(io_err)?);
    let d = points.first().map_or(0, Vec::len);
    let mut header: Vec<String> = (1..=d).map(|j| format!("u{j}")).collect();
    header.extend(columns.iter().map(|c| c.0.to_string()));
    writeln!(w, "{}", header.join(",")).map_err(io_err)?;
    for (i, p) in points.iter().enumerate() {
        let mut line: Vec<String> = p.iter().map(|x| format!("{x:.16e}")).collect();
        line.extend(columns.iter().map(|c| format!("{:.16e}", c.1[i])));
        writeln!(w, "{}", line.join(",")).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Maps a sample of `C_t` back to `U | U ≤ t` through the inverse margins.
fn to_original_scale(
    s: &SampleMatrix,
    m: &CopulaModel,
    t: &TruncationPoint,
) -> CliResult<SampleMatrix> {
    let c = t.c_of_t();
    let d = s.d();
    let mut data = Vec::with_capacity(s.n() * d);
    for row in s.rows() {
        for (j, &u) in row.iter().enumerate() {
            data.push(m.margin_section_inv(j, u * c, t)?);
        }
    }
    let mut meta = s.meta.clone();
    meta.method = format!("{}-raw", meta.method);
    Ok(SampleMatrix::new(s.n(), d, data, meta)?)
}

pub fn draw(
    m: &CopulaModel,
    t: &TruncationPoint,
    tc: &TruncatedCopula,
    n: usize,
    seed: u64,
    method: Method,
    raw: bool,
) -> CliResult<SampleMatrix> {
    let mut rng = RngStream::new(seed);
    let oracle_route =
        method == Method::Oracle || (method == Method::Auto && !has_direct_sampler(tc));
    if raw && oracle_route {
        return Ok(oracle_sample(m, t, n, &mut rng, None)?.raw);
    }
    let s = sample_truncated_with(tc, n, &mut rng, method)?;
    if raw {
        to_original_scale(&s, m, t)
    } else {
        Ok(s)
    }
}

pub fn sample(a: &SampleArgs) -> CliResult {
    let m = load_model(&a.model.model)?;
    let t = truncation_point(&m, a.model.t.as_deref())?;
    let tc = truncate_general(&m, &t)?;
    let s = draw(&m, &t, &tc, a.n, a.seed, a.method, a.raw)?;
    match &a.out {
        Some(out) => {
            write_sample_files(out, &s)?;
            print_json(&json!({
                "out": out,
                "n": s.n(),
                "d": s.d(),
                "method": s.meta.method,
                "acceptance_rate": s.meta.acceptance_rate,
            }))
        }
        None => write_csv(io::stdout().lock(), &s)
            .map_err(|e| CliError::Runtime(format!("writing output: {e}"))),
    }
}

pub fn cdf(a: &EvalArgs) -> CliResult {
    let m = load_model(&a.model)?;
    let points = eval_points(a.u.as_deref(), a.grid, m.dim(), None)?;
    let values = points
        .iter()
        .map(|p| m.cdf(p))
        .collect::<Result<Vec<_>, _>>()?;
    match &a.out {
        Some(out) => write_grid_csv(out, &points, &[("value", &values)]),
        None => print_json(&json!({ "points": points, "values": values })),
    }
}

fn form_name(f: &TruncatedForm) -> &'static str {
    match f {
        TruncatedForm::Independence(_) => "independence",
        TruncatedForm::Comonotone(_) => "comonotone",
        TruncatedForm::Tilted { .. } => "tilted-archimedean",
        TruncatedForm::Nested(_) => "nested",
        TruncatedForm::MarshallOlkin(_) => "marshall-olkin",
        TruncatedForm::Blocks(_) => "product",
        TruncatedForm::Componentwise { bisection: true } => "componentwise-bisection",
        TruncatedForm::Componentwise { bisection: false } => "componentwise",
    }
}

pub fn truncate_eval(a: &TruncEvalArgs) -> CliResult {
    let m = load_model(&a.model.model)?;
    let t = truncation_point(&m, a.model.t.as_deref())?;
    let tc = truncate_general(&m, &t)?;
    let fallback = truncate_numeric(&m, &t)?;
    let points = eval_points(a.u.as_deref(), a.grid, m.dim(), Some(10))?;
    let mut values = Vec::with_capacity(points.len());
    let mut check = Vec::with_capacity(points.len());
    for p in &points {
        values.push(tc.cdf(p)?);
        check.push(fallback.cdf(p)?);
    }
    let max_diff = values
        .iter()
        .zip(&check)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if let Some(out) = &a.out {
        write_grid_csv(out, &points, &[("value", &values), ("fallback", &check)])?;
    }
    let mut report = json!({
        "t": t.t(),
        "c_of_t": t.c_of_t(),
        "form": form_name(tc.form()),
        "closed_form": tc.is_closed_form(),
        "max_abs_diff_vs_fallback": max_diff,
    });
    if let Some(g) = tc.tilted_generator() {
        report["tilt"] = json!(g.tilt_h());
    }
    if a.out.is_none() {
        report["points"] = json!(points);
        report["values"] = json!(values);
        report["fallback_values"] = json!(check);
    }
    print_json(&report)
}

fn report_json(r: &TailDepReport) -> Value {
    serde_json::to_value(r).expect("reports always serialize")
}

fn analytic_tail(
    m: &CopulaModel,
    t: &TruncationPoint,
) -> CliResult<Option<(TailDepReport, Option<TailDepReport>)>> {
    if let CopulaModel::Archimedean { generator, dim: 2 } = m {
        let h = generator.psi_inv(t.c_of_t());
        return Ok(Some((
            tail_dep_tilted(generator, h)?,
            Some(tail_dep_tilted_numeric(generator, h)?),
        )));
    }
    let tv = t.t();
    if m.dim() == 2 && m.is_exchangeable() && tv[0] == tv[1] {
        return Ok(Some((tail_dep_exchangeable_equal_t(m, tv[0])?, None)));
    }
    Ok(None)
}

pub fn taildep(a: &TaildepArgs) -> CliResult {
    let mut report = json!({});
    let mut sample = None;
    if let Some(path) = &a.model {
        let m = load_model(path)?;
        if m.dim() != 2 {
            return Err(CliError::Config(format!(
                "tail dependence needs a bivariate model, got d = {}",
                m.dim()
            )));
        }
        let t = truncation_point(&m, a.t.as_deref())?;
        report["t"] = json!(t.t());
        match analytic_tail(&m, &t)? {
            Some((r, cross)) => {
                for (k, v) in report_json(&r).as_object().expect("object").iter() {
                    report[k] = v.clone();
                }
                if let Some(c) = cross {
                    report["cross_check"] = report_json(&c);
                }
            }
            None if a.n.is_none() && a.data.is_none() => {
                return Err(CliError::Config(
                    "no analytic tail dependence for this model and truncation point; pass --n for an empirical estimate"
                        .into(),
                ))
            }
            None => {}
        }
        if let (Some(n), None) = (a.n, &a.data) {
            let tc = truncate_general(&m, &t)?;
            sample = Some(draw(&m, &t, &tc, n, a.seed, Method::Auto, false)?);
        }
    } else if a.data.is_none() {
        return Err(CliError::Config("give --model or --data".into()));
    }
    if let Some(path) = &a.data {
        sample = Some(read_csv(path)?);
    }
    if let Some(s) = sample {
        let e = empirical_tail_dep(&s, a.q, a.seed)?;
        if report.get("lambda_lower").is_none() {
            for (k, v) in report_json(&e).as_object().expect("object").iter() {
                report[k] = v.clone();
            }
        }
        report["empirical"] = report_json(&e);
        report["q"] = json!(a.q);
    }
    print_json(&report)
}

fn tau_matrix(s: &SampleMatrix) -> CliResult<Value> {
    let d = s.d();
    let mut tau = vec![vec![1.0; d]; d];
    let mut se = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in i + 1..d {
            let k = empirical_kendall_tau_se(s, i, j)?;
            (tau[i][j], tau[j][i]) = (k.tau, k.tau);
            (se[i][j], se[j][i]) = (k.se, k.se);
        }
    }
    Ok(json!({ "n": s.n(), "tau": tau, "se": se }))
}

pub fn kendall(a: &KendallArgs) -> CliResult {
    if let Some(path) = &a.data {
        return print_json(&tau_matrix(&read_csv(path)?)?);
    }
    let path = a
        .model
        .as_ref()
        .expect("clap requires --model without --data");
    let m = load_model(path)?;
    let t = truncation_point(&m, a.t.as_deref())?;
    let CopulaModel::Archimedean { generator, .. } = &m else {
        return Err(CliError::Config(
            "the Kendall distribution is available for Archimedean models only".into(),
        ));
    };
    let us = match &a.u {
        Some(u) => parse_point(u)?,
        None => (1..20).map(|k| k as f64 / 20.0).collect(),
    };
    let values = us
        .iter()
        .map(|&u| kendall_dist_truncated(generator, &t, u))
        .collect::<Result<Vec<_>, _>>()?;
    let mut report = json!({ "t": t.t(), "c_of_t": t.c_of_t(), "u": us, "values": values });
    if let Some(n) = a.n {
        let tc = truncate_general(&m, &t)?;
        let s = draw(&m, &t, &tc, n, a.seed, Method::Auto, false)?;
        let w: Vec<f64> = s.rows().map(|r| tc.cdf_unchecked(r)).collect();
        let ks = ks_test(&w, |u| {
            kendall_dist_truncated(generator, &t, u.clamp(0.0, 1.0)).unwrap_or(f64::NAN)
        })?;
        report["ks"] = json!({ "n": n, "statistic": ks.statistic, "p_value": ks.p_value });
        report["sample_tau"] = tau_matrix(&s)?;
    }
    print_json(&report)
}

pub fn oracle_compare(a: &OracleArgs) -> CliResult {
    let m = load_model(&a.model.model)?;
    let t = truncation_point(&m, a.model.t.as_deref())?;
    let tc = truncate_general(&m, &t)?;
    if !has_direct_sampler(&tc) {
        return Err(CliError::Config(
            "this truncation has no fast sampler; sampling already goes through the oracle".into(),
        ));
    }
    if a.threshold.is_nan() || a.threshold < 0.0 {
        return Err(CliError::Config(format!(
            "threshold must be non-negative, got {}",
            a.threshold
        )));
    }
    let fast = sample_truncated_with(
        &tc,
        a.n,
        &mut RngStream::with_stream(a.seed, 0),
        Method::Tilted,
    )?;
    let oracle = sample_truncated_with(
        &tc,
        a.n,
        &mut RngStream::with_stream(a.seed, 1),
        Method::Oracle,
    )?;
    let k = default_grid(m.dim());
    let distance = empirical_copula_distance(&fast, &oracle, k)?;
    print_json(&json!({
        "t": t.t(),
        "n": a.n,
        "grid": k,
        "distance": distance,
        "threshold": a.threshold,
        "pass": distance <= a.threshold,
        "acceptance_rate": oracle.meta.acceptance_rate,
        "expected_acceptance_rate": t.c_of_t(),
    }))
}
