//! Acceptance criteria, one check per criterion. Runs without the libtest
//! harness so that every criterion prints exactly one PASS/FAIL line, with
//! its runtime against the budget.
//!
//! Reference values come from closed forms written out here independently of
//! the library (family CDFs, generators, frailty Laplace transforms, the
//! tilted Sibuya pmf), from a separate root finder, or from known constants.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::Rng;
use trunca::analytics::{
    empirical_kendall_tau_se, empirical_tail_dep, kendall_dist_truncated,
    tail_dep_exchangeable_equal_t, tail_dep_tilted, tail_dep_tilted_numeric,
};
use trunca::copulas::{ev_scaling_check, truncate_mo, truncate_numeric, MarshallOlkin, Sector};
use trunca::frailty::{sample_tilted_sibuya_with, FrailtySampler, SibuyaBranch};
use trunca::gof::{
    chi_square, default_grid, empirical_copula_distance, ks_test, merge_small_cells,
};
use trunca::sampling::{has_direct_sampler, sample_truncated, sample_truncated_with};
use trunca::{
    outer_power, truncate_general, ArchGenerator, Copula, CopulaModel, Family, Generator, Method,
    Psi, RngStream, TruncatedCopula, TruncationPoint,
};

type Outcome = Result<String, String>;

type Criterion = (&'static str, u64, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

// Independent closed forms of the families used as references.

fn clayton_cdf(theta: f64, u: &[f64]) -> f64 {
    if u.iter().any(|&x| x <= 0.0) {
        return 0.0;
    }
    let s: f64 = u.iter().map(|x| x.powf(-theta) - 1.0).sum();
    (1.0 + s).powf(-1.0 / theta)
}

fn amh_cdf(theta: f64, u: f64, v: f64) -> f64 {
    u * v / (1.0 - theta * (1.0 - u) * (1.0 - v))
}

fn frank_cdf(theta: f64, u: f64, v: f64) -> f64 {
    -((1.0 + (-theta * u).exp_m1() * (-theta * v).exp_m1() / (-theta).exp_m1()).ln()) / theta
}

fn psi(f: Family, theta: f64, s: f64) -> f64 {
    match f {
        Family::Clayton => (1.0 + s).powf(-1.0 / theta),
        Family::Amh => (1.0 - theta) / (s.exp() - theta),
        Family::Frank => -(-(1.0 - (-theta).exp()) * (-s).exp()).ln_1p() / theta,
        Family::Gumbel => (-s.powf(1.0 / theta)).exp(),
        Family::Joe => 1.0 - (-(-s).exp_m1()).powf(1.0 / theta),
        Family::Independence => (-s).exp(),
    }
}

fn psi_inv(f: Family, theta: f64, x: f64) -> f64 {
    match f {
        Family::Clayton => x.powf(-theta) - 1.0,
        Family::Amh => ((1.0 - theta) / x + theta).ln(),
        Family::Frank => -((-theta * x).exp_m1() / (-theta).exp_m1()).ln(),
        Family::Gumbel => (-x.ln()).powf(theta),
        Family::Joe => -(-(1.0 - x).powf(theta)).ln_1p(),
        Family::Independence => -x.ln(),
    }
}

fn unit_grid(k: usize) -> Vec<[f64; 2]> {
    (0..k)
        .flat_map(|i| {
            (0..k).map(move |j| [(i as f64 + 0.5) / k as f64, (j as f64 + 0.5) / k as f64])
        })
        .collect()
}

fn random_points(rng: &mut RngStream, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| rng.random::<f64>()).collect())
        .collect()
}

fn truncated(m: &CopulaModel, t: &[f64]) -> Result<(TruncationPoint, TruncatedCopula), String> {
    let tp = ok(TruncationPoint::new(m, t))?;
    let tc = ok(truncate_general(m, &tp))?;
    Ok((tp, tc))
}

/// Criterion 1: Truncated Clayton, AMH and Frank copulas are again Clayton(θ), AMH(e^{−h}θ)
/// and Frank(θ C(t)).
fn closure_identities() -> Outcome {
    let mut rng = RngStream::new(101);
    let pts = unit_grid(32);
    let s_grid: Vec<f64> = (0..200).map(|k| 0.05 * k as f64).collect();
    let mut worst: f64 = 0.0;
    for f in [Family::Clayton, Family::Amh, Family::Frank] {
        for _ in 0..5 {
            let theta = match f {
                Family::Clayton => rng.random_range(0.2..8.0),
                Family::Amh => rng.random_range(0.05..0.95),
                _ => rng.random_range(0.5..20.0),
            };
            let t = [rng.random_range(0.05..1.0), rng.random_range(0.05..1.0)];
            let m = ok(CopulaModel::archimedean(ok(Generator::new(f, theta))?, 2))?;
            let (tp, tc) = truncated(&m, &t)?;
            let c = psi(f, theta, psi_inv(f, theta, t[0]) + psi_inv(f, theta, t[1]));
            ensure((c - tp.c_of_t()).abs() <= 1e-12, || {
                format!("{f:?} C(t) {c} vs {}", tp.c_of_t())
            })?;
            let h = psi_inv(f, theta, c);
            let g = tc.tilted_generator().ok_or("no tilted generator")?;
            for &s in &s_grid {
                let expected = match f {
                    Family::Clayton => (1.0 + s / (1.0 + h)).powf(-1.0 / theta),
                    Family::Amh => psi(f, (-h).exp() * theta, s),
                    _ => psi(f, theta * c, s),
                };
                worst = worst.max((g.psi(s) - expected).abs());
            }
            for u in &pts {
                let expected = match f {
                    Family::Clayton => clayton_cdf(theta, u),
                    Family::Amh => amh_cdf((-h).exp() * theta, u[0], u[1]),
                    _ => frank_cdf(theta * c, u[0], u[1]),
                };
                worst = worst.max((ok(tc.cdf(u))? - expected).abs());
            }
        }
    }
    ensure(worst <= 1e-10, || {
        format!("max deviation {worst:.3e} > 1e-10")
    })?;
    Ok(format!(
        "max generator/CDF deviation {worst:.2e} over 15 random (theta, t)"
    ))
}

/// Generalized inverse of an increasing `f` on `[0, hi]` by the Illinois
/// variant of regula falsi, as a route independent of the library's bisection.
fn illinois<F: Fn(f64) -> f64>(f: F, y: f64, hi: f64) -> f64 {
    let (mut a, mut b) = (0.0, hi);
    let (mut fa, mut fb) = (f(a) - y, f(b) - y);
    if fa >= 0.0 {
        return 0.0;
    }
    if fb <= 0.0 {
        return hi;
    }
    let mut side = 0;
    for _ in 0..200 {
        let x = (a * fb - b * fa) / (fb - fa);
        let fx = f(x) - y;
        if fx == 0.0 || (b - a).abs() < 1e-15 {
            return x;
        }
        if fx > 0.0 {
            b = x;
            fb = fx;
            if side == 1 {
                fa /= 2.0;
            }
            side = 1;
        } else {
            a = x;
            fa = fx;
            if side == -1 {
                fb /= 2.0;
            }
            side = -1;
        }
    }
    (a + b) / 2.0
}

/// `C_t(u)` from the definition with section inverses by [`illinois`].
fn truncated_by_definition(m: &CopulaModel, t: &[f64], u: &[f64]) -> f64 {
    let c = m.cdf_unchecked(t);
    let x: Vec<f64> = (0..t.len())
        .map(|j| {
            illinois(
                |x| {
                    let mut v = t.to_vec();
                    v[j] = x;
                    m.cdf_unchecked(&v)
                },
                c * u[j],
                t[j],
            )
        })
        .collect();
    m.cdf_unchecked(&x) / c
}

/// Criterion 2: Closed-form truncations agree with the bisection fallback.
fn general_formula() -> Outcome {
    let g = |f, th| Generator::new(f, th).unwrap();
    let nested_clayton = CopulaModel::nested(
        g(Family::Clayton, 2.0),
        vec![
            Sector::new(g(Family::Clayton, 3.0), 2),
            Sector::new(g(Family::Clayton, 6.0), 2),
        ],
    );
    let nested_gumbel = CopulaModel::nested(
        g(Family::Gumbel, 2.0),
        vec![
            Sector::new(g(Family::Gumbel, 4.0), 1),
            Sector::new(g(Family::Gumbel, 4.0), 2),
        ],
    );
    let survival = CopulaModel::survival(ok(CopulaModel::archimedean(g(Family::Gumbel, 2.0), 2))?);
    let cases: Vec<(&str, Result<CopulaModel, trunca::Error>, Vec<f64>)> = vec![
        (
            "independence",
            CopulaModel::independence(3),
            vec![0.3, 0.6, 0.9],
        ),
        ("comonotone", CopulaModel::comonotone(2), vec![0.4, 0.7]),
        (
            "clayton",
            CopulaModel::archimedean(g(Family::Clayton, 2.0), 3),
            vec![0.5, 0.7, 0.9],
        ),
        (
            "amh",
            CopulaModel::archimedean(g(Family::Amh, 0.7), 2),
            vec![0.3, 0.8],
        ),
        (
            "frank",
            CopulaModel::archimedean(g(Family::Frank, 5.0), 3),
            vec![0.6, 0.4, 0.8],
        ),
        (
            "gumbel",
            CopulaModel::archimedean(g(Family::Gumbel, 2.0), 2),
            vec![0.6, 0.4],
        ),
        (
            "joe",
            CopulaModel::archimedean(g(Family::Joe, 2.0), 3),
            vec![0.7, 0.5, 0.9],
        ),
        (
            "outer-power clayton",
            CopulaModel::archimedean(ok(outer_power(g(Family::Clayton, 2.0), 0.6))?, 2),
            vec![0.5, 0.6],
        ),
        ("nested clayton", nested_clayton, vec![0.4, 0.7, 0.5, 0.9]),
        ("nested gumbel", nested_gumbel, vec![0.2, 0.5, 0.5]),
        (
            "mo(0.2,0.7)",
            CopulaModel::marshall_olkin(0.2, 0.7),
            vec![0.5, 0.8],
        ),
        (
            "mo(0.2,0.7) case two",
            CopulaModel::marshall_olkin(0.2, 0.7),
            vec![0.8, 0.5],
        ),
        ("survival gumbel", survival, vec![0.5, 0.3]),
    ];
    let mut rng = RngStream::new(202);
    let mut worst: f64 = 0.0;
    let mut worst_name = "";
    for (name, m, t) in cases {
        let m = ok(m)?;
        let (tp, tc) = truncated(&m, &t)?;
        let survival = matches!(m, CopulaModel::Survival(_));
        ensure(tc.is_closed_form() || survival, || {
            format!("{name}: no closed form")
        })?;
        let fallback = ok(truncate_numeric(&m, &tp))?;
        for u in random_points(&mut rng, 1000, m.dim()) {
            let a = ok(tc.cdf(&u))?;
            // The survival truncation is itself numerical, so it is checked
            // against a different root finder.
            let b = if survival {
                truncated_by_definition(&m, &t, &u)
            } else {
                ok(fallback.cdf(&u))?
            };
            let e = (a - b).abs();
            if e > worst {
                (worst, worst_name) = (e, name);
            }
        }
    }
    ensure(worst <= 1e-9, || {
        format!("{worst_name}: deviation {worst:.3e} > 1e-9")
    })?;
    Ok(format!(
        "13 models, 1000 points each, max deviation {worst:.2e} ({worst_name})"
    ))
}

/// Criterion 3: Fast samplers agree with the rejection oracle.
fn oracle_equivalence() -> Outcome {
    let g = |f, th| Generator::new(f, th).unwrap();
    let n = 100_000;
    let cases: Vec<(&str, CopulaModel, Vec<f64>)> = vec![
        (
            "independence",
            ok(CopulaModel::independence(2))?,
            vec![0.4, 0.7],
        ),
        (
            "comonotone",
            ok(CopulaModel::comonotone(2))?,
            vec![0.4, 0.7],
        ),
        (
            "clayton",
            ok(CopulaModel::archimedean(g(Family::Clayton, 2.0), 2))?,
            vec![0.5, 0.5],
        ),
        (
            "amh",
            ok(CopulaModel::archimedean(g(Family::Amh, 0.7), 2))?,
            vec![0.6, 0.4],
        ),
        (
            "frank",
            ok(CopulaModel::archimedean(g(Family::Frank, 4.0), 2))?,
            vec![0.5, 0.5],
        ),
        (
            "gumbel",
            ok(CopulaModel::archimedean(g(Family::Gumbel, 2.0), 2))?,
            vec![0.7, 0.5],
        ),
        (
            "joe",
            ok(CopulaModel::archimedean(g(Family::Joe, 2.0), 2))?,
            vec![0.7, 0.6],
        ),
        (
            "clayton d=3",
            ok(CopulaModel::archimedean(g(Family::Clayton, 2.0), 3))?,
            vec![0.6, 0.7, 0.8],
        ),
        (
            "outer-power clayton",
            ok(CopulaModel::archimedean(
                ok(outer_power(g(Family::Clayton, 2.0), 0.6))?,
                2,
            ))?,
            vec![0.5, 0.6],
        ),
        (
            "outer-power gumbel",
            ok(CopulaModel::archimedean(
                ok(outer_power(g(Family::Gumbel, 1.5), 0.7))?,
                2,
            ))?,
            vec![0.6, 0.6],
        ),
        (
            "product",
            ok(CopulaModel::product(vec![
                ok(CopulaModel::archimedean(g(Family::Joe, 3.0), 2))?,
                ok(CopulaModel::independence(1))?,
            ]))?,
            vec![0.5, 0.8, 0.6],
        ),
    ];
    let mut worst_dist: f64 = 0.0;
    let mut worst_z: f64 = 0.0;
    for (k, (name, m, t)) in cases.iter().enumerate() {
        let (tp, tc) = truncated(m, t)?;
        ensure(has_direct_sampler(&tc), || format!("{name}: no fast path"))?;
        let fast = ok(sample_truncated_with(
            &tc,
            n,
            &mut RngStream::with_stream(303, 2 * k as u64),
            Method::Tilted,
        ))?;
        let orc = ok(sample_truncated_with(
            &tc,
            n,
            &mut RngStream::with_stream(303, 2 * k as u64 + 1),
            Method::Oracle,
        ))?;
        let dist = ok(empirical_copula_distance(
            &fast,
            &orc,
            default_grid(m.dim()),
        ))?;
        let c = tp.c_of_t();
        let rate = orc.meta.acceptance_rate.ok_or("no acceptance rate")?;
        let z = (rate - c).abs() / (c * ((1.0 - c) / n as f64).sqrt());
        ensure(dist <= 0.015, || {
            format!("{name}: distance {dist:.4} > 0.015")
        })?;
        ensure(z <= 4.0, || {
            format!("{name}: acceptance rate {rate:.5} vs C(t) = {c:.5} ({z:.2} sigma)")
        })?;
        worst_dist = worst_dist.max(dist);
        worst_z = worst_z.max(z);
    }
    Ok(format!(
        "{} fast paths, n = {n}: max sup distance {worst_dist:.4}, max acceptance-rate deviation {worst_z:.2} sigma",
        cases.len()
    ))
}

/// Criterion 4: Tilted frailties have Laplace transform `ψ(t + h)/ψ(h)`.
fn frailty_laplace() -> Outcome {
    let n = 1_000_000;
    let families = [
        (Family::Clayton, 2.0),
        (Family::Amh, 0.7),
        (Family::Frank, 4.0),
        (Family::Gumbel, 2.0),
        (Family::Joe, 2.0),
    ];
    let mut worst_z: f64 = 0.0;
    let mut stream = 0;
    for (f, theta) in families {
        let g: ArchGenerator = ok(Generator::new(f, theta))?.into();
        for h in [0.0, psi_inv(f, theta, 0.5), psi_inv(f, theta, 0.1)] {
            let sampler = ok(FrailtySampler::new(&g, h))?;
            let mut rng = RngStream::with_stream(404, stream);
            stream += 1;
            let v: Vec<f64> = (0..n).map(|_| sampler.sample(&mut rng)).collect();
            for s in [0.25, 1.0, 4.0] {
                let w: Vec<f64> = v.iter().map(|x| (-s * x).exp()).collect();
                let mean = w.iter().sum::<f64>() / n as f64;
                let var = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                let se = (var / n as f64).sqrt();
                let expected = psi(f, theta, s + h) / psi(f, theta, h);
                let z = (mean - expected).abs() / se.max(1e-300);
                ensure(z <= 4.0 || (mean - expected).abs() <= 1e-12, || {
                    format!("{f:?} h={h:.4} t={s}: mean {mean:.6} vs {expected:.6} ({z:.2} SE)")
                })?;
                worst_z = worst_z.max(z);
            }
        }
    }
    Ok(format!(
        "5 families x 3 tilts x 3 arguments, n = {n}: max deviation {worst_z:.2} SE"
    ))
}

/// Criterion 5: Tilted Sibuya pmf and rejection efficiency.
fn tilted_sibuya() -> Outcome {
    let n = 100_000;
    let bound = 1.0 / 1.5820 - 0.01;
    let mut lines = Vec::new();
    for (k, (alpha, p)) in [(0.5, 0.51), (0.9, 0.2), (0.3, 0.8)]
        .into_iter()
        .enumerate()
    {
        let mut rng = RngStream::with_stream(505, k as u64);
        let mut counts = [0u64; 21];
        let mut attempts = 0u64;
        for _ in 0..n {
            let d = ok(sample_tilted_sibuya_with(
                alpha,
                p,
                SibuyaBranch::Auto,
                &mut rng,
            ))?;
            attempts += d.attempts;
            counts[(d.value as usize).min(21) - 1] += 1;
        }
        // p_1 = α, p_{k+1} = p_k (k − α)/(k + 1); tilted by p^k / (1 − (1 − p)^α).
        let norm = 1.0 - (1.0 - p).powf(alpha);
        let mut pk = alpha;
        let mut probs = Vec::with_capacity(21);
        for j in 1..=20 {
            probs.push(pk * p.powi(j) / norm);
            pk *= (j as f64 - alpha) / (j as f64 + 1.0);
        }
        probs.push((1.0 - probs.iter().sum::<f64>()).max(0.0));
        let (obs, pr) = merge_small_cells(&counts, &probs, n as f64, 5.0);
        let test = ok(chi_square(&obs, &pr))?;
        let rate = n as f64 / attempts as f64;
        ensure(test.passes(0.01), || {
            format!("({alpha}, {p}): chi-square p = {:.4}", test.p_value)
        })?;
        ensure(rate >= bound, || {
            format!("({alpha}, {p}): acceptance rate {rate:.4} < {bound:.4}")
        })?;
        lines.push(format!("({alpha},{p}) p={:.3} acc={rate:.3}", test.p_value));
    }
    Ok(lines.join("; "))
}

/// Criterion 6: Tail dependence of truncated copulas.
fn tail_dependence() -> Outcome {
    let target = 2.0 - 2f64.sqrt();
    let gumbel = ok(CopulaModel::archimedean(ok(Generator::gumbel(2.0))?, 2))?;
    let sg = ok(CopulaModel::survival(gumbel))?;
    let mut worst: f64 = 0.0;
    for t in [0.1, 0.3, 0.5, 0.9] {
        let r = ok(tail_dep_exchangeable_equal_t(&sg, t))?;
        worst = worst
            .max((r.lambda_lower - target).abs())
            .max(r.lambda_upper.abs());
    }
    ensure(worst <= 1e-6, || {
        format!("analytic survival Gumbel deviation {worst:.3e} > 1e-6")
    })?;

    let (_, tc) = truncated(&sg, &[0.3, 0.3])?;
    let s = ok(sample_truncated(&tc, 1_000_000, &mut RngStream::new(606)))?;
    let e = ok(empirical_tail_dep(&s, 0.02, 606))?;
    ensure((e.lambda_lower - target).abs() <= 0.05, || {
        format!(
            "empirical lambda_l {:.4} not within 0.05 of {target:.4}",
            e.lambda_lower
        )
    })?;

    // λ_u = 0 whenever h > 0.
    let mut rng = RngStream::new(607);
    let gens: Vec<ArchGenerator> = vec![
        ok(Generator::clayton(2.0))?.into(),
        ok(Generator::amh(0.7))?.into(),
        ok(Generator::frank(4.0))?.into(),
        ok(Generator::gumbel(2.0))?.into(),
        ok(Generator::joe(2.0))?.into(),
        ok(outer_power(ok(Generator::clayton(1.0))?, 0.5))?.into(),
        ok(outer_power(ok(Generator::gumbel(1.5))?, 0.8))?.into(),
    ];
    let mut worst_upper: f64 = 0.0;
    for g in &gens {
        let t = [rng.random_range(0.2..0.95), rng.random_range(0.2..0.95)];
        let m = ok(CopulaModel::archimedean(*g, 2))?;
        let h = g.psi_inv(ok(m.cdf(&t))?);
        let a = ok(tail_dep_tilted(g, h))?;
        let num = ok(tail_dep_tilted_numeric(g, h))?;
        ensure(a.lambda_upper == 0.0, || {
            format!("{g:?}: lambda_u = {}", a.lambda_upper)
        })?;
        worst_upper = worst_upper.max(num.lambda_upper);
    }
    ensure(worst_upper <= 1e-3, || {
        format!("numeric lambda_u up to {worst_upper:.3e}")
    })?;

    // λ_l^{C_t} ≥ λ_l^C with λ_l^C from the classical formulas.
    let mut min_gap = f64::INFINITY;
    for k in 0..10 {
        let theta = rng.random_range(1.2..5.0);
        let t = rng.random_range(0.05..0.95);
        let (m, lambda_c) = match k % 5 {
            0 => (
                ok(CopulaModel::archimedean(ok(Generator::clayton(theta))?, 2))?,
                2f64.powf(-1.0 / theta),
            ),
            1 => (
                ok(CopulaModel::archimedean(ok(Generator::gumbel(theta))?, 2))?,
                0.0,
            ),
            2 => (
                ok(CopulaModel::survival(ok(CopulaModel::archimedean(
                    ok(Generator::gumbel(theta))?,
                    2,
                ))?))?,
                2.0 - 2f64.powf(1.0 / theta),
            ),
            3 => (
                ok(CopulaModel::survival(ok(CopulaModel::archimedean(
                    ok(Generator::joe(theta))?,
                    2,
                ))?))?,
                2.0 - 2f64.powf(1.0 / theta),
            ),
            _ => (
                ok(CopulaModel::archimedean(ok(Generator::joe(theta))?, 2))?,
                0.0,
            ),
        };
        let r = ok(tail_dep_exchangeable_equal_t(&m, t))?;
        min_gap = min_gap.min(r.lambda_lower - lambda_c);
    }
    ensure(min_gap >= -1e-6, || {
        format!("lambda_l(C_t) - lambda_l(C) = {min_gap:.3e} < 0")
    })?;
    Ok(format!(
        "analytic dev {worst:.1e}; empirical lambda_l {:.4} (se {:.4}); max numeric lambda_u {worst_upper:.1e}; min gap {min_gap:.2e}",
        e.lambda_lower,
        e.se_lower.unwrap_or(f64::NAN)
    ))
}

/// Criterion 7: Truncated nested Archimedean copulas.
fn nested_truncation() -> Outcome {
    let clayton = ok(CopulaModel::nested(
        ok(Generator::clayton(2.0))?,
        vec![
            Sector::new(ok(Generator::clayton(6.0))?, 1),
            Sector::new(ok(Generator::clayton(6.0))?, 2),
        ],
    ))?;
    let gumbel = ok(CopulaModel::nested(
        ok(Generator::gumbel(2.0))?,
        vec![
            Sector::new(ok(Generator::gumbel(4.0))?, 1),
            Sector::new(ok(Generator::gumbel(4.0))?, 2),
        ],
    ))?;
    let points = [
        [0.2, 0.5, 0.5],
        [0.2, 0.1, 0.9],
        [0.9, 0.9, 0.9],
        [0.5, 0.5, 0.5],
    ];
    let grid: Vec<f64> = (1..100).map(|k| k as f64 / 100.0).collect();
    let mut worst_margin: f64 = 0.0;
    let mut worst_pair: f64 = 0.0;
    for (fam, m) in [(Family::Clayton, &clayton), (Family::Gumbel, &gumbel)] {
        let (th0, th1) = if fam == Family::Clayton {
            (2.0, 6.0)
        } else {
            (2.0, 4.0)
        };
        for t in &points {
            let (_, tc) = truncated(m, t)?;
            for j in 0..3 {
                for &u in &grid {
                    let mut v = [1.0; 3];
                    v[j] = u;
                    worst_margin = worst_margin.max((ok(tc.cdf(&v))? - u).abs());
                }
            }
            // C(t) = ψ₀(ψ₀⁻¹(t₁) + ψ₀⁻¹(C₁(t₂, t₃))), then the ψ₀ tilt.
            let c1 = psi(fam, th1, psi_inv(fam, th1, t[1]) + psi_inv(fam, th1, t[2]));
            let c = psi(fam, th0, psi_inv(fam, th0, t[0]) + psi_inv(fam, th0, c1));
            let h = psi_inv(fam, th0, c);
            let tilted = |s: f64| psi(fam, th0, s + h) / c;
            let tilted_inv = |x: f64| psi_inv(fam, th0, c * x) - h;
            for &u1 in grid.iter().step_by(7) {
                for &u2 in grid.iter().step_by(7) {
                    let expected = tilted(tilted_inv(u1) + tilted_inv(u2));
                    for v in [[u1, u2, 1.0], [u1, 1.0, u2]] {
                        worst_pair = worst_pair.max((ok(tc.cdf(&v))? - expected).abs());
                    }
                }
            }
        }
    }
    ensure(worst_margin <= 1e-10, || {
        format!("univariate margin deviation {worst_margin:.3e}")
    })?;
    ensure(worst_pair <= 1e-10, || {
        format!("cross-sector margin deviation {worst_pair:.3e}")
    })?;

    let mut taus = Vec::new();
    for (k, t) in [[0.2, 0.5, 0.5], [0.2, 0.1, 0.9]].iter().enumerate() {
        let (_, tc) = truncated(&clayton, t)?;
        let s = ok(sample_truncated_with(
            &tc,
            100_000,
            &mut RngStream::with_stream(707, k as u64),
            Method::Oracle,
        ))?;
        for j in [1, 2] {
            let kt = ok(empirical_kendall_tau_se(&s, 0, j))?;
            ensure((kt.tau - 0.5).abs() <= 3.0 * kt.se, || {
                format!(
                    "t={t:?} pair (1,{}): tau {:.4} +- {:.4}",
                    j + 1,
                    kt.tau,
                    kt.se
                )
            })?;
            taus.push(format!("{:.4}", kt.tau));
        }
    }
    Ok(format!(
        "margin dev {worst_margin:.1e}, cross-sector dev {worst_pair:.1e}, cross-sector taus [{}]",
        taus.join(", ")
    ))
}

/// Rectangle mass `P(U ∈ (a, b])` of a bivariate copula.
fn box_mass(c: &impl Copula, a: [f64; 2], b: [f64; 2]) -> f64 {
    let f = |x: f64, y: f64| c.cdf_unchecked(&[x.clamp(0.0, 1.0), y.clamp(0.0, 1.0)]);
    f(b[0], b[1]) - f(a[0], b[1]) - f(b[0], a[1]) + f(a[0], a[1])
}

/// Criterion 8: Truncated Marshall–Olkin copulas.
fn marshall_olkin() -> Outcome {
    let mo = ok(MarshallOlkin::new(0.2, 0.7))?;
    let model = ok(CopulaModel::marshall_olkin(0.2, 0.7))?;
    let mut rng = RngStream::new(808);
    let mut worst: f64 = 0.0;
    for t in [[0.5, 0.8], [0.8, 0.5], [0.3, 0.3], [0.9, 0.2], [1.0, 1.0]] {
        let (tp, tc) = truncated(&model, &t)?;
        let fallback = ok(truncate_numeric(&model, &tp))?;
        for u in random_points(&mut rng, 1000, 2) {
            worst = worst.max((ok(tc.cdf(&u))? - ok(fallback.cdf(&u))?).abs());
        }
    }
    ensure(worst <= 1e-10, || {
        format!("closed form vs fallback {worst:.3e}")
    })?;

    // Mass concentrates on the singular curve and both conditional
    // distribution functions jump across it.
    let mut min_ratio = f64::INFINITY;
    let mut min_jump = f64::INFINITY;
    let eps = 1e-3;
    let (delta, step) = (1e-4, 1e-6);
    for t in [[0.5, 0.8], [0.8, 0.5]] {
        let tp = ok(TruncationPoint::new(&mo, &t))?;
        let tm = ok(truncate_mo(&mo, &tp))?;
        let d1 = |x: f64, y: f64| {
            (tm.cdf_unchecked(&[x + step, y]) - tm.cdf_unchecked(&[x - step, y])) / (2.0 * step)
        };
        let d2 = |x: f64, y: f64| {
            (tm.cdf_unchecked(&[x, y + step]) - tm.cdf_unchecked(&[x, y - step])) / (2.0 * step)
        };
        let upper = tm.breakpoint().min(1.0);
        for frac in [0.3, 0.5, 0.7] {
            let u1 = frac * upper;
            let Some(u2) = tm.singular_curve(u1) else {
                return Err(format!("t={t:?}: no curve point above u1 = {u1}"));
            };
            ensure(u2 > 0.05 && u2 < 0.95, || {
                format!("t={t:?}: curve point {u2} too close to the border")
            })?;
            let on = box_mass(&tm, [u1 - eps, u2 - eps], [u1 + eps, u2 + eps]);
            let shift = if u2 < 0.5 { 0.05 } else { -0.05 };
            let off = box_mass(
                &tm,
                [u1 - eps, u2 + shift - eps],
                [u1 + eps, u2 + shift + eps],
            );
            min_ratio = min_ratio.min(on / off.max(1e-300));
            let jump1 = d1(u1, u2 + delta) - d1(u1, u2 - delta);
            let jump2 = d2(u1 + delta, u2) - d2(u1 - delta, u2);
            let ambient1 = (d1(u1, u2 + shift + delta) - d1(u1, u2 + shift - delta)).abs();
            let ambient2 = (d2(u1 + delta, u2 + shift) - d2(u1 - delta, u2 + shift)).abs();
            ensure(jump1 > 10.0 * ambient1 && jump2 > 10.0 * ambient2, || {
                format!("t={t:?} u1={u1:.3}: jumps {jump1:.3e}/{jump2:.3e} vs ambient {ambient1:.3e}/{ambient2:.3e}")
            })?;
            min_jump = min_jump.min(jump1).min(jump2);
        }
    }
    ensure(min_ratio > 10.0, || {
        format!("box-mass ratio {min_ratio:.2} <= 10")
    })?;

    let (_, small) = truncated(&model, &[1e-4, 1e-4])?;
    let mut limit: f64 = 0.0;
    for u in unit_grid(50) {
        limit = limit.max((ok(small.cdf(&u))? - u[0] * u[1]).abs());
    }
    ensure(limit < 5e-3, || {
        format!("equal-threshold limit deviation {limit:.3e} >= 5e-3")
    })?;
    Ok(format!(
        "fallback dev {worst:.1e}; min box-mass ratio {min_ratio:.0}; min conditional jump {min_jump:.3}; t=1e-4 dev {limit:.2e}"
    ))
}

/// Criterion 9: `C_t(u^α) = C_{t^{1/α}}(u)^α` for the (extreme value) Marshall–Olkin copula.
fn ev_scaling() -> Outcome {
    let mo = ok(MarshallOlkin::new(0.2, 0.7))?;
    let model = ok(CopulaModel::marshall_olkin(0.2, 0.7))?;
    let grid = unit_grid(30);
    let coarse = unit_grid(10);
    let mut worst: f64 = 0.0;
    for alpha in [0.5, 1.0, 2.0] {
        for t in [[0.5, 0.8], [0.8, 0.5], [0.25, 0.49], [0.9, 0.3]] {
            worst = worst.max(ok(ev_scaling_check(&mo, &t, alpha, &grid))?);
            // The same identity through the bisection fallback.
            let ts: Vec<f64> = t.iter().map(|x: &f64| x.powf(1.0 / alpha)).collect();
            let lhs = ok(truncate_numeric(
                &model,
                &ok(TruncationPoint::new(&model, &t))?,
            ))?;
            let rhs = ok(truncate_numeric(
                &model,
                &ok(TruncationPoint::new(&model, &ts))?,
            ))?;
            for u in &coarse {
                let a = lhs.cdf_unchecked(&[u[0].powf(alpha), u[1].powf(alpha)]);
                worst = worst.max((a - rhs.cdf_unchecked(u).powf(alpha)).abs());
            }
        }
    }
    ensure(worst <= 1e-9, || {
        format!("max deviation {worst:.3e} > 1e-9")
    })?;
    Ok(format!(
        "alpha in {{0.5, 1, 2}}, 4 truncation points: max deviation {worst:.2e}"
    ))
}

/// Criterion 10: `ψ(h + hs)/ψ(h)` tends to a Clayton generator as `h → ∞`.
fn limiting_clayton() -> Outcome {
    let s_grid: Vec<f64> = (0..=400).map(|k| 0.025 * k as f64).collect();
    let cases: Vec<(&str, ArchGenerator, f64)> = vec![
        ("clayton(2)", ok(Generator::clayton(2.0))?.into(), 2.0),
        (
            "outer-power clayton(2, 0.8)",
            ok(outer_power(ok(Generator::clayton(2.0))?, 0.8))?.into(),
            2.0 / 0.8,
        ),
    ];
    let mut lines = Vec::new();
    for (name, g, theta_lim) in cases {
        let mut errs = Vec::new();
        for h in [1e1, 1e2, 1e3, 1e4] {
            let tg = ok(g.tilt(h))?;
            let e = s_grid
                .iter()
                .map(|&s| (tg.psi(h * s) - (1.0 + s).powf(-1.0 / theta_lim)).abs())
                .fold(0.0, f64::max);
            errs.push(e);
        }
        ensure(errs.windows(2).all(|w| w[1] < w[0]), || {
            format!("{name}: errors not decreasing {errs:?}")
        })?;
        ensure(errs[3] < 1e-3, || {
            format!("{name}: error {:.3e} at h = 1e4", errs[3])
        })?;
        lines.push(format!("{name}: {:.1e} -> {:.1e}", errs[0], errs[3]));
    }
    Ok(lines.join("; "))
}

/// Criterion 11: Kendall distribution of truncated Archimedean copulas.
fn kendall_distribution() -> Outcome {
    let n = 100_000;
    let mut min_p = f64::INFINITY;
    let mut stream = 0;
    for (f, theta) in [
        (Family::Clayton, 2.0),
        (Family::Gumbel, 2.0),
        (Family::Joe, 2.0),
    ] {
        let g: ArchGenerator = ok(Generator::new(f, theta))?.into();
        for t in [
            vec![0.5, 0.5],
            vec![0.3, 0.8],
            vec![0.6, 0.6, 0.6],
            vec![0.4, 0.7, 0.9],
        ] {
            let m = ok(CopulaModel::archimedean(g, t.len()))?;
            let (tp, tc) = truncated(&m, &t)?;
            let s = ok(sample_truncated(
                &tc,
                n,
                &mut RngStream::with_stream(1111, stream),
            ))?;
            stream += 1;
            let w: Vec<f64> = s.rows().map(|r| tc.cdf_unchecked(r)).collect();
            let ks = ok(ks_test(&w, |u| {
                kendall_dist_truncated(&g, &tp, u.clamp(0.0, 1.0)).unwrap_or(f64::NAN)
            }))?;
            ensure(ks.passes(0.01), || {
                format!("{f:?} t={t:?}: KS p = {:.4}", ks.p_value)
            })?;
            min_p = min_p.min(ks.p_value);
        }
    }
    Ok(format!(
        "3 families x d in {{2, 3}} x 2 points, n = {n}: min KS p-value {min_p:.3}"
    ))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("closure identities", 5, closure_identities),
        ("general-formula consistency", 30, general_formula),
        ("oracle equivalence", 120, oracle_equivalence),
        ("tilted-frailty Laplace transforms", 60, frailty_laplace),
        ("tilted-Sibuya sampler", 30, tilted_sibuya),
        ("tail dependence", 120, tail_dependence),
        ("nested truncation", 120, nested_truncation),
        ("Marshall-Olkin truncation", 30, marshall_olkin),
        ("extreme-value scaling", 5, ev_scaling),
        ("limiting Clayton", 5, limiting_clayton),
        ("Kendall distribution", 60, kendall_distribution),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.iter().any(|f| *f == id || name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|detail| {
            if elapsed <= Duration::from_secs(*budget) {
                Ok(detail)
            } else {
                Err(format!("{detail}; over the {budget} s budget"))
            }
        });
        let secs = elapsed.as_secs_f64();
        match outcome {
            Ok(detail) => println!(
                "criterion {id:>2} PASS  {name} ({secs:.2} s, budget {budget} s): {detail}"
            ),
            Err(detail) => {
                failed += 1;
                println!(
                    "criterion {id:>2} FAIL  {name} ({secs:.2} s, budget {budget} s): {detail}"
                );
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
