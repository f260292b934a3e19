use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use trunca::copulas::{truncate_numeric, Sector};
use trunca::frailty::{sample_tilted_sibuya, sample_tilted_stable, FrailtySampler};
use trunca::{truncate_general, Copula, CopulaModel, Family, Generator, Psi, RngStream};
use trunca_bench::{clayton2, grid2, mo, point};

fn generators(c: &mut Criterion) {
    let mut group = c.benchmark_group("generator");
    for f in [
        Family::Clayton,
        Family::Amh,
        Family::Frank,
        Family::Gumbel,
        Family::Joe,
    ] {
        let theta = if f == Family::Amh { 0.7 } else { 2.0 };
        let g = Generator::new(f, theta).unwrap();
        group.bench_with_input(BenchmarkId::new("psi_inv_psi", f.name()), &g, |b, g| {
            b.iter(|| g.psi_inv(g.psi(black_box(0.7))))
        });
    }
    group.finish();
}

fn truncated_cdf(c: &mut Criterion) {
    let pts = grid2(20);
    let mut group = c.benchmark_group("truncated_cdf");
    let nested = CopulaModel::nested(
        Generator::clayton(2.0).unwrap(),
        vec![
            Sector::new(Generator::clayton(6.0).unwrap(), 1),
            Sector::new(Generator::clayton(6.0).unwrap(), 2),
        ],
    )
    .unwrap();
    let cases = [
        ("clayton", clayton2(), vec![0.5, 0.5]),
        ("marshall_olkin", mo(), vec![0.5, 0.8]),
        ("nested_clayton", nested, vec![0.2, 0.5, 0.5]),
    ];
    for (name, m, t) in cases {
        let tp = point(&m, &t);
        let closed = truncate_general(&m, &tp).unwrap();
        let numeric = truncate_numeric(&m, &tp).unwrap();
        let d = m.dim();
        let rows: Vec<Vec<f64>> = pts
            .iter()
            .map(|p| (0..d).map(|j| p[j % 2]).collect())
            .collect();
        group.bench_function(BenchmarkId::new("closed_form", name), |b| {
            b.iter(|| rows.iter().map(|u| closed.cdf_unchecked(u)).sum::<f64>())
        });
        group.bench_function(BenchmarkId::new("bisection", name), |b| {
            b.iter(|| rows.iter().map(|u| numeric.cdf_unchecked(u)).sum::<f64>())
        });
    }
    group.finish();
}

fn frailties(c: &mut Criterion) {
    let mut group = c.benchmark_group("frailty");
    let mut rng = RngStream::new(1);
    for h in [0.1, 1.0, 10.0] {
        group.bench_with_input(BenchmarkId::new("tilted_stable", h), &h, |b, &h| {
            b.iter(|| sample_tilted_stable(0.5, h, &mut rng).unwrap())
        });
    }
    for (alpha, p) in [(0.5, 0.51), (0.9, 0.2), (0.3, 0.8)] {
        group.bench_function(
            BenchmarkId::new("tilted_sibuya", format!("{alpha}_{p}")),
            |b| b.iter(|| sample_tilted_sibuya(alpha, p, &mut rng).unwrap()),
        );
    }
    let frank = Generator::frank(4.0).unwrap().into();
    let sampler = FrailtySampler::new(&frank, 1.5).unwrap();
    group.bench_function("tilted_log", |b| b.iter(|| sampler.sample(&mut rng)));
    group.finish();
}

criterion_group!(benches, generators, truncated_cdf, frailties);
criterion_main!(benches);
