use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use psdcone::generators::{random_psd, random_semilinear};
use psdcone::lebesgue::decompose;
use psdcone::preserver::Flavor;
use psdcone::projective::reconstruct_semilinear;
use psdcone::relations::analyze_pair;
use psdcone::{rank, Complex64, GaussianRational, Tol};

type Q = GaussianRational;

fn exact_kernels(c: &mut Criterion) {
    let mut g = c.benchmark_group("exact");
    for n in [3usize, 5, 8] {
        let a = random_psd::<Q>(n, n - 1, 1).unwrap();
        let b = random_psd::<Q>(n, n / 2, 2).unwrap();
        g.bench_with_input(BenchmarkId::new("rank", n), &a, |bch, a| {
            bch.iter(|| rank(black_box(a.matrix())))
        });
        g.bench_with_input(BenchmarkId::new("matmul", n), &(&a, &b), |bch, (a, b)| {
            bch.iter(|| black_box(a.matrix()) * black_box(b.matrix()))
        });
        g.bench_with_input(BenchmarkId::new("analyze_pair", n), &(&a, &b), |bch, (a, b)| {
            bch.iter(|| analyze_pair(black_box(*a), black_box(*b), &Tol::default()).unwrap())
        });
    }
    g.finish();
}

fn float_kernels(c: &mut Criterion) {
    let mut g = c.benchmark_group("float");
    let tol = Tol::uniform(1e-8);
    for n in [3usize, 5, 8, 16] {
        let a = random_psd::<Complex64>(n, n, 3).unwrap();
        let b = random_psd::<Complex64>(n, n / 2, 4).unwrap();
        g.bench_with_input(BenchmarkId::new("analyze_pair", n), &(&a, &b), |bch, (a, b)| {
            bch.iter(|| analyze_pair(black_box(*a), black_box(*b), &tol).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("decompose", n), &(&a, &b), |bch, (a, b)| {
            bch.iter(|| decompose(black_box(*a), black_box(*b), &tol).unwrap())
        });
    }
    g.finish();
}

fn reconstruction(c: &mut Criterion) {
    let mut g = c.benchmark_group("reconstruct");
    for n in [3usize, 4, 6] {
        let t = random_semilinear(n, 5, Flavor::Conjugate).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &t, |bch, t| {
            bch.iter(|| reconstruct_semilinear(black_box(t), n).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, exact_kernels, float_kernels, reconstruction);
criterion_main!(benches);
